"""Local HTTP+JSON service over the registry, measurement, and view
operations. All lengths are meters; times are ISO-8601 UTC.
"""
from __future__ import annotations

import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import measure as measure_mod
from .errors import (
    NotFound,
    TmmError,
)
from .measure import MeasurementSession, session_report
from .registry import LayerRegistry
from .spatial import LIVE, Ray, ray_cast
from .transform import ViewState, manipulate_view, rigid_from_parts

_STATUS = {
    "NotFound": 404,
    "CapacityExceeded": 409,
    "StorageFailure": 500,
    "NoHit": 404,
    "MalformedDocument": 400,
    "SchemaViolation": 400,
    "UnsupportedVersion": 400,
    "NonPositiveScale": 400,
    "OrdinalOutOfRange": 400,
}


class _Sessions:
    """Token -> measurement session + view state; created on first use."""

    def __init__(self):
        self._lock = threading.Lock()
        self._by_token: dict[str, tuple[MeasurementSession, ViewState]] = {}

    def get(self, token: str):
        with self._lock:
            if token not in self._by_token:
                self._by_token[token] = (MeasurementSession(), ViewState())
            return self._by_token[token]

    def set_view(self, token: str, view: ViewState):
        with self._lock:
            session, _ = self._by_token.get(token) or (MeasurementSession(), None)
            self._by_token[token] = (session, view)


def _mesh_payload(meshes):
    """Flat arrays for rendering: positions x3 and indices x3 per mesh."""
    out = []
    for m in meshes:
        out.append(
            {
                "positions": [float(x) for x in m.vertices.ravel()],
                "indices": [int(i) for i in m.triangles.ravel()],
            }
        )
    return out


def _parse_ray(body) -> Ray:
    try:
        o = body["origin"]
        d = body["direction"]
        return Ray(np.asarray(o, dtype=float), np.asarray(d, dtype=float))
    except (KeyError, TypeError, ValueError) as exc:
        raise TmmError(f"bad ray payload: {exc}") from None


def create_app(library_path) -> FastAPI:
    app = FastAPI(title="tmm")
    registry = LayerRegistry(library_path)
    sessions = _Sessions()
    app.state.registry = registry
    app.state.sessions = sessions

    @app.exception_handler(TmmError)
    async def _tmm_error(request: Request, exc: TmmError):
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 400),
            content={"error": exc.code, "message": str(exc)},
        )

    @app.get("/api/snapshots")
    def list_snapshots():
        return {"snapshots": registry.list_rooms()}

    @app.post("/api/snapshots")
    def save_snapshot():
        sid = registry.save_room()
        return {"id": sid}

    @app.post("/api/snapshots/{sid}/load")
    def load_snapshot(sid: str):
        layers = registry.load_rooms([sid])
        return {"loaded": layers}

    @app.delete("/api/snapshots/{sid}/load")
    def unload_snapshot(sid: str):
        registry.unload_room(sid)
        return {"unloaded": sid}

    @app.get("/api/layers")
    def layers():
        return {
            "live": {
                "visible": registry.live.visible,
                "mesh_count": len(registry.live.meshes),
            },
            "loaded": registry.loaded_layers(),
        }

    @app.get("/api/layers/{layer_id}/mesh")
    def layer_mesh(layer_id: str):
        if layer_id in (LIVE, "live"):
            return {
                "layer": LIVE,
                "color": None,
                "timestamp": None,
                "meshes": _mesh_payload(registry.live.meshes),
            }
        for layer in registry.loaded:
            if layer.snapshot.id == layer_id:
                return {
                    "layer": layer_id,
                    "color": list(layer.color),
                    "color_name": layer.color_name,
                    "timestamp": layer.snapshot.timestamp.to_iso(),
                    "meshes": _mesh_payload(layer.snapshot.world_meshes()),
                }
        raise NotFound(f"layer {layer_id} is not loaded")

    @app.post("/api/raycast")
    async def raycast(request: Request):
        body = await request.json()
        ray = _parse_ray(body)
        targets = registry.ray_targets(layers=body.get("layers"))
        hit = ray_cast(targets, ray)
        if hit is None:
            return {"hit": None}
        return {
            "hit": {
                "point": [float(c) for c in hit.point],
                "ray_distance": hit.ray_distance,
                "layer": hit.layer_id,
                "timestamp": hit.timestamp.to_iso() if hit.timestamp else None,
                "mesh_index": hit.mesh_index,
                "triangle_index": hit.triangle_index,
            }
        }

    @app.post("/api/sessions/{token}/pins")
    async def add_pin(token: str, request: Request):
        body = await request.json()
        session, _ = sessions.get(token)
        ray = _parse_ray(body.get("ray", body))
        targets = registry.ray_targets(
            layers=body.get("layers"), include_hidden=session.include_hidden
        )
        pin = measure_mod.place_pin(session, targets, ray)
        segments = session_report(session)
        return {
            "pin": pin.as_dict(),
            "segments": segments,
            "label": segments[-1]["distance_display"] if segments else None,
        }

    @app.delete("/api/sessions/{token}/pins")
    def clear_pins(token: str):
        session, _ = sessions.get(token)
        measure_mod.clear_measurements(session)
        return {"cleared": True}

    @app.put("/api/sessions/{token}/settings")
    async def settings(token: str, request: Request):
        body = await request.json()
        session, _ = sessions.get(token)
        if "mode" in body:
            measure_mod.set_mode(session, body["mode"])
        if "units" in body:
            measure_mod.set_units(session, body["units"])
        if "font_base" in body:
            measure_mod.set_font_size(session, body["font_base"])
        if "line_width" in body:
            measure_mod.set_line_width(session, body["line_width"])
        return {
            "units": session.units,
            "font_base": session.font_base,
            "line_width": session.line_width,
            "mode": session.mode,
        }

    @app.put("/api/sessions/{token}/view")
    async def view(token: str, request: Request):
        body = await request.json()
        session, current = sessions.get(token)
        delta = None
        if "rotation" in body or "translation" in body:
            rot = body.get("rotation", np.eye(3).tolist())
            tra = body.get("translation", [0.0, 0.0, 0.0])
            delta = rigid_from_parts(np.asarray(rot, float), tra)
        updated = manipulate_view(current, float(body.get("scale", 1.0)), delta)
        sessions.set_view(token, updated)
        return {"scale": updated.scale}

    @app.get("/api/sessions/{token}/measurements")
    def measurements(token: str):
        session, _ = sessions.get(token)
        return {"measurements": session_report(session), "units": session.units}

    return app


def serve(port: int, library_path):
    """Run the service until interrupted."""
    import uvicorn

    app = create_app(library_path)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
