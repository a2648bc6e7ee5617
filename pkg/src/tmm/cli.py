"""Command-line surface. One subcommand per interface key, plus ranking,
scenario execution, and the HTTP service.

Registry state (live scan, loaded layers, pins) persists between invocations
in a small state file next to the snapshot library, so the CLI behaves like
one long-running inspection session.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import measure as measure_mod
from . import meshcore, ranker, scenesim, spatial
from .errors import NotFound, TmmError
from .measure import MeasurementSession, Pin, session_report
from .meshcore import Timestamp
from .registry import LayerRegistry, LoadedLayer
from .spatial import LIVE, Ray
from .meshcore import Snapshot

DEFAULT_PORT = 7700
STATE_NAME = "state.json"
LIVE_SCAN_NAME = "live.tmm.xml"


def _library_path(args) -> Path:
    if args.library:
        return Path(args.library)
    return Path(os.environ.get("TMM_LIBRARY", "tmm_library"))


def _state_path(lib: Path) -> Path:
    return lib / STATE_NAME


def _load_state(lib: Path) -> dict:
    path = _state_path(lib)
    if path.exists():
        return json.loads(path.read_text())
    return {"loaded": [], "live_visible": True, "pins": []}


def _save_state(lib: Path, state: dict):
    _state_path(lib).write_text(json.dumps(state, indent=2))


def _restore_registry(lib: Path, state: dict) -> LayerRegistry:
    reg = LayerRegistry(lib)
    reg.live.visible = state.get("live_visible", True)
    live_file = lib / LIVE_SCAN_NAME
    if live_file.exists():
        snap = meshcore.deserialize_snapshot(live_file.read_bytes())
        reg.live.meshes = snap.world_meshes()
    by_id = {e["id"]: e for e in reg._read_manifest()}
    for item in state.get("loaded", []):
        entry = by_id.get(item["id"])
        if entry is None:
            continue
        doc = (lib / entry["file"]).read_bytes()
        snap = meshcore.deserialize_snapshot(doc)
        snap = Snapshot(
            meshes=snap.meshes,
            timestamp=snap.timestamp,
            anchor_pose=snap.anchor_pose,
            id=item["id"],
        )
        reg.loaded.append(
            LoadedLayer(snap, item["ordinal"], spatial.build_index(snap, layer_id=item["id"]))
        )
    return reg


def _store_registry(lib: Path, reg: LayerRegistry, state: dict):
    state["live_visible"] = reg.live.visible
    state["loaded"] = [
        {"id": l.snapshot.id, "ordinal": l.color_ordinal} for l in reg.loaded
    ]
    _save_state(lib, state)


def _restore_session(state: dict) -> MeasurementSession:
    session = MeasurementSession(units=state.get("units", "m"))
    for p in state.get("pins", []):
        session.pins.append(
            Pin(
                position=np.array([p["x"], p["y"], p["z"]]),
                source_layer=p["layer"],
                source_time=Timestamp.from_iso(p["time"]),
            )
        )
    return session


def _store_session(state: dict, session: MeasurementSession):
    state["pins"] = [p.as_dict() for p in session.pins]
    state["units"] = session.units


def _parse_pin_spec(spec: str, reg: LayerRegistry, session: MeasurementSession):
    """Pin from 'x,y,z@layer' (trusted point) or 'ray:ox,oy,oz/dx,dy,dz'."""
    if spec.startswith("ray:"):
        try:
            o_str, d_str = spec[4:].split("/")
            origin = [float(x) for x in o_str.split(",")]
            direction = np.array([float(x) for x in d_str.split(",")])
        except ValueError:
            raise TmmError(f"bad ray pin spec {spec!r}") from None
        direction = direction / np.linalg.norm(direction)
        ray = Ray(np.array(origin), direction)
        return measure_mod.place_pin(session, reg.ray_targets(), ray)
    try:
        coords, _, layer = spec.partition("@")
        x, y, z = (float(c) for c in coords.split(","))
    except ValueError:
        raise TmmError(f"bad pin spec {spec!r}") from None
    layer = layer or "live"
    if layer in ("live", LIVE):
        pin = Pin(np.array([x, y, z]), LIVE, Timestamp.now())
    else:
        entry = next((e for e in reg.list_rooms() if e["id"] == layer), None)
        if entry is None:
            raise NotFound(f"no snapshot with id {layer}")
        pin = Pin(np.array([x, y, z]), layer, Timestamp.from_iso(entry["timestamp"]))
    session.pins.append(pin)
    return pin


def _cmd_save(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    if not reg.live.meshes:
        raise TmmError("no live scan; run 'tmm reset --scan <file>' first")
    sid = reg.save_room()
    _store_registry(lib, reg, state)
    print(sid)
    return 0


def _cmd_load(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    layers = reg.load_rooms(args.ids)
    _store_registry(lib, reg, state)
    for layer in layers:
        print(f"{layer['id']}  {layer['timestamp']}  {layer['color_name']}")
    return 0


def _cmd_unload(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    reg.unload_room(args.id)
    _store_registry(lib, reg, state)
    return 0


def _cmd_list(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    for row in reg.list_rooms():
        flag = row["color_name"] if row["loaded"] else "-"
        print(f"{row['id']}  {row['timestamp']}  {row['vertex_count']}  {flag}")
    return 0


def _cmd_toggle_live(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    visible = reg.toggle_realtime_mesh()
    _store_registry(lib, reg, state)
    print("visible" if visible else "hidden")
    return 0


def _cmd_reset(args):
    lib = _library_path(args)
    lib.mkdir(parents=True, exist_ok=True)
    state = _load_state(lib)
    doc = Path(args.scan).read_bytes()
    snap = meshcore.deserialize_snapshot(doc)  # validates the file
    (lib / LIVE_SCAN_NAME).write_bytes(doc)
    reg = _restore_registry(lib, state)
    _store_registry(lib, reg, state)
    print(f"live scan: {snap.vertex_count} vertices")
    return 0


def _cmd_measure(args):
    lib = _library_path(args)
    state = _load_state(lib)
    reg = _restore_registry(lib, state)
    session = _restore_session(state)
    if args.units:
        measure_mod.set_units(session, args.units)
    for spec in args.pin or []:
        _parse_pin_spec(spec, reg, session)
    report = session_report(session)
    _store_session(state, session)
    _save_state(lib, state)
    for seg in report:
        print(f"{seg['distance_display']}  elapsed {seg['elapsed_s']:.3f} s")
    if args.json:
        Path(args.json).write_text(json.dumps(report, indent=2))
    return 0


def _cmd_clear(args):
    lib = _library_path(args)
    state = _load_state(lib)
    state["pins"] = []
    _save_state(lib, state)
    return 0


def _cmd_rank(args):
    schema = ranker.load_schema(args.schema)
    devices = ranker.load_devices_csv(args.devices)
    report = ranker.rank(devices, schema, pre_normalized=args.pre_normalized)
    print(ranker.format_table(report))
    if args.json:
        payload = [
            {"device": e.name, "score": e.score, "gate": e.gate, "contributions": e.contributions}
            for e in report.entries
        ]
        Path(args.json).write_text(json.dumps(payload, indent=2))
    return 0


def _cmd_scenario_run(args):
    path = Path(args.file)
    if not path.exists():
        builtin = scenesim.fixture_path(path.stem)
        if builtin.exists():
            path = builtin
        else:
            raise NotFound(f"no scenario file {args.file}")
    script = scenesim.load_script(path)
    import tempfile

    library = args.library or tempfile.mkdtemp(prefix="tmm_scenario_")
    report = scenesim.run_scenario(
        script,
        library,
        seed=args.seed,
        noise_sigma=args.noise_sigma,
        pin_jitter=args.pin_jitter,
    )
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2))
    for m in report["measurements"]:
        print(
            f"measured {m['measured_m']:.6f} m  "
            f"(ground truth {m['ground_truth_m']:.6f} m, elapsed {m['elapsed_s']:.0f} s)"
        )
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{report['name']}: {status}")
    return 0 if report["passed"] else 1


def _cmd_serve(args):
    from . import service

    service.serve(args.port, _library_path(args))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmm", description="Time-machine mesh measurement")
    parser.add_argument("--library", help="snapshot library directory (default $TMM_LIBRARY)")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("save", help="save the live scan as a snapshot").set_defaults(fn=_cmd_save)

    p = sub.add_parser("load", help="load snapshots as overlay layers")
    p.add_argument("ids", nargs="+")
    p.set_defaults(fn=_cmd_load)

    p = sub.add_parser("unload", help="unload an overlay layer")
    p.add_argument("id")
    p.set_defaults(fn=_cmd_unload)

    sub.add_parser("list", help="list library snapshots").set_defaults(fn=_cmd_list)
    sub.add_parser("toggle-live", help="show/hide the live scan").set_defaults(fn=_cmd_toggle_live)

    p = sub.add_parser("reset", help="replace the live scan from a snapshot file")
    p.add_argument("--scan", required=True)
    p.set_defaults(fn=_cmd_reset)

    p = sub.add_parser("measure", help="place pins and report distances")
    p.add_argument("--pin", action="append", help="x,y,z@layer or ray:ox,oy,oz/dx,dy,dz")
    p.add_argument("--units", choices=sorted(measure_mod.UNITS))
    p.add_argument("--json", help="write the measurement report to this file")
    p.set_defaults(fn=_cmd_measure)

    sub.add_parser("clear", help="clear all pins").set_defaults(fn=_cmd_clear)

    p = sub.add_parser("rank", help="score AR devices")
    p.add_argument("devices")
    p.add_argument("--schema", required=True)
    p.add_argument("--pre-normalized", action="store_true")
    p.add_argument("--json", help="write the score report to this file")
    p.set_defaults(fn=_cmd_rank)

    p_scen = sub.add_parser("scenario", help="scenario tools")
    scen_sub = p_scen.add_subparsers(dest="scenario_command", required=True)
    p = scen_sub.add_parser("run", help="execute a scripted scenario")
    p.add_argument("file", help="scenario file or built-in fixture name")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-sigma", type=float, default=None)
    p.add_argument("--pin-jitter", type=float, default=None)
    p.add_argument("--report", help="write the JSON report to this file")
    p.add_argument("--library", dest="library", default=None,
                   help="persist the scenario's snapshot library here")
    p.set_defaults(fn=_cmd_scenario_run)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--port", type=int, default=DEFAULT_PORT)
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except TmmError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
