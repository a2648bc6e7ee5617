"""Pin placement by ray cast and distance / elapsed-time measurement across
layers, plus session display settings (units, font, line width).

Distances are always stored in meters; units only affect formatting.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoHit, TmmError
from .meshcore import Timestamp
from .spatial import LIVE, Hit, Ray, ray_cast

# display factor and decimals per unit
UNITS = {
    "m": (1.0, 2),
    "cm": (100.0, 2),
    "ft": (3.28084, 4),
    "in": (39.3701, 2),
}

DEFAULT_UNITS = "m"
DEFAULT_FONT_BASE = 1.0
DEFAULT_LINE_WIDTH = 0.01  # meters

MODE_DISTANCE = "Distance"
MODE_QUICK = "QuickMeasure"

FONT_REF_DISTANCE_M = 1.0
FONT_CLAMP = (0.25, 8.0)


@dataclass
class Pin:
    position: np.ndarray
    source_layer: str
    source_time: Timestamp
    movable: bool = True

    def as_dict(self) -> dict:
        x, y, z = (float(c) for c in self.position)
        return {
            "x": x,
            "y": y,
            "z": z,
            "layer": self.source_layer,
            "time": self.source_time.to_iso(),
        }


@dataclass
class Segment:
    a: Pin
    b: Pin

    @property
    def distance_m(self) -> float:
        return float(np.linalg.norm(self.b.position - self.a.position))

    @property
    def elapsed_s(self) -> float:
        return abs(self.b.source_time.seconds_since(self.a.source_time))


@dataclass(frozen=True)
class MeasurementResult:
    distance_m: float
    elapsed_s: float
    pin_from: Pin
    pin_to: Pin


@dataclass
class MeasurementSession:
    """One client's ordered pins; segments chain successive placements."""

    pins: list = field(default_factory=list)
    units: str = DEFAULT_UNITS
    font_base: float = DEFAULT_FONT_BASE
    line_width: float = DEFAULT_LINE_WIDTH
    mode: str = MODE_DISTANCE
    include_hidden: bool = False
    target_layers: set | None = None  # None = all visible layers

    @property
    def segments(self) -> list[Segment]:
        return [Segment(a, b) for a, b in zip(self.pins, self.pins[1:])]


def format_distance(distance_m: float, units: str) -> str:
    if units not in UNITS:
        raise TmmError(f"unknown units {units!r}; pick one of {sorted(UNITS)}")
    factor, decimals = UNITS[units]
    return f"{distance_m * factor:.{decimals}f} {units}"


def _pin_from_hit(hit: Hit, now: Timestamp | None) -> Pin:
    if hit.layer_id == LIVE or hit.timestamp is None:
        when = now or Timestamp.now()
        layer = LIVE
    else:
        when = hit.timestamp
        layer = hit.layer_id
    return Pin(position=hit.point, source_layer=layer, source_time=when)


def place_pin(session: MeasurementSession, targets, ray: Ray, now: Timestamp | None = None) -> Pin:
    """Cast into the target layers and append a pin at the hit.

    ``targets`` is an ordered LayerIndex list (see registry.ray_targets).
    A LIVE hit is timestamped at the placement instant.
    """
    hit = ray_cast(targets, ray)
    if hit is None:
        raise NoHit("ray misses every targeted layer")
    pin = _pin_from_hit(hit, now)
    session.pins.append(pin)
    return pin


def move_pin(session: MeasurementSession, pin_index: int, targets, ray: Ray,
             now: Timestamp | None = None) -> Pin:
    """Re-cast an existing pin; incident segments derive from the new position."""
    if not 0 <= pin_index < len(session.pins):
        raise NoHit(f"no pin at index {pin_index}")
    if not session.pins[pin_index].movable:
        raise TmmError(f"pin {pin_index} is not movable")
    hit = ray_cast(targets, ray)
    if hit is None:
        raise NoHit("ray misses every targeted layer")
    pin = _pin_from_hit(hit, now)
    session.pins[pin_index] = pin
    return pin


def measure_between(a: Pin, b: Pin) -> MeasurementResult:
    return MeasurementResult(
        distance_m=float(np.linalg.norm(b.position - a.position)),
        elapsed_s=abs(b.source_time.seconds_since(a.source_time)),
        pin_from=a,
        pin_to=b,
    )


def clear_measurements(session: MeasurementSession):
    """Drop pins (and therefore segments); display settings are retained."""
    session.pins.clear()


def set_units(session: MeasurementSession, units: str):
    if units not in UNITS:
        raise TmmError(f"unknown units {units!r}; pick one of {sorted(UNITS)}")
    session.units = units


def set_font_size(session: MeasurementSession, font_base: float):
    if not font_base > 0:
        raise TmmError("font size must be positive")
    session.font_base = float(font_base)


def set_line_width(session: MeasurementSession, line_width: float):
    if not line_width > 0:
        raise TmmError("line width must be positive")
    session.line_width = float(line_width)


def set_mode(session: MeasurementSession, mode: str):
    if mode not in (MODE_DISTANCE, MODE_QUICK):
        raise TmmError(f"unknown mode {mode!r}")
    session.mode = mode
    if mode == MODE_QUICK:
        session.units = DEFAULT_UNITS
        session.font_base = DEFAULT_FONT_BASE
        session.line_width = DEFAULT_LINE_WIDTH


def font_scale(font_base: float, viewer_distance_m: float) -> float:
    """Rendered size growing linearly with distance (clamped), which keeps the
    projected angular size constant inside the clamp range."""
    if not viewer_distance_m > 0:
        raise TmmError("viewer distance must be positive")
    factor = viewer_distance_m / FONT_REF_DISTANCE_M
    factor = min(max(factor, FONT_CLAMP[0]), FONT_CLAMP[1])
    return font_base * factor


def session_report(session: MeasurementSession) -> list[dict]:
    """JSON-ready measurement report for the CLI and service."""
    out = []
    for seg in session.segments:
        out.append(
            {
                "from": seg.a.as_dict(),
                "to": seg.b.as_dict(),
                "distance_m": seg.distance_m,
                "distance_display": format_distance(seg.distance_m, session.units),
                "elapsed_s": seg.elapsed_s,
            }
        )
    return out
