"""Necessity-gated weighted scoring of AR devices.

Composite score S = (product of necessary-parameter gates) x sum of
column_weight * fraction over the weighted parameters. Fractions come from
a best-value ratio (higher-better: value/best; lower-better: best/value) or
are supplied pre-normalized.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import MissingValue, NonPositiveValue, TmmError

HIGHER_BETTER = "higher"
LOWER_BETTER = "lower"


@dataclass(frozen=True)
class ParameterSchema:
    name: str
    column_weight: float = 1.0
    direction: str = HIGHER_BETTER
    necessary: bool = False

    def __post_init__(self):
        if self.column_weight < 0:
            raise TmmError(f"column weight for {self.name!r} must be >= 0")
        if self.direction not in (HIGHER_BETTER, LOWER_BETTER):
            raise TmmError(f"direction must be 'higher' or 'lower', got {self.direction!r}")


@dataclass
class DeviceRecord:
    name: str
    values: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreEntry:
    name: str
    score: float
    contributions: dict
    gate: int


@dataclass(frozen=True)
class ScoreReport:
    entries: tuple  # sorted descending by score, ties alphabetical

    def scores(self) -> dict:
        return {e.name: e.score for e in self.entries}


def load_schema(path) -> list[ParameterSchema]:
    raw = json.loads(Path(path).read_text())
    return [
        ParameterSchema(
            name=p["name"],
            column_weight=p.get("column_weight", 1.0),
            direction=p.get("direction", HIGHER_BETTER),
            necessary=p.get("necessary", False),
        )
        for p in raw
    ]


def load_devices_csv(path) -> list[DeviceRecord]:
    """CSV with a header row of parameter names; first column is the device."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise TmmError("empty device CSV")
    header = rows[0]
    devices = []
    for row in rows[1:]:
        if not row or not row[0].strip():
            continue
        values = {}
        for name, cell in zip(header[1:], row[1:]):
            cell = cell.strip()
            if cell:
                values[name] = float(cell)
        devices.append(DeviceRecord(name=row[0].strip(), values=values))
    return devices


def _weighted(schema):
    return [p for p in schema if not p.necessary]


def _gates(schema):
    return [p for p in schema if p.necessary]


def normalize(devices, schema) -> dict:
    """Per-device fractions in [0, 1]; the best device on a parameter gets 1."""
    fractions = {d.name: {} for d in devices}
    for param in _weighted(schema):
        values = {}
        for d in devices:
            if param.name not in d.values:
                raise MissingValue(f"{d.name} has no value for {param.name!r}")
            v = d.values[param.name]
            if v <= 0:
                raise NonPositiveValue(
                    f"{d.name}: {param.name!r} must be positive for ratio scoring, got {v}"
                )
            values[d.name] = v
        if param.direction == HIGHER_BETTER:
            best = max(values.values())
            for name, v in values.items():
                fractions[name][param.name] = v / best
        else:
            best = min(values.values())
            for name, v in values.items():
                fractions[name][param.name] = best / v
    return fractions


def score(fractions: dict, gates: dict, schema) -> float:
    """S for one device from its fractions and necessary-parameter flags."""
    s = 0.0
    for param in _weighted(schema):
        if param.name not in fractions:
            raise MissingValue(f"missing fraction for {param.name!r}")
        s += param.column_weight * fractions[param.name]
    for param in _gates(schema):
        if param.name not in gates:
            raise MissingValue(f"missing gate flag for {param.name!r}")
        if not gates[param.name]:
            return 0.0
    return s


def rank(devices, schema, pre_normalized: bool = False) -> ScoreReport:
    """Score every device and sort descending; ties break alphabetically."""
    gate_names = {p.name for p in _gates(schema)}
    gates_by_dev = {}
    for d in devices:
        flags = {}
        for name in gate_names:
            if name not in d.values:
                raise MissingValue(f"{d.name} has no flag for {name!r}")
            flags[name] = int(d.values[name])
        gates_by_dev[d.name] = flags

    if pre_normalized:
        fractions = {
            d.name: {k: v for k, v in d.values.items() if k not in gate_names}
            for d in devices
        }
        for d in devices:
            for k, v in fractions[d.name].items():
                if not 0.0 <= v <= 1.0:
                    raise TmmError(f"{d.name}: fraction {k!r}={v} outside [0, 1]")
    else:
        fractions = normalize(devices, schema)

    entries = []
    for d in devices:
        contribs = {
            p.name: p.column_weight * fractions[d.name][p.name] for p in _weighted(schema)
        }
        s = score(fractions[d.name], gates_by_dev[d.name], schema)
        gate = int(all(gates_by_dev[d.name].values())) if gate_names else 1
        entries.append(ScoreEntry(name=d.name, score=s, contributions=contribs, gate=gate))
    entries.sort(key=lambda e: (-e.score, e.name))
    return ScoreReport(entries=tuple(entries))


def format_table(report: ScoreReport) -> str:
    """Two-decimal score table (display convention)."""
    width = max([len(e.name) for e in report.entries] + [6])
    lines = [f"{'Device':<{width}}  Score"]
    for e in report.entries:
        lines.append(f"{e.name:<{width}}  {e.score:.2f}")
    return "\n".join(lines)
