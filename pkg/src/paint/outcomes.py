"""Objective metadata, outcome ingestion, dominance and Pareto filtering.

Internally every objective is minimized: columns of maximized objectives are
negated on ingestion ("canonical space") and converted back for display.
This keeps a single dominance definition everywhere downstream.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DataError, ParseError, SchemaError

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

_DIRECTION_ALIASES = {
    "min": MINIMIZE,
    "minimize": MINIMIZE,
    "minimise": MINIMIZE,
    "max": MAXIMIZE,
    "maximize": MAXIMIZE,
    "maximise": MAXIMIZE,
}


@dataclass(frozen=True)
class ObjectiveSpec:
    """One objective: display name, unit and optimization direction."""

    name: str
    unit: str = ""
    direction: str = MINIMIZE

    def __post_init__(self):
        if self.direction not in (MINIMIZE, MAXIMIZE):
            raise SchemaError(f"objective {self.name!r}: bad direction {self.direction!r}")


def normalize_direction(token: str) -> str:
    try:
        return _DIRECTION_ALIASES[token.strip().lower()]
    except KeyError:
        raise SchemaError(f"unknown direction {token!r}") from None


@dataclass
class OutcomeSet:
    """A set of outcomes in canonical (all-minimized) objective space.

    ``points`` is an (n, k) float matrix; ``provenance`` tags each row
    (e.g. "given", "generated", "projected").
    """

    specs: list[ObjectiveSpec]
    points: np.ndarray
    provenance: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            self.points = self.points.reshape(-1, self.k)
        if len(self.specs) < 2:
            raise SchemaError("an outcome set needs at least two objectives")
        names = [s.name for s in self.specs]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate objective name")
        if self.points.size and not np.all(np.isfinite(self.points)):
            raise DataError("non-finite outcome value")
        if self.points.shape[1] != len(self.specs):
            raise ContractError(
                f"points have {self.points.shape[1]} columns for {len(self.specs)} objectives"
            )
        if not self.provenance:
            self.provenance = ["given"] * self.n
        if len(self.provenance) != self.n:
            raise ContractError("provenance length does not match point count")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def k(self) -> int:
        return len(self.specs)

    def display_points(self) -> np.ndarray:
        """Points with maximized objectives flipped back to their natural sign."""
        return from_canonical(self.points, self.specs)

    def to_json_dict(self) -> dict:
        return {
            "objectives": [
                {"name": s.name, "unit": s.unit, "direction": s.direction} for s in self.specs
            ],
            "points": self.display_points().tolist(),
            "provenance": list(self.provenance),
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    def dump_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, quoting=csv.QUOTE_ALL, lineterminator="\n")
        writer.writerow([f"{s.name},{s.unit},{s.direction}" for s in self.specs])
        disp = self.display_points()
        for row in disp:
            writer.writerow([repr(float(v)) for v in row])
        return out.getvalue()


def to_canonical(points: np.ndarray, specs: list[ObjectiveSpec]) -> np.ndarray:
    """Negate maximized columns so that smaller is better everywhere."""
    pts = np.array(points, dtype=float, copy=True)
    if pts.size == 0:
        return pts
    for i, spec in enumerate(specs):
        if spec.direction == MAXIMIZE:
            pts[:, i] = -pts[:, i]
    return pts


def from_canonical(points: np.ndarray, specs: list[ObjectiveSpec]) -> np.ndarray:
    # negation is an involution, so the inverse map is the same map
    return to_canonical(points, specs)


def _parse_header_cell(cell: str, index: int) -> ObjectiveSpec:
    parts = [p.strip() for p in cell.split(",")]
    if len(parts) != 3:
        raise ParseError(
            f"header cell {index + 1} must be a 'name,unit,direction' triplet, got {cell!r}",
            row=1,
        )
    name, unit, direction = parts
    if not name:
        raise SchemaError(f"header cell {index + 1}: empty objective name")
    return ObjectiveSpec(name=name, unit=unit, direction=normalize_direction(direction))


def _parse_csv(text: str) -> OutcomeSet:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader]
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise ParseError("empty document: missing header row", row=1)
    specs = [_parse_header_cell(cell, i) for i, cell in enumerate(rows[0])]
    k = len(specs)
    data = []
    for rownum, row in enumerate(rows[1:], start=2):
        if len(row) != k:
            raise ParseError(f"expected {k} values, got {len(row)}", row=rownum)
        try:
            values = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(str(exc), row=rownum) from None
        if not all(np.isfinite(values)):
            raise DataError(f"row {rownum}: non-finite value")
        data.append(values)
    points = np.array(data, dtype=float).reshape(len(data), k)
    return OutcomeSet(specs=specs, points=to_canonical(points, specs))


def _parse_json(text: str) -> OutcomeSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", row=exc.lineno) from None
    if not isinstance(doc, dict) or "objectives" not in doc:
        raise SchemaError("outcome JSON must be an object with an 'objectives' array")
    specs = []
    for i, obj in enumerate(doc["objectives"]):
        specs.append(
            ObjectiveSpec(
                name=str(obj.get("name", "")),
                unit=str(obj.get("unit", "")),
                direction=normalize_direction(str(obj.get("direction", MINIMIZE))),
            )
        )
        if not specs[-1].name:
            raise SchemaError(f"objective {i}: empty name")
    raw = doc.get("points", [])
    k = len(specs)
    for rownum, row in enumerate(raw):
        if len(row) != k:
            raise ParseError(f"expected {k} values, got {len(row)}", row=rownum + 1)
    points = np.array(raw, dtype=float).reshape(len(raw), k)
    if points.size and not np.all(np.isfinite(points)):
        raise DataError("non-finite value in points")
    provenance = [str(p) for p in doc.get("provenance", [])]
    return OutcomeSet(specs=specs, points=to_canonical(points, specs), provenance=provenance)


def parse_outcome_set(stream, fmt: str) -> OutcomeSet:
    """Read an outcome set from a byte or text stream in CSV or JSON form.

    Values in the stream are in each objective's natural direction; the
    returned set is canonical (maximized columns negated).
    """
    data = stream.read() if hasattr(stream, "read") else stream
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    if fmt == "csv":
        return _parse_csv(data)
    if fmt == "json":
        return _parse_json(data)
    raise ContractError(f"unknown format {fmt!r}")


def dominates(a, b, tol: float = 0.0) -> bool:
    """True iff ``a`` Pareto dominates ``b`` in canonical space.

    a_i <= b_i + tol for every objective and a_j < b_j - tol for at least
    one; with tol=0 this is the exact textbook definition.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ContractError(f"length mismatch: {a.shape} vs {b.shape}")
    if tol < 0:
        raise ContractError("tol must be >= 0")
    return bool(np.all(a <= b + tol) and np.any(a < b - tol))


def nondominated_mask(points: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Boolean mask of the points not dominated by any other point."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        # dropped iff any point of the set (kept or not) dominates it
        dominated = np.all(pts <= pts[i] + tol, axis=1) & np.any(pts < pts[i] - tol, axis=1)
        dominated[i] = False
        if np.any(dominated):
            mask[i] = False
    return mask


def pareto_filter(outcome_set: OutcomeSet, tol: float = 0.0) -> OutcomeSet:
    """Subset of mutually nondominated points, in stable input order.

    Equal points do not dominate each other, so duplicates survive.
    """
    mask = nondominated_mask(outcome_set.points, tol)
    return OutcomeSet(
        specs=outcome_set.specs,
        points=outcome_set.points[mask],
        provenance=[p for p, keep in zip(outcome_set.provenance, mask) if keep],
    )


@dataclass(frozen=True)
class Ranges:
    """Ideal/nadir estimates and the normalization weights they induce."""

    ideal: np.ndarray
    nadir_estimate: np.ndarray
    weights: np.ndarray
    delta: float

    def normalize(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.ideal) * self.weights

    def denormalize(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) / self.weights + self.ideal

    def to_json_dict(self) -> dict:
        return {
            "ideal": self.ideal.tolist(),
            "nadir_estimate": self.nadir_estimate.tolist(),
            "weights": self.weights.tolist(),
            "delta": self.delta,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Ranges":
        return cls(
            ideal=np.asarray(doc["ideal"], dtype=float),
            nadir_estimate=np.asarray(doc["nadir_estimate"], dtype=float),
            weights=np.asarray(doc["weights"], dtype=float),
            delta=float(doc["delta"]),
        )


def compute_ranges(outcome_set: OutcomeSet, delta: float = 1e-6) -> Ranges:
    """Columnwise ideal/nadir of the set plus weights 1/(nadir - ideal + delta)."""
    if outcome_set.n == 0:
        raise ContractError("cannot compute ranges of an empty outcome set")
    ideal = outcome_set.points.min(axis=0)
    nadir = outcome_set.points.max(axis=0)
    span = nadir - ideal + delta
    if np.any(span <= 0) or not np.all(np.isfinite(span)):
        raise DataError("degenerate objective range; increase delta")
    return Ranges(ideal=ideal, nadir_estimate=nadir, weights=1.0 / span, delta=delta)
