"""NIMBUS classification over the surrogate and the iterate step.

A classification assigns each objective one of five classes relative to
the current outcome: improve as far as possible (<), improve to an
aspiration level (<=), keep (=), allow worsening up to a bound (>=), or
free (<>).  A valid classification must improve something and relax
something.  The classes map onto one achievement scalarization whose
reference point and upper bounds encode the stated preferences; the
surrogate solve of that scalarization is one NIMBUS iteration.

All values here are canonical (minimized) space; display conversion is the
service layer's job.
"""

from __future__ import annotations

import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, InfeasibleScalarizationError
from .outcomes import Ranges
from .surrogate import ScalarizationSpec, solve_scalarized

IMPROVE = "<"
IMPROVE_TO = "<="
KEEP = "="
WORSEN_TO = ">="
FREE = "<>"

CLASS_KINDS = (IMPROVE, IMPROVE_TO, KEEP, WORSEN_TO, FREE)
_LEVEL_KINDS = (IMPROVE_TO, WORSEN_TO)


@dataclass(frozen=True)
class ObjectiveClass:
    """Class of one objective; ``level`` is the aspiration (<=) or bound (>=)."""

    kind: str
    level: float | None = None

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "level": self.level}


@dataclass
class Classification:
    classes: list[ObjectiveClass]
    current_point: np.ndarray

    def __post_init__(self):
        self.current_point = np.asarray(self.current_point, dtype=float)

    @property
    def k(self) -> int:
        return self.current_point.size

    def to_json_dict(self) -> dict:
        return {
            "classes": [c.to_json_dict() for c in self.classes],
            "current_point": self.current_point.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Classification":
        return cls(
            classes=[
                ObjectiveClass(kind=c["kind"], level=c.get("level")) for c in doc["classes"]
            ],
            current_point=np.asarray(doc["current_point"], dtype=float),
        )


def validate_classification(c: Classification) -> list[str]:
    """All rule violations of a classification; an empty list means valid."""
    violations: list[str] = []
    if len(c.classes) != c.k:
        violations.append(
            f"expected {c.k} objective classes, got {len(c.classes)}"
        )
        return violations
    improving = 0
    relaxing = 0
    for i, oc in enumerate(c.classes):
        current = c.current_point[i]
        if oc.kind not in CLASS_KINDS:
            violations.append(f"objective {i + 1}: unknown class {oc.kind!r}")
            continue
        if oc.kind in _LEVEL_KINDS and (oc.level is None or not np.isfinite(oc.level)):
            violations.append(f"objective {i + 1}: class {oc.kind} needs a finite level")
            continue
        if oc.kind == IMPROVE_TO and oc.level >= current:
            violations.append(
                f"objective {i + 1}: aspiration {oc.level} does not improve on {current}"
            )
        if oc.kind == WORSEN_TO and oc.level < current:
            violations.append(
                f"objective {i + 1}: bound {oc.level} is tighter than the current value {current}"
            )
        if oc.kind in (IMPROVE, IMPROVE_TO):
            improving += 1
        if oc.kind in (WORSEN_TO, FREE):
            relaxing += 1
    if not improving:
        violations.append("no objective is classified for improvement")
    if not relaxing:
        violations.append("no objective is allowed to worsen or move freely")
    return violations


def build_subproblem(
    c: Classification,
    ranges: Ranges,
    ideal: np.ndarray | None = None,
    rho: float = 1e-4,
) -> ScalarizationSpec:
    """Reference point and bounds of the classification-induced subproblem.

    reference: ideal for <, aspiration for <=, current for =, bound for >=,
    nadir estimate for <>.  Upper bounds cap every objective the decision
    maker did not free: current value for </<=/=, the stated bound for >=.
    """
    violations = validate_classification(c)
    if violations:
        raise ContractError("invalid classification: " + "; ".join(violations))
    ideal = ranges.ideal if ideal is None else np.asarray(ideal, dtype=float)
    k = c.k
    reference = np.empty(k)
    bounds = np.full(k, np.nan)
    for i, oc in enumerate(c.classes):
        current = c.current_point[i]
        if oc.kind == IMPROVE:
            reference[i] = ideal[i]
            bounds[i] = current
        elif oc.kind == IMPROVE_TO:
            reference[i] = oc.level
            bounds[i] = current
        elif oc.kind == KEEP:
            reference[i] = current
            bounds[i] = current
        elif oc.kind == WORSEN_TO:
            reference[i] = oc.level
            bounds[i] = oc.level
        else:  # FREE
            reference[i] = ranges.nadir_estimate[i]
    return ScalarizationSpec(
        reference=reference, weights=ranges.weights, rho=rho, extra_bounds=bounds
    )


@dataclass
class IterationRecord:
    """One step of the session history."""

    kind: str  # neutral_start | classification | projection
    outcome: np.ndarray | None
    outcome_display: np.ndarray | None
    value: float | None
    timestamp: str
    classification: Classification | None = None
    feasible: bool = True
    polytope_index: int | None = None
    barycentric: list[float] | None = None
    decision: list[float] | None = None
    source_index: int | None = None

    def has_outcome(self) -> bool:
        return self.outcome is not None

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "outcome": None if self.outcome is None else list(map(float, self.outcome)),
            "outcome_display": None
            if self.outcome_display is None
            else list(map(float, self.outcome_display)),
            "value": self.value,
            "timestamp": self.timestamp,
            "classification": None
            if self.classification is None
            else self.classification.to_json_dict(),
            "feasible": self.feasible,
            "polytope_index": self.polytope_index,
            "barycentric": self.barycentric,
            "decision": self.decision,
            "source_index": self.source_index,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "IterationRecord":
        return cls(
            kind=doc["kind"],
            outcome=None if doc["outcome"] is None else np.asarray(doc["outcome"], dtype=float),
            outcome_display=None
            if doc["outcome_display"] is None
            else np.asarray(doc["outcome_display"], dtype=float),
            value=doc["value"],
            timestamp=doc["timestamp"],
            classification=None
            if doc.get("classification") is None
            else Classification.from_json_dict(doc["classification"]),
            feasible=doc.get("feasible", True),
            polytope_index=doc.get("polytope_index"),
            barycentric=doc.get("barycentric"),
            decision=doc.get("decision"),
            source_index=doc.get("source_index"),
        )


def utc_timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")


def nimbus_iterate(state, c: Classification) -> IterationRecord:
    """Solve the classification-induced subproblem and append the record.

    ``state`` is the session (``surrogate``, ``ranges``, ``config``,
    ``history``, ``to_display``).  An infeasible bound combination is a
    first-class result: the record carries feasible=False and no outcome,
    and the current point stays where it was.
    """
    violations = validate_classification(c)
    if violations:
        raise ContractError("invalid classification: " + "; ".join(violations))
    spec = build_subproblem(c, state.ranges, rho=state.config.scalarization.rho)
    try:
        sol = solve_scalarized(state.surrogate, spec)
        record = IterationRecord(
            kind="classification",
            outcome=sol.z,
            outcome_display=state.to_display(sol.z),
            value=sol.value,
            timestamp=utc_timestamp(),
            classification=c,
            feasible=True,
            polytope_index=sol.polytope_index,
            barycentric=[float(v) for v in sol.barycentric],
        )
    except InfeasibleScalarizationError:
        record = IterationRecord(
            kind="classification",
            outcome=None,
            outcome_display=None,
            value=None,
            timestamp=utc_timestamp(),
            classification=c,
            feasible=False,
        )
    state.history.append(record)
    return record
