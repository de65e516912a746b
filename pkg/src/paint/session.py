"""Session orchestration and persistence.

A session bundles one surrogate (plus its approximation and ranges) with
the interactive history: neutral start, classification outcomes,
projections.  The whole state serializes to a single JSON log whose
save/load round-trip is byte-identical (timestamps are preserved, never
regenerated), and log writes are atomic.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import nimbus
from .approximation import update_approximation
from .config import CrsOptions, PaintConfig
from .errors import ContractError
from .nimbus import Classification, IterationRecord, ObjectiveClass, utc_timestamp
from .original import (
    BUILTIN_PROBLEMS,
    ProblemDefinition,
    SubprocessEvaluator,
    project_outcome,
)
from .outcomes import (
    MAXIMIZE,
    ObjectiveSpec,
    OutcomeSet,
    Ranges,
    compute_ranges,
    from_canonical,
)
from .surrogate import (
    ScalarizationSpec,
    SurrogateProblem,
    build_surrogate,
    neutral_reference,
    solve_scalarized,
)

TOOL_VERSION = "0.1.0"

JOB_PENDING = "pending"
JOB_RUNNING = "running"
JOB_DONE = "done"
JOB_FAILED = "failed"


@dataclass
class ProjectionJob:
    id: str
    record_index: int
    status: str = JOB_PENDING
    states: list[str] = field(default_factory=lambda: [JOB_PENDING])
    result_index: int | None = None
    error: str | None = None

    def transition(self, status: str):
        self.status = status
        self.states.append(status)

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "record_index": self.record_index,
            "status": self.status,
            "states": list(self.states),
            "result_index": self.result_index,
            "error": self.error,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ProjectionJob":
        return cls(
            id=doc["id"],
            record_index=doc["record_index"],
            status=doc["status"],
            states=list(doc["states"]),
            result_index=doc.get("result_index"),
            error=doc.get("error"),
        )


def load_problem(descriptor: dict) -> ProblemDefinition:
    """Instantiate a ProblemDefinition from its JSON descriptor."""
    kind = descriptor.get("kind")
    if kind == "builtin":
        name = descriptor.get("name", "")
        try:
            return BUILTIN_PROBLEMS[name]()
        except KeyError:
            raise ContractError(
                f"unknown builtin problem {name!r}; available: {sorted(BUILTIN_PROBLEMS)}"
            ) from None
    if kind == "subprocess":
        specs = [
            ObjectiveSpec(o["name"], o.get("unit", ""), o.get("direction", "minimize"))
            for o in descriptor["objectives"]
        ]
        evaluator = SubprocessEvaluator(
            descriptor["command"], timeout=float(descriptor.get("timeout", 60.0))
        )
        return ProblemDefinition(
            decision_dim=int(descriptor["decision_dim"]),
            bounds=np.asarray(descriptor["bounds"], dtype=float),
            specs=specs,
            evaluator=evaluator,
            cost_hint=float(descriptor.get("cost_hint", 0.0)),
            name=descriptor.get("name", "external"),
        )
    raise ContractError(f"unknown problem kind {kind!r}")


class SessionState:
    """Mutable session: surrogate, ranges, history, jobs."""

    def __init__(
        self,
        surrogate: SurrogateProblem,
        ranges: Ranges,
        config: PaintConfig,
        problem_descriptor: dict | None = None,
        seed: int = 0,
        created: str | None = None,
        input_digests: dict | None = None,
    ):
        self.surrogate = surrogate
        self.ranges = ranges
        self.config = config
        self.problem_descriptor = problem_descriptor
        self.seed = seed
        self.created = created or utc_timestamp()
        self.input_digests = input_digests or {}
        self.history: list[IterationRecord] = []
        self.current: int = -1
        self.jobs: list[ProjectionJob] = []
        self.state_version: int = 0

    # -- helpers ---------------------------------------------------------
    @property
    def specs(self) -> list[ObjectiveSpec]:
        return self.surrogate.approximation.outcome_set.specs

    def to_display(self, z: np.ndarray) -> np.ndarray:
        return from_canonical(np.asarray(z, dtype=float).reshape(1, -1), self.specs)[0]

    def current_record(self) -> IterationRecord:
        if not (0 <= self.current < len(self.history)):
            raise ContractError("session has no current outcome yet")
        return self.history[self.current]

    def bump(self):
        self.state_version += 1

    # -- operations ------------------------------------------------------
    def neutral_start(self) -> IterationRecord:
        """First record: solve at the neutral compromise reference."""
        spec = ScalarizationSpec(
            reference=neutral_reference(self.ranges),
            weights=self.ranges.weights,
            rho=self.config.scalarization.rho,
        )
        sol = solve_scalarized(self.surrogate, spec)
        record = IterationRecord(
            kind="neutral_start",
            outcome=sol.z,
            outcome_display=self.to_display(sol.z),
            value=sol.value,
            timestamp=utc_timestamp(),
            polytope_index=sol.polytope_index,
            barycentric=[float(v) for v in sol.barycentric],
        )
        self.history.append(record)
        self.current = len(self.history) - 1
        self.bump()
        return record

    def classify(self, classification: Classification) -> IterationRecord:
        record = nimbus.nimbus_iterate(self, classification)
        if record.feasible:
            self.current = len(self.history) - 1
        self.bump()
        return record

    def select_current(self, record_index: int) -> None:
        if not (0 <= record_index < len(self.history)):
            raise ContractError(f"record index {record_index} out of range")
        if not self.history[record_index].has_outcome():
            raise ContractError(f"record {record_index} has no outcome to select")
        self.current = record_index
        self.bump()

    def new_job(self, record_index: int) -> ProjectionJob:
        if not (0 <= record_index < len(self.history)):
            raise ContractError(f"record index {record_index} out of range")
        if not self.history[record_index].has_outcome():
            raise ContractError(f"record {record_index} has no outcome to project")
        job = ProjectionJob(id=f"job-{len(self.jobs) + 1}", record_index=record_index)
        self.jobs.append(job)
        self.bump()
        return job

    def job_by_id(self, job_id: str) -> ProjectionJob:
        for job in self.jobs:
            if job.id == job_id:
                return job
        raise ContractError(f"unknown job id {job_id!r}")

    def run_projection(self, job: ProjectionJob, prob: ProblemDefinition) -> IterationRecord:
        """Execute a projection job synchronously (callers may thread it)."""
        job.transition(JOB_RUNNING)
        self.bump()
        try:
            source = self.history[job.record_index]
            crs = self.config.crs
            job_ordinal = int(job.id.rsplit("-", 1)[-1])
            crs_opts = CrsOptions(
                population=crs.population,
                max_evals=crs.max_evals,
                spread_tol=crs.spread_tol,
                seed=self.seed + 7919 * job_ordinal,
            )
            x, z = project_outcome(
                np.asarray(source.outcome, dtype=float),
                prob,
                self.ranges,
                crs_opts=crs_opts,
                improve_opts=self.config.local_improve,
                rho=self.config.scalarization.rho,
            )
            spec = ScalarizationSpec(
                reference=np.asarray(source.outcome, dtype=float),
                weights=self.ranges.weights,
                rho=self.config.scalarization.rho,
            )
            record = IterationRecord(
                kind="projection",
                outcome=z,
                outcome_display=self.to_display(z),
                value=spec.value(z),
                timestamp=utc_timestamp(),
                decision=[float(v) for v in x],
                source_index=job.record_index,
            )
            self.history.append(record)
            job.result_index = len(self.history) - 1
            job.transition(JOB_DONE)
            self.bump()
            return record
        except Exception as exc:
            job.error = str(exc)
            job.transition(JOB_FAILED)
            self.bump()
            raise

    def update_outcomes(self, new_outcomes: OutcomeSet) -> dict:
        """Rebuild approximation/surrogate over the merged outcome set."""
        approx = self.surrogate.approximation
        if approx is None:
            raise ContractError("session surrogate carries no approximation to update")
        rebuilt, warnings = update_approximation(approx, new_outcomes, self.config)
        if rebuilt is approx:
            return {"rebuilt": False, "warnings": warnings, "stats": approx.stats}
        self.surrogate = build_surrogate(rebuilt)
        self.ranges = compute_ranges(
            rebuilt.outcome_set, self.config.filter.range_delta
        )
        self.bump()
        return {"rebuilt": True, "warnings": warnings, "stats": rebuilt.stats}

    def projection_outcomes(self) -> OutcomeSet:
        """The projected outcomes recorded so far, as an outcome set."""
        rows = [r for r in self.history if r.kind == "projection" and r.has_outcome()]
        if not rows:
            raise ContractError("session has no projection records")
        return OutcomeSet(
            specs=self.specs,
            points=np.array([r.outcome for r in rows]),
            provenance=["projected"] * len(rows),
        )

    # -- serialization ---------------------------------------------------
    def to_json_dict(self) -> dict:
        return {
            "tool": {"name": "paint", "version": TOOL_VERSION},
            "created": self.created,
            "seed": self.seed,
            "config": self.config.to_dict(),
            "input_digests": self.input_digests,
            "problem": self.problem_descriptor,
            "ranges": self.ranges.to_json_dict(),
            "surrogate": self.surrogate.to_json_dict(),
            "history": [r.to_json_dict() for r in self.history],
            "current": self.current,
            "jobs": [j.to_json_dict() for j in self.jobs],
            "state_version": self.state_version,
        }

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SessionState":
        state = cls(
            surrogate=SurrogateProblem.from_json_dict(doc["surrogate"]),
            ranges=Ranges.from_json_dict(doc["ranges"]),
            config=PaintConfig.from_dict(doc.get("config", {})),
            problem_descriptor=doc.get("problem"),
            seed=doc.get("seed", 0),
            created=doc["created"],
            input_digests=doc.get("input_digests", {}),
        )
        state.history = [IterationRecord.from_json_dict(r) for r in doc["history"]]
        state.current = doc["current"]
        state.jobs = [ProjectionJob.from_json_dict(j) for j in doc["jobs"]]
        state.state_version = doc.get("state_version", 0)
        return state


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def save_session(state: SessionState, path: str) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".session-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(state.dump_json())
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_session(path: str) -> SessionState:
    with open(path, "r", encoding="utf-8") as fh:
        return SessionState.from_json_dict(json.load(fh))


def start_session(
    surrogate_path: str,
    config: PaintConfig,
    problem_descriptor: dict | None = None,
    seed: int = 0,
) -> SessionState:
    with open(surrogate_path, "r", encoding="utf-8") as fh:
        surrogate = SurrogateProblem.from_json_dict(json.load(fh))
    if surrogate.approximation is None:
        raise ContractError("surrogate file carries no approximation")
    ranges = compute_ranges(
        surrogate.approximation.outcome_set, config.filter.range_delta
    )
    state = SessionState(
        surrogate=surrogate,
        ranges=ranges,
        config=config,
        problem_descriptor=problem_descriptor,
        seed=seed,
        input_digests={"surrogate": file_digest(surrogate_path)},
    )
    state.neutral_start()
    return state


# -- classification wire format (display space) --------------------------

def classification_from_wire(
    doc: dict, state: SessionState, base_record: IterationRecord
) -> Classification:
    """Build a canonical Classification from a display-space payload.

    Payload: {"classes": [{"objective": name, "kind": sym, "level": x}]}.
    Levels are given in each objective's natural direction and get negated
    for maximized objectives.
    """
    specs = state.specs
    by_name = {s.name: i for i, s in enumerate(specs)}
    classes: list[ObjectiveClass | None] = [None] * len(specs)
    entries = doc.get("classes", [])
    for entry in entries:
        name = entry.get("objective")
        if name not in by_name:
            raise ContractError(f"unknown objective {name!r}")
        i = by_name[name]
        level = entry.get("level")
        if level is not None:
            level = float(level)
            if specs[i].direction == MAXIMIZE:
                level = -level
        classes[i] = ObjectiveClass(kind=entry.get("kind", ""), level=level)
    filled = [c if c is not None else ObjectiveClass(kind="") for c in classes]
    return Classification(
        classes=filled, current_point=np.asarray(base_record.outcome, dtype=float)
    )
