"""HTTP/JSON API over a session, consumed by the browser companion.

One writer at a time: every mutation runs under the manager's lock and is
persisted before the response goes out.  Projection jobs run on a worker
pool and never block reads.  All payloads are display space; canonical
values stay inside the process.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import ContractError, PaintError
from .nimbus import validate_classification
from .outcomes import parse_outcome_set
from .session import (
    SessionState,
    classification_from_wire,
    load_problem,
    save_session,
)


class SessionManager:
    """Serialized mutations over one session log plus background jobs."""

    def __init__(self, state: SessionState, path: str, workers: int = 2):
        self.state = state
        self.path = path
        self.lock = threading.RLock()
        self.executor = ThreadPoolExecutor(max_workers=workers)
        self._problem = None

    def problem(self):
        if self._problem is None:
            if not self.state.problem_descriptor:
                raise ContractError("session has no original problem attached")
            self._problem = load_problem(self.state.problem_descriptor)
        return self._problem

    def persist(self):
        save_session(self.state, self.path)

    def record_payload(self, index: int) -> dict:
        record = self.state.history[index]
        return {
            "index": index,
            "kind": record.kind,
            "outcome": None
            if record.outcome_display is None
            else [float(v) for v in record.outcome_display],
            "value": record.value,
            "feasible": record.feasible,
            "timestamp": record.timestamp,
            "source_index": record.source_index,
            "decision": record.decision,
        }

    def snapshot(self) -> dict:
        state = self.state
        return {
            "state_version": state.state_version,
            "current": state.current,
            "history": [self.record_payload(i) for i in range(len(state.history))],
            "jobs": [j.to_json_dict() for j in state.jobs],
        }

    def meta(self) -> dict:
        state = self.state
        specs = state.specs
        ideal_disp = state.to_display(state.ranges.ideal)
        nadir_disp = state.to_display(state.ranges.nadir_estimate)
        approx = state.surrogate.approximation
        return {
            "objectives": [
                {
                    "name": s.name,
                    "unit": s.unit,
                    "direction": s.direction,
                    "best": float(ideal_disp[i]),
                    "worst": float(nadir_disp[i]),
                }
                for i, s in enumerate(specs)
            ],
            "stats": approx.stats if approx is not None else {},
            "polytopes": state.surrogate.m,
            "state_version": state.state_version,
            "tool_version": "0.1.0",
        }

    def run_job(self, job_id: str):
        # resolve under the lock, run the expensive part outside it
        with self.lock:
            job = self.state.job_by_id(job_id)
            prob = self.problem()
        try:
            with self.lock:
                self.state.run_projection(job, prob)
                self.persist()
        except Exception:
            with self.lock:
                self.persist()


def create_app(manager: SessionManager, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="paint session API")

    @app.exception_handler(PaintError)
    async def _paint_error(_, exc: PaintError):
        return JSONResponse(status_code=400, content={"error": exc.payload()})

    @app.get("/api/session")
    def get_session():
        with manager.lock:
            return manager.snapshot()

    @app.get("/api/session/history")
    def get_history():
        with manager.lock:
            return {"records": manager.snapshot()["history"]}

    @app.get("/api/meta")
    def get_meta():
        with manager.lock:
            return manager.meta()

    @app.post("/api/session/classify")
    def post_classify(body: dict):
        with manager.lock:
            state = manager.state
            doc = body.get("classification", body)
            base_index = doc.get("base_index")
            if base_index is None:
                base = state.current_record()
            else:
                if not (0 <= base_index < len(state.history)):
                    raise ContractError(f"record index {base_index} out of range")
                base = state.history[base_index]
                if not base.has_outcome():
                    raise ContractError(f"record {base_index} has no outcome")
            classification = classification_from_wire(doc, state, base)
            violations = validate_classification(classification)
            if violations:
                return JSONResponse(status_code=422, content={"violations": violations})
            record = state.classify(classification)
            manager.persist()
            return {
                "record": manager.record_payload(len(state.history) - 1),
                "state_version": state.state_version,
                "feasible": record.feasible,
            }

    @app.post("/api/session/select")
    def post_select(body: dict):
        with manager.lock:
            manager.state.select_current(int(body["index"]))
            manager.persist()
            return manager.snapshot()

    @app.post("/api/session/project")
    def post_project(body: dict):
        with manager.lock:
            manager.problem()  # fail fast when no problem is attached
            job = manager.state.new_job(int(body["index"]))
            manager.persist()
        manager.executor.submit(manager.run_job, job.id)
        return {"job_id": job.id}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        with manager.lock:
            job = manager.state.job_by_id(job_id)
            payload = job.to_json_dict()
            if job.result_index is not None:
                payload["result"] = manager.record_payload(job.result_index)
            return payload

    @app.post("/api/session/update")
    def post_update(body: dict):
        with manager.lock:
            ref = body.get("outcomes_ref")
            if ref:
                with open(ref, "r", encoding="utf-8") as fh:
                    fmt = "csv" if ref.endswith(".csv") else "json"
                    new_outcomes = parse_outcome_set(fh.read(), fmt)
            elif body.get("include_projections"):
                new_outcomes = manager.state.projection_outcomes()
            else:
                raise ContractError("update needs outcomes_ref or include_projections")
            summary = manager.state.update_outcomes(new_outcomes)
            manager.persist()
            summary["state_version"] = manager.state.state_version
            return summary

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
