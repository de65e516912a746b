import json
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from paint.approximation import build_approximation
from paint.config import PaintConfig
from paint.errors import ContractError
from paint.outcomes import compute_ranges, parse_outcome_set
from paint.server import SessionManager, create_app
from paint.session import (
    SessionState,
    load_session,
    save_session,
    start_session,
)
from paint.surrogate import build_surrogate

from conftest import TABLE1_CSV

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def run_cli(*args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "paint.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


def table1_session(tmp_path, problem=None) -> SessionState:
    outcome_set = parse_outcome_set(TABLE1_CSV, "csv")
    approx = build_approximation(outcome_set)
    surrogate = build_surrogate(approx)
    config = PaintConfig()
    state = SessionState(
        surrogate=surrogate,
        ranges=compute_ranges(outcome_set, config.filter.range_delta),
        config=config,
        problem_descriptor=problem,
        seed=3,
    )
    state.neutral_start()
    return state


class TestCli:
    def test_paint_three_point_fixture(self, tmp_path):
        outcomes = tmp_path / "outcomes.csv"
        outcomes.write_text('"a,,min","b,,min"\n0,1\n0.5,0.5\n1,0\n')
        out = tmp_path / "approx.json"
        result = run_cli("paint", "--input", str(outcomes), "--output", str(out))
        assert result.returncode == 0, result.stderr
        assert "candidates" in result.stdout and "polytopes" in result.stdout
        doc = json.loads(out.read_text())
        assert doc["polytopes"] == [[0, 1], [1, 2]]
        assert doc["stats"]["candidates"] == 5

    def test_ingest_rejects_bad_file_with_json_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text('"a,,min","b,,min"\n1,zzz\n')
        result = run_cli("ingest", "--input", str(bad))
        assert result.returncode == 1
        err = json.loads(result.stderr)
        assert err["error"]["code"] == "parse"

    def test_invalid_classification_exits_nonzero(self, tmp_path):
        session_path = tmp_path / "session.json"
        save_session(table1_session(tmp_path), str(session_path))
        cls = tmp_path / "cls.json"
        cls.write_text(json.dumps({"classes": [
            {"objective": name, "kind": "="} for name in
            ["nitrogen", "aeration", "chemicals", "sludge", "biogas"]
        ]}))
        result = run_cli("session", "classify", "--session", str(session_path),
                         "--classification", str(cls))
        assert result.returncode == 1
        err = json.loads(result.stderr)
        assert "improvement" in err["error"]["message"]

    def test_project_then_status_shows_done(self, tmp_path):
        outcomes = tmp_path / "outcomes.json"
        gen = run_cli("generate", "--problem", "builtin:convex2", "--count", "8",
                      "--seed", "2", "--output", str(outcomes))
        assert gen.returncode == 0, gen.stderr
        approx = tmp_path / "approx.json"
        assert run_cli("paint", "--input", str(outcomes), "--output", str(approx)).returncode == 0
        surrogate = tmp_path / "surrogate.json"
        assert run_cli("surrogate", "--input", str(approx),
                       "--output", str(surrogate)).returncode == 0
        session = tmp_path / "session.json"
        assert run_cli("session", "start", "--surrogate", str(surrogate),
                       "--output", str(session), "--problem", "builtin:convex2",
                       "--seed", "2").returncode == 0
        project = run_cli("session", "project", "--session", str(session), "--index", "0")
        assert project.returncode == 0, project.stderr
        assert "pending -> running -> done" in project.stdout
        status = run_cli("session", "status", "--session", str(session), "--job", "job-1")
        doc = json.loads(status.stdout)
        assert doc["status"] == "done"
        assert doc["states"] == ["pending", "running", "done"]


class TestSession:
    def test_select_earlier_record_after_exploring(self, tmp_path):
        state = table1_session(tmp_path)
        from paint.nimbus import Classification, ObjectiveClass

        c = Classification(
            classes=[
                ObjectiveClass("<"), ObjectiveClass("="), ObjectiveClass("="),
                ObjectiveClass("="), ObjectiveClass("<>"),
            ],
            current_point=np.asarray(state.history[0].outcome),
        )
        state.classify(c)
        assert state.current == 1
        state.select_current(0)
        assert state.current == 0
        assert len(state.history) == 2  # nothing deleted

    def test_select_latest_is_noop(self, tmp_path):
        state = table1_session(tmp_path)
        state.select_current(0)
        assert state.current == 0

    def test_select_out_of_range(self, tmp_path):
        state = table1_session(tmp_path)
        with pytest.raises(ContractError):
            state.select_current(5)

    def test_roundtrip_bytes(self, tmp_path):
        state = table1_session(tmp_path)
        path = tmp_path / "s.json"
        save_session(state, str(path))
        first = path.read_bytes()
        save_session(load_session(str(path)), str(path))
        assert path.read_bytes() == first

    def test_history_records_never_rewritten(self, tmp_path):
        state = table1_session(tmp_path)
        snapshot = json.dumps(state.history[0].to_json_dict(), sort_keys=True)
        from paint.nimbus import Classification, ObjectiveClass

        c = Classification(
            classes=[
                ObjectiveClass("<"), ObjectiveClass("="), ObjectiveClass("="),
                ObjectiveClass("="), ObjectiveClass("<>"),
            ],
            current_point=np.asarray(state.history[0].outcome),
        )
        state.classify(c)
        state.select_current(0)
        assert json.dumps(state.history[0].to_json_dict(), sort_keys=True) == snapshot


@pytest.fixture
def client(tmp_path):
    state = table1_session(tmp_path, problem=None)
    manager = SessionManager(state, str(tmp_path / "session.json"))
    manager.persist()
    return TestClient(create_app(manager))


class TestApi:
    def test_snapshot_and_meta(self, client):
        snap = client.get("/api/session").json()
        assert snap["current"] == 0
        assert snap["history"][0]["kind"] == "neutral_start"
        meta = client.get("/api/meta").json()
        assert [o["name"] for o in meta["objectives"]] == [
            "nitrogen", "aeration", "chemicals", "sludge", "biogas"
        ]
        biogas = meta["objectives"][4]
        assert biogas["direction"] == "maximize"
        assert biogas["best"] > biogas["worst"]  # display space: more biogas is better

    def test_classify_valid_appends_record(self, client):
        payload = {"classification": {"classes": [
            {"objective": "nitrogen", "kind": "<"},
            {"objective": "aeration", "kind": "="},
            {"objective": "chemicals", "kind": "="},
            {"objective": "sludge", "kind": "="},
            {"objective": "biogas", "kind": "<>"},
        ]}}
        reply = client.post("/api/session/classify", json=payload)
        assert reply.status_code == 200, reply.text
        body = reply.json()
        assert body["record"]["kind"] == "classification"
        history = client.get("/api/session/history").json()["records"]
        assert len(history) == 2

    def test_classify_invalid_is_422(self, client):
        payload = {"classification": {"classes": [
            {"objective": name, "kind": "="} for name in
            ["nitrogen", "aeration", "chemicals", "sludge", "biogas"]
        ]}}
        reply = client.post("/api/session/classify", json=payload)
        assert reply.status_code == 422
        assert reply.json()["violations"]

    def test_select_roundtrip(self, client):
        reply = client.post("/api/session/select", json={"index": 0})
        assert reply.status_code == 200
        assert reply.json()["current"] == 0
        assert client.post("/api/session/select", json={"index": 9}).status_code == 400

    def test_project_without_problem_fails_cleanly(self, client):
        reply = client.post("/api/session/project", json={"index": 0})
        assert reply.status_code == 400
        assert "problem" in reply.json()["error"]["message"]

    def test_fixture_parity_with_validation_rules(self, client):
        doc = json.loads((FIXTURES / "classification_fixtures.json").read_text())
        for case in doc["cases"]:
            reply = client.post(
                "/api/session/classify",
                json={"classification": {"classes": case["classes"], "base_index": 0}},
            )
            accepted = reply.status_code == 200
            assert accepted == case["valid"], (case["name"], reply.status_code, reply.text)


class TestApiCliParity:
    def test_classify_produces_identical_state(self, tmp_path):
        cls_payload = {"classes": [
            {"objective": "nitrogen", "kind": "<"},
            {"objective": "aeration", "kind": ">=", "level": 417.0},
            {"objective": "chemicals", "kind": "="},
            {"objective": "sludge", "kind": "="},
            {"objective": "biogas", "kind": "<>"},
        ]}

        # via API
        api_path = tmp_path / "api.json"
        state_api = table1_session(tmp_path)
        manager = SessionManager(state_api, str(api_path))
        manager.persist()
        api_client = TestClient(create_app(manager))
        assert api_client.post(
            "/api/session/classify", json={"classification": cls_payload}
        ).status_code == 200

        # via CLI
        cli_path = tmp_path / "cli.json"
        save_session(table1_session(tmp_path), str(cli_path))
        cls_file = tmp_path / "cls.json"
        cls_file.write_text(json.dumps(cls_payload))
        result = run_cli("session", "classify", "--session", str(cli_path),
                         "--classification", str(cls_file))
        assert result.returncode == 0, result.stderr

        def comparable(path):
            doc = json.loads(path.read_text())
            for record in doc["history"]:
                record.pop("timestamp")
            doc.pop("created")
            return doc

        assert comparable(api_path) == comparable(cli_path)


class TestServeProcess:
    def test_live_server_classify_project_poll(self, tmp_path):
        outcomes = tmp_path / "outcomes.json"
        assert run_cli("generate", "--problem", "builtin:convex2", "--count", "8",
                       "--seed", "3", "--output", str(outcomes)).returncode == 0
        approx = tmp_path / "approx.json"
        assert run_cli("paint", "--input", str(outcomes), "--output", str(approx)).returncode == 0
        surrogate = tmp_path / "surrogate.json"
        assert run_cli("surrogate", "--input", str(approx),
                       "--output", str(surrogate)).returncode == 0
        session = tmp_path / "session.json"
        assert run_cli("session", "start", "--surrogate", str(surrogate), "--output",
                       str(session), "--problem", "builtin:convex2",
                       "--seed", "3").returncode == 0

        import httpx

        port = 8621
        proc = subprocess.Popen(
            [sys.executable, "-m", "paint.cli", "serve", "--session", str(session),
             "--port", str(port)],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        base = f"http://127.0.0.1:{port}"
        try:
            for _ in range(50):
                try:
                    httpx.get(base + "/api/meta", timeout=1.0)
                    break
                except Exception:
                    time.sleep(0.2)
            reply = httpx.post(base + "/api/session/project", json={"index": 0}, timeout=10)
            assert reply.status_code == 200
            job_id = reply.json()["job_id"]
            deadline = time.time() + 60
            status = None
            while time.time() < deadline:
                status = httpx.get(f"{base}/api/jobs/{job_id}", timeout=10).json()
                if status["status"] in ("done", "failed"):
                    break
                time.sleep(0.3)
            assert status is not None and status["status"] == "done", status
            assert status["result"]["kind"] == "projection"
        finally:
            proc.terminate()
            proc.wait(timeout=10)
