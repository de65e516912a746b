"""Command line for the whole pipeline.

Each verb is one box of the decision workflow: ingest or generate the
given outcomes, paint the approximation, materialize the surrogate, run
session steps, update the approximation with new true outcomes, serve the
HTTP API.  Errors leave as machine-readable JSON on stderr with a nonzero
exit status.
"""

from __future__ import annotations

import argparse
import json
import sys

from .approximation import Approximation, build_approximation
from .config import CrsOptions, PaintConfig
from .errors import ContractError, PaintError
from .nimbus import validate_classification
from .original import generate_initial_outcomes
from .outcomes import parse_outcome_set
from .session import (
    SessionState,
    classification_from_wire,
    load_problem,
    load_session,
    save_session,
    start_session,
)
from .surrogate import (
    ScalarizationSpec,
    SurrogateProblem,
    build_surrogate,
    export_milp,
    neutral_reference,
)


def _load_config(args) -> PaintConfig:
    cfg = PaintConfig.from_json_file(args.config) if args.config else PaintConfig()
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg.geometry.seed = seed
        cfg.crs.seed = seed
    return cfg


def _problem_descriptor(raw: str) -> dict:
    if raw.startswith("builtin:"):
        return {"kind": "builtin", "name": raw.split(":", 1)[1]}
    with open(raw, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _read_outcomes(path: str):
    fmt = "csv" if path.endswith(".csv") else "json"
    with open(path, "r", encoding="utf-8") as fh:
        return parse_outcome_set(fh.read(), fmt)


def _write(path: str | None, text: str):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def cmd_ingest(args) -> int:
    outcome_set = _read_outcomes(args.input)
    _write(args.output, outcome_set.dump_json())
    print(
        f"ingested {outcome_set.n} outcomes, {outcome_set.k} objectives "
        f"({sum(1 for s in outcome_set.specs if s.direction == 'maximize')} maximized)"
    )
    return 0


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    prob = load_problem(_problem_descriptor(args.problem))
    crs = CrsOptions(
        population=cfg.crs.population,
        max_evals=cfg.crs.max_evals,
        spread_tol=cfg.crs.spread_tol,
        seed=cfg.crs.seed,
    )
    result = generate_initial_outcomes(
        prob, args.count, seed=args.seed or 0, crs_opts=crs, rho=cfg.scalarization.rho
    )
    _write(args.output, result.outcome_set.dump_json())
    if args.decisions:
        doc = {"decisions": result.decisions.tolist(), "stats": result.stats}
        _write(args.decisions, json.dumps(doc, indent=2, sort_keys=True))
    print(
        f"generated {result.outcome_set.n} mutually nondominated outcomes "
        f"from {args.count} scalarizations ({result.stats['evaluations']} evaluations)"
    )
    return 0


def cmd_paint(args) -> int:
    cfg = _load_config(args)
    outcome_set = _read_outcomes(args.input)
    approx = build_approximation(outcome_set, cfg)
    _write(args.output, approx.dump_json())
    stats = approx.stats
    print(
        f"triangulation cells: {stats['cells']}; candidates: {stats['candidates']}; "
        f"accepted: {stats['accepted']}; polytopes after subset removal: {stats['polytopes']}"
    )
    return 0


def cmd_surrogate(args) -> int:
    with open(args.input, "r", encoding="utf-8") as fh:
        approx = Approximation.from_json_dict(json.load(fh))
    surrogate = build_surrogate(approx)
    _write(args.output, surrogate.dump_json())
    print(
        f"surrogate: {surrogate.m} polytopes x {surrogate.c} vertex slots -> "
        f"{surrogate.m * surrogate.c} continuous + {surrogate.m} binary variables"
    )
    if args.export_milp:
        from .outcomes import compute_ranges

        cfg = _load_config(args)
        ranges = compute_ranges(approx.outcome_set, cfg.filter.range_delta)
        spec = ScalarizationSpec(
            reference=neutral_reference(ranges),
            weights=ranges.weights,
            rho=cfg.scalarization.rho,
        )
        with open(args.export_milp, "w", encoding="utf-8") as fh:
            export_milp(surrogate, spec, fh)
        print(f"neutral-reference MILP written to {args.export_milp}")
    return 0


def _print_record(state: SessionState, index: int):
    record = state.history[index]
    marker = "*" if index == state.current else " "
    if record.has_outcome():
        values = ", ".join(
            f"{s.name}={v:g}" for s, v in zip(state.specs, record.outcome_display)
        )
    else:
        values = "no approximate outcome satisfies these bounds"
    print(f"{marker}[{index}] {record.kind}: {values}")


def cmd_session(args) -> int:
    cfg = _load_config(args)
    if args.session_cmd == "start":
        descriptor = _problem_descriptor(args.problem) if args.problem else None
        state = start_session(args.surrogate, cfg, descriptor, seed=args.seed or 0)
        save_session(state, args.output)
        print(f"session started with neutral compromise outcome:")
        _print_record(state, 0)
        return 0

    state = load_session(args.session)
    if args.session_cmd == "classify":
        with open(args.classification, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        doc = doc.get("classification", doc)
        base_index = doc.get("base_index")
        base = state.history[base_index] if base_index is not None else state.current_record()
        classification = classification_from_wire(doc, state, base)
        violations = validate_classification(classification)
        if violations:
            raise ContractError("invalid classification: " + "; ".join(violations))
        state.classify(classification)
        save_session(state, args.session)
        _print_record(state, len(state.history) - 1)
        return 0
    if args.session_cmd == "select":
        state.select_current(args.index)
        save_session(state, args.session)
        _print_record(state, state.current)
        return 0
    if args.session_cmd == "project":
        prob = load_problem(
            _problem_descriptor(args.problem) if args.problem else state.problem_descriptor or {}
        )
        job = state.new_job(args.index if args.index is not None else state.current)
        save_session(state, args.session)
        state.run_projection(job, prob)  # synchronous in one-shot CLI mode
        save_session(state, args.session)
        print(f"{job.id}: {' -> '.join(job.states)}")
        _print_record(state, job.result_index)
        return 0
    if args.session_cmd == "status":
        if args.job:
            job = state.job_by_id(args.job)
            print(json.dumps(job.to_json_dict(), indent=2, sort_keys=True))
        else:
            print(f"records: {len(state.history)}, current: {state.current}")
            for job in state.jobs:
                print(f"{job.id}: {job.status} (record {job.record_index})")
        return 0
    if args.session_cmd == "history":
        for i in range(len(state.history)):
            _print_record(state, i)
        return 0
    raise ContractError(f"unknown session command {args.session_cmd!r}")


def cmd_update(args) -> int:
    state = load_session(args.session)
    if args.outcomes:
        new_outcomes = _read_outcomes(args.outcomes)
    elif args.include_projections:
        new_outcomes = state.projection_outcomes()
    else:
        raise ContractError("update needs --outcomes or --include-projections")
    summary = state.update_outcomes(new_outcomes)
    save_session(state, args.session)
    for warning in summary["warnings"]:
        print(f"warning: {warning}")
    if summary["rebuilt"]:
        stats = summary["stats"]
        print(
            f"approximation rebuilt: {stats['points']} outcomes, "
            f"{stats['polytopes']} polytopes"
        )
    else:
        print("approximation unchanged (all new outcomes rejected)")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import SessionManager, create_app

    state = load_session(args.session)
    if args.problem:
        state.problem_descriptor = _problem_descriptor(args.problem)
    manager = SessionManager(state, args.session)
    app = create_app(manager, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paint",
        description="Interpolated Pareto front approximations with interactive NIMBUS sessions",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    def common(p, seed=True):
        p.add_argument("--config", help="JSON config file for tolerances and defaults")
        if seed:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("ingest", help="validate and canonicalize an outcome file")
    p.add_argument("--input", required=True, help="CSV or JSON outcome file")
    p.add_argument("--output", help="canonical outcome JSON (stdout when omitted)")
    common(p, seed=False)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("generate", help="generate initial outcomes for a problem")
    p.add_argument("--problem", required=True, help="problem JSON or builtin:<name>")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--decisions", help="sidecar JSON for decision vectors")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("paint", help="build the Pareto front approximation")
    p.add_argument("--input", required=True, help="outcome CSV/JSON")
    p.add_argument("--output", required=True, help="approximation JSON")
    common(p)
    p.set_defaults(func=cmd_paint)

    p = sub.add_parser("surrogate", help="materialize the surrogate problem")
    p.add_argument("--input", required=True, help="approximation JSON")
    p.add_argument("--output", required=True, help="surrogate JSON")
    p.add_argument("--export-milp", help="also write the neutral-reference MILP (LP format)")
    common(p)
    p.set_defaults(func=cmd_surrogate)

    p = sub.add_parser("session", help="interactive session steps")
    ssub = p.add_subparsers(dest="session_cmd", required=True)

    sp = ssub.add_parser("start")
    sp.add_argument("--surrogate", required=True)
    sp.add_argument("--output", required=True)
    sp.add_argument("--problem", help="problem JSON or builtin:<name>")
    common(sp)
    sp.set_defaults(func=cmd_session)

    for name in ("classify", "select", "project", "status", "history"):
        sp = ssub.add_parser(name)
        sp.add_argument("--session", required=True)
        if name == "classify":
            sp.add_argument("--classification", required=True, help="classification JSON")
        if name in ("select", "project"):
            sp.add_argument("--index", type=int, default=None, required=(name == "select"))
        if name == "project":
            sp.add_argument("--problem", help="override the session problem")
        if name == "status":
            sp.add_argument("--job", help="job id")
        common(sp)
        sp.set_defaults(func=cmd_session)

    p = sub.add_parser("update", help="merge new outcomes and rebuild the surrogate")
    p.add_argument("--session", required=True)
    p.add_argument("--outcomes", help="outcome CSV/JSON with new points")
    p.add_argument(
        "--include-projections",
        action="store_true",
        help="merge the session's projected outcomes",
    )
    common(p)
    p.set_defaults(func=cmd_update)

    p = sub.add_parser("serve", help="serve the HTTP API for the browser companion")
    p.add_argument("--session", required=True)
    p.add_argument("--port", type=int, default=8550)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--problem", help="problem JSON or builtin:<name>")
    p.add_argument("--static", help="directory with the built UI to serve at /")
    common(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except PaintError as exc:
        json.dump({"error": exc.payload()}, sys.stderr)
        sys.stderr.write("\n")
        return 1
    except FileNotFoundError as exc:
        json.dump({"error": {"code": "io", "message": str(exc)}}, sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
