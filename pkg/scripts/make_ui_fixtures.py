#!/usr/bin/env python3
"""Regenerate the shared classification fixture set.

The fixtures pin the validation contract between the HTTP API and the
browser client: both must accept/reject exactly these cases.  Levels are
concrete display-space numbers derived from the deterministic wastewater
session, so the same file drives the Python API tests and the frontend
contract tests.
"""

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from conftest import TABLE1_CSV

from paint.approximation import build_approximation
from paint.config import PaintConfig
from paint.outcomes import compute_ranges, parse_outcome_set
from paint.session import SessionState
from paint.surrogate import build_surrogate


def build_session() -> SessionState:
    outcome_set = parse_outcome_set(TABLE1_CSV, "csv")
    approx = build_approximation(outcome_set)
    surrogate = build_surrogate(approx)
    config = PaintConfig()
    ranges = compute_ranges(outcome_set, config.filter.range_delta)
    state = SessionState(surrogate=surrogate, ranges=ranges, config=config)
    state.neutral_start()
    return state


def cases(names, current):
    cur = dict(zip(names, current))
    n, a, c, s, b = names  # nitrogen, aeration, chemicals, sludge, biogas

    def cls(*entries):
        return [
            {"objective": name, "kind": kind, "level": level} for name, kind, level in entries
        ]

    valid = [
        ("improve-one-free-one", cls((n, "<", None), (a, "=", None), (c, "=", None),
                                     (s, "=", None), (b, "<>", None))),
        ("improve-all-but-one-bounded", cls((n, "<", None), (a, "<", None), (c, "<", None),
                                            (s, "<", None), (b, ">=", round(cur[b] - 100, 2)))),
        ("aspiration-below-current", cls((n, "<=", round(cur[n] - 0.2, 3)), (a, "=", None),
                                         (c, "=", None), (s, "=", None), (b, "<>", None))),
        ("bound-exactly-at-current", cls((n, "<", None), (a, ">=", cur[a]),
                                         (c, "=", None), (s, "=", None), (b, "=", None))),
        ("maximized-aspiration-above-current", cls((n, "=", None), (a, "=", None), (c, "=", None),
                                                   (s, ">=", round(cur[s] + 100, 2)),
                                                   (b, "<=", round(cur[b] + 50, 2)))),
        ("maximized-bound-below-current", cls((n, "<", None), (a, "=", None), (c, "=", None),
                                              (s, "=", None), (b, ">=", round(cur[b] - 200, 2)))),
        ("two-improve-two-relax", cls((n, "<", None), (a, "<=", round(cur[a] - 1.0, 3)),
                                      (c, ">=", round(cur[c] + 2.0, 3)), (s, "<>", None),
                                      (b, "=", None))),
        ("all-free-but-one-improve", cls((n, "<", None), (a, "<>", None), (c, "<>", None),
                                         (s, "<>", None), (b, "<>", None))),
        ("worsen-everything-but-one", cls((n, ">=", round(cur[n] + 1.0, 3)),
                                          (a, ">=", round(cur[a] + 5.0, 3)),
                                          (c, ">=", round(cur[c] + 5.0, 3)),
                                          (s, ">=", round(cur[s] + 200, 2)),
                                          (b, "<", None))),
        ("keep-three", cls((n, "=", None), (a, "=", None), (c, "<", None),
                           (s, "=", None), (b, ">=", round(cur[b] - 150, 2)))),
        ("aspiration-just-below", cls((n, "<=", round(cur[n] - 0.001, 4)), (a, "<>", None),
                                      (c, "=", None), (s, "=", None), (b, "=", None))),
    ]
    invalid = [
        ("all-keep", cls((n, "=", None), (a, "=", None), (c, "=", None),
                         (s, "=", None), (b, "=", None))),
        ("nothing-improves", cls((n, ">=", round(cur[n] + 1, 3)), (a, "<>", None),
                                 (c, "=", None), (s, "=", None), (b, "=", None))),
        ("nothing-relaxes", cls((n, "<", None), (a, "<", None), (c, "<", None),
                                (s, "<", None), (b, "<", None))),
        ("aspiration-above-current", cls((n, "<=", round(cur[n] + 0.5, 3)), (a, "=", None),
                                         (c, "=", None), (s, "=", None), (b, "<>", None))),
        ("aspiration-equal-to-current", cls((n, "<=", round(cur[n], 6)), (a, "=", None),
                                            (c, "=", None), (s, "=", None), (b, "<>", None))),
        ("bound-below-current", cls((n, ">=", round(cur[n] - 0.5, 3)), (a, "<", None),
                                    (c, "=", None), (s, "=", None), (b, "=", None))),
        ("maximized-aspiration-below-current", cls((n, "<", None), (a, "=", None), (c, "=", None),
                                                   (s, "<>", None),
                                                   (b, "<=", round(cur[b] - 100, 2)))),
        ("maximized-bound-above-current", cls((n, "<", None), (a, "=", None), (c, "=", None),
                                              (s, "=", None), (b, ">=", round(cur[b] + 100, 2)))),
        ("missing-level-aspiration", cls((n, "<=", None), (a, "=", None), (c, "=", None),
                                         (s, "=", None), (b, "<>", None))),
        ("missing-level-bound", cls((n, "<", None), (a, ">=", None), (c, "=", None),
                                    (s, "=", None), (b, "=", None))),
        ("unknown-kind", cls((n, "!!", None), (a, "<", None), (c, "=", None),
                             (s, "=", None), (b, "<>", None))),
        ("missing-objective", cls((n, "<", None), (a, "=", None), (c, "=", None),
                                  (s, "=", None))),
    ]
    out = []
    for name, classes in valid:
        out.append({"name": name, "valid": True, "classes": classes})
    for name, classes in invalid:
        out.append({"name": name, "valid": False, "classes": classes})
    return out


def main():
    state = build_session()
    record = state.history[0]
    names = [s.name for s in state.specs]
    current = [float(v) for v in record.outcome_display]
    doc = {
        "meta": {
            "objectives": [
                {
                    "name": s.name,
                    "unit": s.unit,
                    "direction": s.direction,
                    "current": current[i],
                }
                for i, s in enumerate(state.specs)
            ]
        },
        "cases": cases(names, current),
    }
    out = ROOT / "fixtures" / "classification_fixtures.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({len(doc['cases'])} cases)")


if __name__ == "__main__":
    main()
