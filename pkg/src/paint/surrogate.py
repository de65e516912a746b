"""The mixed integer linear surrogate implied by an approximation.

The feasible outcomes of the surrogate are exactly the union of the
approximation's polytopes: a binary y_j picks one polytope, barycentric
weights lambda_{j,l} mix its vertices, and z is the mixed point.  The
achievement-scalarized instance can be shipped to any MILP solver through
the LP text format, but because exactly one polytope is active at the
optimum the problem also decomposes exactly: one small LP per polytope,
best value wins.  The decomposition is what this module solves internally.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .approximation import Approximation
from .errors import ContractError, InfeasibleScalarizationError, NumericalError
from .lp import LE, EQ, LinearProgram, solve_lp
from .lpformat import LpModel, write_lp_text
from .outcomes import Ranges


@dataclass
class SurrogateProblem:
    """Vertex matrix plus the polytope index matrix A (rows padded to c)."""

    vertex_matrix: np.ndarray   # (n, k) canonical outcome points
    index_matrix: np.ndarray    # (m, c) vertex indices, padded by repeating the first
    row_sizes: np.ndarray       # (m,) true vertex counts before padding
    approximation: Approximation | None = None

    def __post_init__(self):
        self.vertex_matrix = np.asarray(self.vertex_matrix, dtype=float)
        self.index_matrix = np.asarray(self.index_matrix, dtype=int)
        self.row_sizes = np.asarray(self.row_sizes, dtype=int)
        if self.index_matrix.ndim != 2 or self.index_matrix.shape[0] == 0:
            raise ContractError("surrogate needs at least one polytope")
        if self.index_matrix.min() < 0 or self.index_matrix.max() >= self.vertex_matrix.shape[0]:
            raise ContractError("polytope index out of range")

    @property
    def m(self) -> int:
        return self.index_matrix.shape[0]

    @property
    def c(self) -> int:
        return self.index_matrix.shape[1]

    @property
    def k(self) -> int:
        return self.vertex_matrix.shape[1]

    def to_json_dict(self) -> dict:
        doc = {
            "vertex_matrix": self.vertex_matrix.tolist(),
            "index_matrix": self.index_matrix.tolist(),
            "row_sizes": self.row_sizes.tolist(),
        }
        if self.approximation is not None:
            doc["approximation"] = self.approximation.to_json_dict()
        return doc

    def dump_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SurrogateProblem":
        approx = None
        if "approximation" in doc:
            approx = Approximation.from_json_dict(doc["approximation"])
        return cls(
            vertex_matrix=np.asarray(doc["vertex_matrix"], dtype=float),
            index_matrix=np.asarray(doc["index_matrix"], dtype=int),
            row_sizes=np.asarray(doc["row_sizes"], dtype=int),
            approximation=approx,
        )


@dataclass
class ScalarizationSpec:
    """Reference point, weights and augmentation for one achievement solve.

    The achievement value of an outcome z is
    ``max_i w_i (z_i - r_i) + rho * sum_i w_i (z_i - r_i)``;
    ``extra_bounds`` adds per-objective caps z_i <= bound (NaN = none).
    """

    reference: np.ndarray
    weights: np.ndarray
    rho: float = 1e-4
    extra_bounds: np.ndarray | None = None

    def __post_init__(self):
        self.reference = np.asarray(self.reference, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ContractError("weights must be positive and finite")
        if self.rho < 0:
            raise ContractError("rho must be >= 0")
        if self.extra_bounds is not None:
            self.extra_bounds = np.asarray(self.extra_bounds, dtype=float)
            if self.extra_bounds.shape != self.reference.shape:
                raise ContractError("extra_bounds length mismatch")

    def value(self, z: np.ndarray) -> float:
        diff = self.weights * (np.asarray(z, dtype=float) - self.reference)
        return float(diff.max() + self.rho * diff.sum())


@dataclass
class ScalarizedSolution:
    z: np.ndarray
    polytope_index: int
    barycentric: np.ndarray
    value: float


def build_surrogate(approx: Approximation) -> SurrogateProblem:
    """Materialize the index matrix of the surrogate from an approximation."""
    if not approx.polytopes:
        raise ContractError("approximation has no polytopes")
    sizes = np.array([len(p.vertex_indices) for p in approx.polytopes], dtype=int)
    c = int(sizes.max())
    rows = np.empty((len(approx.polytopes), c), dtype=int)
    for j, poly in enumerate(approx.polytopes):
        idx = list(poly.vertex_indices)
        rows[j] = idx + [idx[0]] * (c - len(idx))  # pad by repeating the first vertex
    return SurrogateProblem(
        vertex_matrix=approx.outcome_set.points,
        index_matrix=rows,
        row_sizes=sizes,
        approximation=approx,
    )


def neutral_reference(ranges: Ranges) -> np.ndarray:
    """Midpoint of ideal and estimated nadir: the neutral compromise reference."""
    return (ranges.ideal + ranges.nadir_estimate) / 2.0


def export_milp(prob: SurrogateProblem, scal: ScalarizationSpec, sink=None) -> str:
    """Emit the scalarized surrogate MILP in LP text format.

    Variables are named lambda_j_l, y_j, z_i and t (1-based); the emitted
    text is deterministic for identical inputs.
    """
    m, c, k = prob.m, prob.c, prob.k
    w, r, rho = scal.weights, scal.reference, scal.rho

    lam = [[f"lambda_{j + 1}_{l + 1}" for l in range(c)] for j in range(m)]
    ys = [f"y_{j + 1}" for j in range(m)]
    zs = [f"z_{i + 1}" for i in range(k)]

    objective: list[tuple[str, float]] = [("t", 1.0)]
    constant = 0.0
    if rho > 0:
        for i in range(k):
            objective.append((zs[i], rho * w[i]))
        constant = -float(rho * np.dot(w, r))

    constraints = []
    all_lambda = [(lam[j][l], 1.0) for j in range(m) for l in range(c)]
    constraints.append(("sum_lambda", all_lambda, "=", 1.0))
    for j in range(m):
        terms = [(lam[j][l], 1.0) for l in range(c)] + [(ys[j], -1.0)]
        constraints.append((f"link_{j + 1}", terms, "<=", 0.0))
    constraints.append(("sum_y", [(y, 1.0) for y in ys], "=", 1.0))
    for i in range(k):
        terms: list[tuple[str, float]] = [(zs[i], 1.0)]
        for j in range(m):
            for l in range(c):
                coeff = -float(prob.vertex_matrix[prob.index_matrix[j, l], i])
                terms.append((lam[j][l], coeff))
        constraints.append((f"zdef_{i + 1}", terms, "=", 0.0))
    for i in range(k):
        terms = [(zs[i], float(w[i])), ("t", -1.0)]
        constraints.append((f"tlink_{i + 1}", terms, "<=", float(w[i] * r[i])))
    if scal.extra_bounds is not None:
        for i in range(k):
            if np.isfinite(scal.extra_bounds[i]):
                constraints.append(
                    (f"eps_{i + 1}", [(zs[i], 1.0)], "<=", float(scal.extra_bounds[i]))
                )

    bounds = {lam[j][l]: (0.0, 1.0) for j in range(m) for l in range(c)}
    model = LpModel(
        name="achievement scalarization over the front approximation",
        sense="min",
        objective=objective,
        objective_constant=constant,
        constraints=constraints,
        bounds=bounds,
        free=zs + ["t"],
        binaries=ys,
    )
    text = write_lp_text(model)
    if sink is not None:
        sink.write(text)
    return text


def _polytope_lower_bounds(prob: SurrogateProblem, scal: ScalarizationSpec) -> np.ndarray:
    """Per-polytope lower bound on the achievement value (for pruning)."""
    # weighted deviations per polytope vertex slot: (m, k, c)
    g = (
        scal.weights[None, :, None]
        * (prob.vertex_matrix[prob.index_matrix].transpose(0, 2, 1) - scal.reference[None, :, None])
    )
    per_obj_min = g.min(axis=2)  # (m, k): best any mix can do per objective
    return per_obj_min.max(axis=1) + scal.rho * per_obj_min.sum(axis=1)


def _solve_polytope_lp(
    verts_w: np.ndarray, r_w: np.ndarray, rho: float, bounds_w: np.ndarray | None
) -> tuple[np.ndarray, float] | None:
    """min over the unit simplex of the achievement value, weighted coords.

    Returns (barycentric weights, achievement value) or None if the extra
    bounds cut off the whole polytope.
    """
    cc, k = verts_w.shape
    nvars = cc + 1  # lambda..., t
    objective = np.zeros(nvars)
    objective[:cc] = rho * verts_w.sum(axis=1)
    objective[cc] = 1.0

    rows = []
    rels = []
    rhs = []
    row = np.zeros(nvars)
    row[:cc] = 1.0
    rows.append(row)
    rels.append(EQ)
    rhs.append(1.0)
    for i in range(k):
        row = np.zeros(nvars)
        row[:cc] = verts_w[:, i]
        row[cc] = -1.0
        rows.append(row)
        rels.append(LE)
        rhs.append(r_w[i])
    if bounds_w is not None:
        for i in range(k):
            if np.isfinite(bounds_w[i]):
                row = np.zeros(nvars)
                row[:cc] = verts_w[:, i]
                rows.append(row)
                rels.append(LE)
                rhs.append(bounds_w[i])

    lower = np.zeros(nvars)
    lower[cc] = -np.inf
    upper = np.full(nvars, np.inf)
    upper[:cc] = 1.0
    sol = solve_lp(
        LinearProgram(
            objective=objective,
            sense="min",
            a=np.array(rows),
            relations=rels,
            rhs=np.array(rhs),
            lower=lower,
            upper=upper,
        )
    )
    if sol.status == "infeasible":
        return None
    if sol.status != "optimal":
        raise NumericalError(f"polytope LP status {sol.status}")
    lam = sol.point[:cc]
    z_w = lam @ verts_w
    value = float((z_w - r_w).max() + rho * (z_w - r_w).sum())
    return lam, value


def solve_scalarized(prob: SurrogateProblem, scal: ScalarizationSpec) -> ScalarizedSolution:
    """Best achievement value over the whole approximation.

    Exactly equivalent to solving the exported MILP: the binaries select one
    polytope, so the minimum over per-polytope LPs is the MILP optimum.
    Ties go to the lowest polytope index.  Polytopes whose best possible
    value already exceeds the incumbent are pruned without an LP solve.
    """
    m = prob.m
    w, r, rho = scal.weights, scal.reference, scal.rho
    verts_all = prob.vertex_matrix[prob.index_matrix]  # (m, c, k)
    verts_w_all = verts_all * w[None, None, :]
    r_w = r * w
    bounds_w = None
    has_bounds = scal.extra_bounds is not None and np.any(np.isfinite(scal.extra_bounds))
    if has_bounds:
        bounds_w = np.where(
            np.isfinite(scal.extra_bounds), scal.extra_bounds * w, np.inf
        )

    lower_bounds = _polytope_lower_bounds(prob, scal)

    # cheap incumbent: best single vertex that satisfies the bounds
    diffs = verts_w_all - r_w[None, None, :]  # (m, c, k)
    vertex_values = diffs.max(axis=2) + rho * diffs.sum(axis=2)  # (m, c)
    if has_bounds:
        violates = np.any(verts_w_all > bounds_w[None, None, :] + 1e-12, axis=2)
        vertex_values = np.where(violates, np.inf, vertex_values)
    incumbent = float(vertex_values.min()) if np.isfinite(vertex_values).any() else np.inf

    best: ScalarizedSolution | None = None
    tie_eps = 1e-12
    for j in range(m):
        # incumbent and best.value are upper bounds on the optimum; the
        # optimal polytope's lower bound never exceeds them, so this prune
        # cannot discard it (ties survive and resolve to the lowest index)
        cutoff = incumbent if best is None else min(incumbent, best.value)
        if lower_bounds[j] > cutoff + tie_eps:
            continue
        cc = int(prob.row_sizes[j])
        result = _solve_polytope_lp(verts_w_all[j, :cc], r_w, rho, bounds_w)
        if result is None:
            continue
        lam, value = result
        if best is None or value < best.value - tie_eps:
            z = lam @ verts_all[j, :cc]
            best = ScalarizedSolution(
                z=z, polytope_index=j, barycentric=lam, value=value
            )
    if best is None:
        raise InfeasibleScalarizationError(
            "no polytope of the approximation satisfies the requested bounds"
        )
    return best
