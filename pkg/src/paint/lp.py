"""Small dense linear-program kernel.

The instances solved here are tiny (tens of variables at most): pairwise
dominance tests between simplicial polytopes and per-polytope achievement
scalarizations.  A self-contained two-phase tableau simplex keeps the
package free of solver dependencies; pivoting is Dantzig's rule with a
deterministic Bland fallback, so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericalError

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-11

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LinearProgram:
    """min/max  objective . x  subject to dense rows and box bounds."""

    objective: np.ndarray
    sense: str = "min"
    a: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    relations: list[str] = field(default_factory=list)
    rhs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        n = self.objective.size
        self.a = np.asarray(self.a, dtype=float).reshape(-1, n) if np.size(self.a) else np.zeros((0, n))
        self.rhs = np.asarray(self.rhs, dtype=float)
        if self.lower is None:
            self.lower = np.zeros(n)
        if self.upper is None:
            self.upper = np.full(n, np.inf)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if self.a.shape[0] != self.rhs.size or self.a.shape[0] != len(self.relations):
            raise ContractError("constraint matrix, relations and rhs sizes disagree")
        if self.lower.size != n or self.upper.size != n:
            raise ContractError("bound vectors do not match variable count")
        if self.sense not in ("min", "max"):
            raise ContractError(f"bad sense {self.sense!r}")
        for rel in self.relations:
            if rel not in (LE, EQ, GE):
                raise ContractError(f"bad relation {rel!r}")
        if not np.all(np.isfinite(self.objective)) or not np.all(np.isfinite(self.a)):
            raise ContractError("non-finite coefficient")


@dataclass
class LpSolution:
    status: str
    value: float = np.nan
    point: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _pivot(tableau: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    basis[row] = col


def _run_simplex(tableau: np.ndarray, basis: np.ndarray, ncols: int) -> str:
    """Drive the tableau to optimality; returns OPTIMAL or UNBOUNDED."""
    m = tableau.shape[0] - 1
    bland_after = 50 + 10 * (m + ncols)
    max_iters = 500 + 50 * (m + ncols)
    for it in range(max_iters):
        costs = tableau[-1, :ncols]
        if it < bland_after:
            col = int(np.argmin(costs))
            if costs[col] >= -FEAS_TOL:
                return OPTIMAL
        else:  # Bland: first improving column, guarantees termination
            eligible = np.nonzero(costs < -FEAS_TOL)[0]
            if eligible.size == 0:
                return OPTIMAL
            col = int(eligible[0])
        column = tableau[:m, col]
        positive = column > PIVOT_TOL
        if not np.any(positive):
            return UNBOUNDED
        ratios = np.full(m, np.inf)
        ratios[positive] = tableau[:m, -1][positive] / column[positive]
        best = np.min(ratios)
        candidates = np.nonzero(ratios <= best + PIVOT_TOL)[0]
        # smallest basis index among ties (Bland-compatible, deterministic)
        row = int(candidates[np.argmin(basis[candidates])])
        _pivot(tableau, basis, row, col)
    raise NumericalError(
        f"simplex iteration cap exceeded ({max_iters} iterations, "
        f"{m} rows x {ncols} cols); problem may be cycling or ill-conditioned"
    )


def solve_lp(prob: LinearProgram) -> LpSolution:
    """Two-phase dense simplex over the given program.

    Optimal solutions satisfy all constraints within 1e-9; behaviour is
    deterministic for identical inputs.
    """
    n = prob.objective.size
    sign = 1.0 if prob.sense == "min" else -1.0
    cost = sign * prob.objective

    # Substitute every variable into a nonnegative one.  col_map holds
    # (kind, data) entries used to reconstruct the original point.
    columns: list[np.ndarray] = []
    col_cost: list[float] = []
    col_map: list[tuple] = []
    extra_rows: list[tuple[np.ndarray, str, float]] = []
    const_shift = 0.0
    a_t = prob.a.T if prob.a.size else np.zeros((n, 0))
    rhs_shift = np.zeros(prob.rhs.size)

    for j in range(n):
        lo, hi = prob.lower[j], prob.upper[j]
        col = a_t[j] if prob.a.size else np.zeros(0)
        if lo > hi:
            return LpSolution(status=INFEASIBLE)
        if np.isfinite(lo):
            # x = lo + x',  x' >= 0, optionally x' <= hi - lo
            columns.append(col)
            col_cost.append(cost[j])
            col_map.append(("shift", j, lo, 1.0))
            const_shift += cost[j] * lo
            rhs_shift += col * lo
            if np.isfinite(hi):
                extra_rows.append((len(columns) - 1, LE, hi - lo))
        elif np.isfinite(hi):
            # x = hi - x',  x' >= 0
            columns.append(-col)
            col_cost.append(-cost[j])
            col_map.append(("shift", j, hi, -1.0))
            const_shift += cost[j] * hi
            rhs_shift += col * hi
        else:
            # free: x = x+ - x-
            columns.append(col)
            col_cost.append(cost[j])
            col_map.append(("free_pos", j, 0.0, 1.0))
            columns.append(-col)
            col_cost.append(-cost[j])
            col_map.append(("free_neg", j, 0.0, -1.0))

    nsub = len(columns)
    mat = np.array(columns).T if nsub else np.zeros((0, 0))
    if prob.a.size:
        mat = mat.reshape(prob.a.shape[0], nsub)
    rows = [mat[i] for i in range(prob.a.shape[0])]
    rels = list(prob.relations)
    rhs = list(prob.rhs - rhs_shift)
    for col_idx, rel, value in extra_rows:
        row = np.zeros(nsub)
        row[col_idx] = 1.0
        rows.append(row)
        rels.append(rel)
        rhs.append(value)

    m = len(rows)
    amat = np.array(rows).reshape(m, nsub) if m else np.zeros((0, nsub))
    bvec = np.array(rhs)

    # slacks for inequalities
    slack_cols = []
    for i, rel in enumerate(rels):
        if rel == LE:
            slack_cols.append((i, 1.0))
        elif rel == GE:
            slack_cols.append((i, -1.0))
    nslack = len(slack_cols)
    full = np.zeros((m, nsub + nslack))
    full[:, :nsub] = amat
    for s, (i, coeff) in enumerate(slack_cols):
        full[i, nsub + s] = coeff

    # make rhs nonnegative
    for i in range(m):
        if bvec[i] < 0:
            full[i] *= -1.0
            bvec[i] *= -1.0

    ntotal = nsub + nslack
    basis = np.full(m, -1, dtype=int)
    for s, (i, coeff) in enumerate(slack_cols):
        if full[i, nsub + s] == 1.0:
            basis[i] = nsub + s
    need_artificial = [i for i in range(m) if basis[i] < 0]

    nart = len(need_artificial)
    tableau = np.zeros((m + 1, ntotal + nart + 1))
    tableau[:m, :ntotal] = full
    tableau[:m, -1] = bvec
    for a_i, i in enumerate(need_artificial):
        tableau[i, ntotal + a_i] = 1.0
        basis[i] = ntotal + a_i

    if nart:
        # phase 1: minimize artificial sum
        tableau[-1, ntotal : ntotal + nart] = 1.0
        for i in need_artificial:
            tableau[-1] -= tableau[i]
        status = _run_simplex(tableau, basis, ntotal + nart)
        if status != OPTIMAL or -tableau[-1, -1] > 1e-7:
            return LpSolution(status=INFEASIBLE)
        # pivot remaining artificials out of the basis where possible
        for i in range(m):
            if basis[i] >= ntotal:
                row = tableau[i, :ntotal]
                nz = np.nonzero(np.abs(row) > 1e-9)[0]
                if nz.size:
                    _pivot(tableau, basis, i, int(nz[0]))
        keep_rows = [i for i in range(m) if basis[i] < ntotal]
        tableau = np.vstack(
            [np.hstack([tableau[keep_rows, :ntotal], tableau[keep_rows, -1:]]), np.zeros(ntotal + 1)]
        )
        basis = basis[keep_rows]
        m = len(keep_rows)

    # phase 2 objective row
    tableau[-1, :] = 0.0
    tableau[-1, :nsub] = col_cost
    for i in range(m):
        if np.abs(tableau[-1, basis[i]]) > 0:
            tableau[-1] -= tableau[-1, basis[i]] * tableau[i]
    status = _run_simplex(tableau, basis, tableau.shape[1] - 1)
    if status == UNBOUNDED:
        return LpSolution(status=UNBOUNDED)

    y = np.zeros(tableau.shape[1] - 1)
    y[basis] = tableau[:m, -1]
    # reconstruct original variables from the substituted ones
    x = np.zeros(n)
    for value, (kind, j, offset, factor) in zip(y[:nsub], col_map):
        if kind == "shift":
            x[j] = offset + factor * value
        else:
            x[j] += factor * value
    objective_value = float(np.dot(sign * prob.objective, x))
    return LpSolution(status=OPTIMAL, value=sign * objective_value, point=x)


def max_dominating_gap(
    p_indices, q_indices, vertices: np.ndarray, tol: float = 1e-7
) -> float | None:
    """Largest total improvement of a point of P over a point of Q.

    Solves  max sum_i (q_i - p_i)  over p in conv(P), q in conv(Q) with
    p <= q componentwise.  None means the constraint set is empty (no
    point of P lies weakly below any point of Q); a value above ``tol``
    means some point of P dominates some point of Q.
    """
    vp = np.asarray(vertices, dtype=float)[list(p_indices)]
    vq = np.asarray(vertices, dtype=float)[list(q_indices)]
    np_, k = vp.shape
    nq = vq.shape[0]

    # quick infeasibility: p <= q needs min_P p_i <= max_Q q_i per coordinate
    if np.any(vp.min(axis=0) > vq.max(axis=0) + 1e-12):
        return None

    # quick dominance: a vertex pair already dominating settles the sign
    diff_ok = vp[:, None, :] <= vq[None, :, :] + 1e-15
    pair_ok = diff_ok.all(axis=2)
    if pair_ok.any():
        gains = (vq[None, :, :] - vp[:, None, :]).sum(axis=2)
        gains[~pair_ok] = -np.inf
        best_vertex_gap = float(gains.max())
        if best_vertex_gap > tol:
            return best_vertex_gap

    nvars = np_ + nq
    objective = np.concatenate([vp.sum(axis=1), -vq.sum(axis=1)])  # max sum(q) - sum(p)
    rows = []
    rels = []
    rhs = []
    lam_row = np.zeros(nvars)
    lam_row[:np_] = 1.0
    rows.append(lam_row)
    rels.append(EQ)
    rhs.append(1.0)
    mu_row = np.zeros(nvars)
    mu_row[np_:] = 1.0
    rows.append(mu_row)
    rels.append(EQ)
    rhs.append(1.0)
    for i in range(k):
        row = np.concatenate([vp[:, i], -vq[:, i]])
        rows.append(row)
        rels.append(LE)
        rhs.append(0.0)

    prob = LinearProgram(
        objective=objective,  # objective . v = sum(p) - sum(q) = -(gap)
        sense="min",
        a=np.array(rows),
        relations=rels,
        rhs=np.array(rhs),
    )
    sol = solve_lp(prob)
    if sol.status == INFEASIBLE:
        return None
    if sol.status != OPTIMAL:
        raise NumericalError(f"dominance LP ended with status {sol.status}")
    return float(-sol.value)
