"""The original-problem side: evaluators, CRS, projection, generation.

Everything downstream of the approximation treats the original problem as
an opaque, possibly expensive, box-constrained evaluator.  Two analytic
test problems with closed-form Pareto fronts stand in for a real
simulator; an external simulator can be attached as a child process
speaking line-delimited JSON on its standard streams.

Scalarized subproblems over the original problem are solved with a
Controlled Random Search (simplex-reflection variant) followed by a
finite-difference local descent, both derivative free with respect to the
evaluator and deterministic under a fixed seed.
"""

from __future__ import annotations

import json
import select
import subprocess
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import CrsOptions, LocalImproveOptions
from .errors import (
    ContractError,
    GenerationUnderflowError,
    ProjectionError,
)
from .outcomes import (
    MINIMIZE,
    ObjectiveSpec,
    OutcomeSet,
    Ranges,
    nondominated_mask,
    to_canonical,
)
from .surrogate import ScalarizationSpec


@dataclass
class ProblemDefinition:
    """Box-constrained multiobjective problem with an opaque evaluator.

    The evaluator maps a decision vector to objective values in each
    objective's natural direction; canonicalization happens here.
    """

    decision_dim: int
    bounds: np.ndarray  # (n, 2) finite box
    specs: list[ObjectiveSpec]
    evaluator: Callable[[np.ndarray], np.ndarray]
    cost_hint: float = 0.0
    name: str = ""

    def __post_init__(self):
        self.bounds = np.asarray(self.bounds, dtype=float).reshape(self.decision_dim, 2)
        if not np.all(np.isfinite(self.bounds)):
            raise ContractError("box bounds must be finite")
        if np.any(self.bounds[:, 0] > self.bounds[:, 1]):
            raise ContractError("lower bound above upper bound")

    @property
    def k(self) -> int:
        return len(self.specs)

    def evaluate_canonical(self, x: np.ndarray) -> np.ndarray:
        """Objective values with maximized objectives negated."""
        raw = np.asarray(self.evaluator(np.asarray(x, dtype=float)), dtype=float)
        return to_canonical(raw.reshape(1, -1), self.specs)[0]


class CachingEvaluator:
    """Exact-match cache around ``evaluate_canonical`` for one job."""

    def __init__(self, prob: ProblemDefinition):
        self.prob = prob
        self.cache: dict[tuple, np.ndarray] = {}
        self.evals = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        key = tuple(float(v) for v in x)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        value = self.prob.evaluate_canonical(x)
        self.cache[key] = value
        self.evals += 1
        return value


def _convex2_eval(x: np.ndarray) -> np.ndarray:
    return np.array([x[0] ** 2 + x[1] ** 2, (x[0] - 1.0) ** 2 + x[1] ** 2])


def _nonconvex2_eval(x: np.ndarray) -> np.ndarray:
    g = 1.0 + 9.0 * (x[1] + x[2]) / 2.0
    return np.array([x[0], g * (1.0 - (x[0] / g) ** 2)])


def convex2() -> ProblemDefinition:
    """n=2 box [0,1]^2; Pareto set x2=0, front {(t^2, (t-1)^2)}."""
    return ProblemDefinition(
        decision_dim=2,
        bounds=[[0.0, 1.0], [0.0, 1.0]],
        specs=[ObjectiveSpec("f1", "", MINIMIZE), ObjectiveSpec("f2", "", MINIMIZE)],
        evaluator=_convex2_eval,
        name="convex2",
    )


def nonconvex2() -> ProblemDefinition:
    """n=3 box [0,1]^3; Pareto front f2 = 1 - f1^2 (nonconvex)."""
    return ProblemDefinition(
        decision_dim=3,
        bounds=[[0.0, 1.0]] * 3,
        specs=[ObjectiveSpec("f1", "", MINIMIZE), ObjectiveSpec("f2", "", MINIMIZE)],
        evaluator=_nonconvex2_eval,
        name="nonconvex2",
    )


BUILTIN_PROBLEMS = {"convex2": convex2, "nonconvex2": nonconvex2}


def convex2_front_distance(z: np.ndarray) -> float:
    """Distance of a canonical outcome to the closed-form convex2 front."""
    ts = np.linspace(0.0, 1.0, 2001)
    front = np.stack([ts**2, (ts - 1.0) ** 2], axis=1)
    return float(np.linalg.norm(front - np.asarray(z, dtype=float), axis=1).min())


def nonconvex2_front_distance(z: np.ndarray) -> float:
    ts = np.linspace(0.0, 1.0, 2001)
    front = np.stack([ts, 1.0 - ts**2], axis=1)
    return float(np.linalg.norm(front - np.asarray(z, dtype=float), axis=1).min())


def crs_optimize(
    fun: Callable[[np.ndarray], float],
    bounds: np.ndarray,
    opts: CrsOptions | None = None,
) -> tuple[np.ndarray, float]:
    """Controlled Random Search over a box.

    A random population seeds the search; each step reflects the worst
    point of a randomly drawn (n+1)-point simplex through the centroid of
    the others, and the trial replaces the population's worst point when
    it improves on it.  Stops at the evaluation budget or when the
    population's value spread falls under the tolerance.
    """
    opts = opts or CrsOptions()
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or np.any(bounds[:, 0] > bounds[:, 1]):
        raise ContractError("invalid box bounds")
    if not np.all(np.isfinite(bounds)):
        raise ContractError("box must be bounded")
    n = bounds.shape[0]
    pop_size = opts.population if opts.population > 0 else 10 * (n + 1)
    pop_size = max(pop_size, n + 2)
    if opts.max_evals < pop_size:
        raise ContractError("max_evals must cover the initial population")
    rng = np.random.default_rng(opts.seed)

    lo, hi = bounds[:, 0], bounds[:, 1]
    pop = lo + rng.random((pop_size, n)) * (hi - lo)
    values = np.array([fun(x) for x in pop])
    evals = pop_size

    max_trials = 50 * opts.max_evals
    trials = 0
    while evals < opts.max_evals and trials < max_trials:
        trials += 1
        if values.max() - values.min() < opts.spread_tol:
            break
        idx = rng.choice(pop_size, size=n + 1, replace=False)
        simplex_vals = values[idx]
        worst_local = idx[int(np.argmax(simplex_vals))]
        others = idx[idx != worst_local]
        centroid = pop[others].mean(axis=0)
        trial = 2.0 * centroid - pop[worst_local]
        if np.any(trial < lo) or np.any(trial > hi):
            continue
        f_trial = fun(trial)
        evals += 1
        worst = int(np.argmax(values))
        if f_trial < values[worst]:
            pop[worst] = trial
            values[worst] = f_trial
    best = int(np.argmin(values))
    return pop[best].copy(), float(values[best])


def _achievement(z: np.ndarray, spec: ScalarizationSpec) -> float:
    return spec.value(z)


def local_improve(
    x0: np.ndarray,
    prob: ProblemDefinition,
    reference: ScalarizationSpec,
    opts: LocalImproveOptions | None = None,
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Descent on the achievement value with central finite differences.

    Steps that do not strictly improve are rejected, so the returned point
    is never worse than ``x0``.
    """
    opts = opts or LocalImproveOptions()
    evaluate = evaluator or CachingEvaluator(prob)
    lo, hi = prob.bounds[:, 0], prob.bounds[:, 1]
    span = np.maximum(hi - lo, 1e-12)
    h = opts.fd_step_rel * span

    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    fx = _achievement(evaluate(x), reference)
    for _ in range(opts.max_iters):
        grad = np.empty_like(x)
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] = min(x[i] + h[i], hi[i])
            xm[i] = max(x[i] - h[i], lo[i])
            denom = xp[i] - xm[i]
            if denom <= 0:
                grad[i] = 0.0
                continue
            grad[i] = (
                _achievement(evaluate(xp), reference) - _achievement(evaluate(xm), reference)
            ) / denom
        norm = np.linalg.norm(grad)
        if norm < 1e-14:
            break
        direction = grad / norm
        step = 0.25 * float(span.max())
        improved = False
        while step > opts.min_step_rel * float(span.max()):
            cand = np.clip(x - step * direction, lo, hi)
            f_cand = _achievement(evaluate(cand), reference)
            if f_cand < fx - 1e-15:
                x, fx = cand, f_cand
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return x, evaluate(x)


def project_outcome(
    z_approx: np.ndarray,
    prob: ProblemDefinition,
    ranges: Ranges,
    crs_opts: CrsOptions | None = None,
    improve_opts: LocalImproveOptions | None = None,
    rho: float = 1e-4,
    evaluator: CachingEvaluator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Project an approximate outcome onto the true Pareto front.

    Minimizes the achievement scalarization with the approximate outcome as
    the reference point (global CRS search plus local improvement) and
    returns the decision vector with its true outcome.  The returned point
    carries the best achievement value of the whole evaluation cache, so no
    evaluated outcome can dominate it (dominance implies a strictly smaller
    achievement value whenever rho > 0).
    """
    spec = ScalarizationSpec(
        reference=np.asarray(z_approx, dtype=float), weights=ranges.weights, rho=rho
    )
    evaluate = evaluator or CachingEvaluator(prob)

    def scalar(x: np.ndarray) -> float:
        return _achievement(evaluate(x), spec)

    try:
        x_best, _ = crs_optimize(scalar, prob.bounds, crs_opts)
        x_final, z_final = local_improve(x_best, prob, spec, improve_opts, evaluator=evaluate)
    except ContractError:
        raise
    except Exception as exc:  # evaluator failures keep their context
        raise ProjectionError(f"projection failed: {exc}") from exc

    keys = list(evaluate.cache.keys())
    outcomes = np.array([evaluate.cache[key] for key in keys])
    diffs = (outcomes - spec.reference) * spec.weights
    values = diffs.max(axis=1) + spec.rho * diffs.sum(axis=1)
    best = int(np.argmin(values))
    if values[best] < _achievement(z_final, spec):
        return np.array(keys[best]), outcomes[best]
    return x_final, z_final


@dataclass
class GenerationResult:
    outcome_set: OutcomeSet
    decisions: np.ndarray  # (n, decision_dim), aligned with outcome rows
    stats: dict = field(default_factory=dict)


def generate_initial_outcomes(
    prob: ProblemDefinition,
    count: int,
    seed: int = 0,
    crs_opts: CrsOptions | None = None,
    rho: float = 1e-4,
    pilot: int = 0,
    dominance_tol: float = 1e-9,
) -> GenerationResult:
    """Seed outcome set: achievement solves toward spread reference points.

    A pilot random sample estimates the objective ranges; references are
    drawn uniformly between the estimated ideal and nadir, each solved by
    CRS, and the resulting outcomes Pareto-filtered (with a normalized
    tolerance, so near-ties cannot leak dominated points downstream).
    """
    k = prob.k
    if count < k + 1:
        raise ContractError(f"count must be at least k+1 = {k + 1}")
    rng = np.random.default_rng(seed)
    evaluate = CachingEvaluator(prob)
    lo, hi = prob.bounds[:, 0], prob.bounds[:, 1]

    pilot = pilot if pilot > 0 else max(20, 10 * prob.decision_dim)
    pilot_x = lo + rng.random((pilot, prob.decision_dim)) * (hi - lo)
    pilot_z = np.array([evaluate(x) for x in pilot_x])
    ideal, nadir = pilot_z.min(axis=0), pilot_z.max(axis=0)
    span = np.maximum(nadir - ideal, 1e-9)
    weights = 1.0 / span

    base_opts = crs_opts or CrsOptions()
    xs, zs = [], []
    for trial in range(count):
        reference = ideal + rng.random(k) * (nadir - ideal)
        spec = ScalarizationSpec(reference=reference, weights=weights, rho=rho)

        def scalar(x: np.ndarray) -> float:
            return _achievement(evaluate(x), spec)

        run_opts = CrsOptions(
            population=base_opts.population,
            max_evals=base_opts.max_evals,
            spread_tol=base_opts.spread_tol,
            seed=int(rng.integers(0, 2**31 - 1)),
        )
        x_best, _ = crs_optimize(scalar, prob.bounds, run_opts)
        xs.append(x_best)
        zs.append(evaluate(x_best))

    points = np.array(zs)
    decisions = np.array(xs)
    # two-stage filter to a fixpoint: canonical dominance at the pipeline
    # tolerance (what the approximation build checks) plus a relaxed pass in
    # normalized space, so near-tied outcomes cannot leak a dominated point
    # or a near-tie hazard downstream
    while True:
        mask = nondominated_mask(points, dominance_tol)
        points, decisions = points[mask], decisions[mask]
        stable = bool(mask.all())
        norm_pts = (points - ideal) * weights
        mask = nondominated_mask(norm_pts, 1e-6)
        points, decisions = points[mask], decisions[mask]
        if stable and mask.all():
            break
    if points.shape[0] < k + 1:
        raise GenerationUnderflowError(
            f"only {points.shape[0]} mutually nondominated outcomes from {count} "
            "scalarizations; increase count"
        )
    outcome_set = OutcomeSet(
        specs=prob.specs,
        points=points,
        provenance=["generated"] * points.shape[0],
    )
    return GenerationResult(
        outcome_set=outcome_set,
        decisions=decisions,
        stats={"requested": count, "kept": int(points.shape[0]), "evaluations": evaluate.evals},
    )


class SubprocessEvaluator:
    """Adapter for an external evaluator child process.

    Protocol: one JSON object per line on stdin ({"x": [..]}), one per
    line on stdout ({"f": [..]} or {"error": "..."}).  The child is
    restarted after a timeout or a broken pipe, up to ``max_restarts``.
    """

    def __init__(self, command: list[str], timeout: float = 60.0, max_restarts: int = 2):
        self.command = list(command)
        self.timeout = timeout
        self.max_restarts = max_restarts
        self._proc: subprocess.Popen | None = None

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
        self._proc = None

    def __call__(self, x: np.ndarray) -> np.ndarray:
        request = json.dumps({"x": [float(v) for v in x]})
        last_error: Exception | None = None
        for _ in range(self.max_restarts + 1):
            try:
                proc = self._ensure()
                proc.stdin.write(request + "\n")
                proc.stdin.flush()
                ready, _, _ = select.select([proc.stdout], [], [], self.timeout)
                if not ready:
                    raise ProjectionError(f"evaluator timed out after {self.timeout}s")
                line = proc.stdout.readline()
                if not line:
                    raise ProjectionError("evaluator closed its output stream")
                reply = json.loads(line)
                if "error" in reply:
                    raise ProjectionError(f"evaluator error: {reply['error']}")
                return np.asarray(reply["f"], dtype=float)
            except (BrokenPipeError, OSError, json.JSONDecodeError, ProjectionError) as exc:
                last_error = exc
                self.close()
        raise ProjectionError(f"evaluator failed after restarts: {last_error}")
