import io

import numpy as np
import pytest

from paint.approximation import Approximation, build_approximation, sample_polytope_points
from paint.errors import ContractError, InfeasibleScalarizationError
from paint.geometry import Simplex
from paint.lpformat import parse_lp_text
from paint.outcomes import ObjectiveSpec, OutcomeSet, compute_ranges, dominates
from paint.surrogate import (
    ScalarizationSpec,
    SurrogateProblem,
    build_surrogate,
    export_milp,
    neutral_reference,
    solve_scalarized,
)

from oracles import grid_scalarization_min


def segment_surrogate() -> SurrogateProblem:
    """One segment from (0,1) to (1,0)."""
    outcome_set = OutcomeSet(
        specs=[ObjectiveSpec("f1"), ObjectiveSpec("f2")],
        points=np.array([[0.0, 1.0], [1.0, 0.0]]),
    )
    approx = Approximation(outcome_set=outcome_set, polytopes=[Simplex((0, 1))], stats={})
    return build_surrogate(approx)


def synthetic_surrogate(
    m: int, c: int, k: int, seed: int = 0, spread: float = 0.08, exact_c: bool = False
) -> SurrogateProblem:
    """Random surrogate built from per-polytope vertex clusters.

    ``spread`` caps each polytope's diameter, which keeps the dense-grid
    oracle's discretization error well under the comparison tolerance.
    """
    rng = np.random.default_rng(seed)
    points: list[np.ndarray] = []
    polys = []
    for _ in range(m):
        center = rng.random(k)
        size = c if exact_c else int(rng.integers(1, c + 1))
        verts = center + (rng.random((size, k)) - 0.5) * spread
        start = len(points)
        points.extend(verts)
        polys.append(Simplex(tuple(range(start, start + size))))
    outcome_set = OutcomeSet(
        specs=[ObjectiveSpec(f"f{i + 1}") for i in range(k)], points=np.array(points)
    )
    approx = Approximation(outcome_set=outcome_set, polytopes=polys, stats={})
    return build_surrogate(approx)


class TestBuildSurrogate:
    def test_one_segment_counts(self):
        surrogate = segment_surrogate()
        assert (surrogate.m, surrogate.c) == (1, 2)
        assert surrogate.m * surrogate.c == 2  # continuous vars of the implied MILP

    def test_paper_scale_shape(self):
        surrogate = synthetic_surrogate(m=608, c=5, k=5, exact_c=True)
        assert surrogate.m * surrogate.c == 3040
        assert surrogate.m == 608

    def test_shared_vertex_indexing(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("f1"), ObjectiveSpec("f2")],
            points=np.array([[0.0, 1.0], [0.4, 0.4], [1.0, 0.0]]),
        )
        approx = Approximation(
            outcome_set=outcome_set, polytopes=[Simplex((0, 1)), Simplex((1, 2))], stats={}
        )
        surrogate = build_surrogate(approx)
        assert (surrogate.m, surrogate.c) == (2, 2)
        assert 1 in surrogate.index_matrix[0] and 1 in surrogate.index_matrix[1]

    def test_empty_approximation_rejected(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("f1"), ObjectiveSpec("f2")], points=np.array([[0.0, 1.0]])
        )
        with pytest.raises(ContractError):
            build_surrogate(Approximation(outcome_set=outcome_set, polytopes=[], stats={}))

    def test_json_roundtrip(self):
        surrogate = synthetic_surrogate(m=5, c=3, k=3)
        again = SurrogateProblem.from_json_dict(
            __import__("json").loads(surrogate.dump_json())
        )
        np.testing.assert_allclose(again.vertex_matrix, surrogate.vertex_matrix)
        np.testing.assert_array_equal(again.index_matrix, surrogate.index_matrix)


class TestExportMilp:
    def spec(self, rho=1e-4, bounds=None):
        return ScalarizationSpec(
            reference=np.array([0.0, 0.0]),
            weights=np.array([1.0, 1.0]),
            rho=rho,
            extra_bounds=bounds,
        )

    def test_one_segment_structure(self):
        text = export_milp(segment_surrogate(), self.spec())
        model = parse_lp_text(text)
        names = {name for name, *_ in model.constraints}
        assert names == {"sum_lambda", "link_1", "sum_y", "zdef_1", "zdef_2", "tlink_1", "tlink_2"}
        assert len(model.constraints) == 7
        assert model.binaries == ["y_1"]
        lambdas = {v for v in model.variable_names() if v.startswith("lambda_")}
        assert lambdas == {"lambda_1_1", "lambda_1_2"}
        assert {"z_1", "z_2", "t"} <= set(model.free)

    def test_rho_zero_objective_is_bare_t(self):
        text = export_milp(segment_surrogate(), self.spec(rho=0.0))
        model = parse_lp_text(text)
        assert model.objective == [("t", 1.0)]
        assert model.objective_constant == 0.0

    def test_extra_bound_emits_row(self):
        text = export_milp(
            segment_surrogate(), self.spec(bounds=np.array([5.0, np.nan]))
        )
        model = parse_lp_text(text)
        eps = [c for c in model.constraints if c[0] == "eps_1"]
        assert eps == [("eps_1", [("z_1", 1.0)], "<=", 5.0)]
        assert not any(c[0] == "eps_2" for c in model.constraints)

    def test_roundtrip_coefficients(self):
        surrogate = synthetic_surrogate(m=4, c=3, k=3, seed=5)
        ranges = compute_ranges(surrogate.approximation.outcome_set)
        spec = ScalarizationSpec(
            reference=neutral_reference(ranges), weights=ranges.weights, rho=1e-4
        )
        text = export_milp(surrogate, spec)
        model = parse_lp_text(text)
        zdef1 = next(c for c in model.constraints if c[0] == "zdef_1")
        _, terms, rel, rhs = zdef1
        assert rel == "=" and rhs == 0.0
        coefs = dict(terms)
        assert coefs["z_1"] == 1.0
        for j in range(surrogate.m):
            for l in range(surrogate.c):
                expected = -float(
                    surrogate.vertex_matrix[surrogate.index_matrix[j, l], 0]
                )
                assert coefs[f"lambda_{j + 1}_{l + 1}"] == expected

    def test_bit_stable(self):
        surrogate = synthetic_surrogate(m=3, c=2, k=2, seed=1)
        spec = self.spec()
        assert export_milp(surrogate, spec) == export_milp(surrogate, spec)

    def test_sink_receives_text(self):
        sink = io.StringIO()
        text = export_milp(segment_surrogate(), self.spec(), sink)
        assert sink.getvalue() == text


class TestSolveScalarized:
    def test_reference_attained_at_vertex(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("f1"), ObjectiveSpec("f2")],
            points=np.array([[0.3, 0.7], [0.4, 0.6]]),
        )
        approx = Approximation(
            outcome_set=outcome_set, polytopes=[Simplex((0,)), Simplex((1,))], stats={}
        )
        surrogate = build_surrogate(approx)
        spec = ScalarizationSpec(
            reference=np.array([0.3, 0.7]), weights=np.array([1.0, 1.0]), rho=1e-4
        )
        sol = solve_scalarized(surrogate, spec)
        np.testing.assert_allclose(sol.z, [0.3, 0.7], atol=1e-10)
        assert sol.value == pytest.approx(0.0, abs=1e-10)

    def test_segment_analytic_optimum(self):
        spec = ScalarizationSpec(
            reference=np.array([0.0, 0.0]), weights=np.array([1.0, 1.0]), rho=0.0
        )
        sol = solve_scalarized(segment_surrogate(), spec)
        np.testing.assert_allclose(sol.z, [0.5, 0.5], atol=1e-9)
        assert sol.value == pytest.approx(0.5, abs=1e-9)

    def test_bound_excludes_better_polytope(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("f1"), ObjectiveSpec("f2")],
            points=np.array([[0.1, 0.9], [0.2, 0.8], [0.8, 0.2], [0.9, 0.1]]),
        )
        approx = Approximation(
            outcome_set=outcome_set, polytopes=[Simplex((0, 1)), Simplex((2, 3))], stats={}
        )
        surrogate = build_surrogate(approx)
        base = dict(reference=np.array([0.0, 0.0]), weights=np.array([1.0, 1.0]), rho=1e-4)
        free = solve_scalarized(surrogate, ScalarizationSpec(**base))
        assert free.polytope_index == 0
        capped = solve_scalarized(
            surrogate,
            ScalarizationSpec(**base, extra_bounds=np.array([np.nan, 0.5])),
        )
        assert capped.polytope_index == 1
        assert capped.z[1] <= 0.5 + 1e-9

    def test_all_polytopes_infeasible(self):
        spec = ScalarizationSpec(
            reference=np.array([0.0, 0.0]),
            weights=np.array([1.0, 1.0]),
            extra_bounds=np.array([-1.0, -1.0]),
        )
        with pytest.raises(InfeasibleScalarizationError):
            solve_scalarized(segment_surrogate(), spec)

    def test_reconstruction_exact(self):
        rng = np.random.default_rng(4)
        surrogate = synthetic_surrogate(m=6, c=3, k=3, seed=4)
        ranges = compute_ranges(surrogate.approximation.outcome_set)
        for _ in range(10):
            ref = ranges.ideal + rng.random(3) * (ranges.nadir_estimate - ranges.ideal)
            spec = ScalarizationSpec(reference=ref, weights=ranges.weights, rho=1e-4)
            sol = solve_scalarized(surrogate, spec)
            verts = surrogate.vertex_matrix[
                surrogate.index_matrix[sol.polytope_index][: len(sol.barycentric)]
            ]
            np.testing.assert_allclose(sol.barycentric @ verts, sol.z, atol=1e-10)
            assert sol.barycentric.min() >= -1e-9
            assert sol.barycentric.sum() == pytest.approx(1.0, abs=1e-9)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(77)
        for seed in range(8):
            surrogate = synthetic_surrogate(
                m=int(rng.integers(2, 7)), c=int(rng.integers(2, 4)), k=3, seed=seed
            )
            ranges = compute_ranges(surrogate.approximation.outcome_set)
            ref = ranges.ideal + rng.random(3) * (ranges.nadir_estimate - ranges.ideal)
            spec = ScalarizationSpec(reference=ref, weights=ranges.weights, rho=1e-4)
            sol = solve_scalarized(surrogate, spec)
            rows = [
                surrogate.index_matrix[j][: surrogate.row_sizes[j]].tolist()
                for j in range(surrogate.m)
            ]
            grid = grid_scalarization_min(
                surrogate.vertex_matrix, rows, ref, ranges.weights, 1e-4, step=1e-3
            )
            assert sol.value <= grid + 1e-12
            assert abs(sol.value - grid) < 1e-4

    def test_pareto_optimal_for_positive_rho(self, table1):
        rng = np.random.default_rng(13)
        approx = build_approximation(table1)
        surrogate = build_surrogate(approx)
        ranges = compute_ranges(table1)
        spec = ScalarizationSpec(
            reference=neutral_reference(ranges), weights=ranges.weights, rho=1e-4
        )
        sol = solve_scalarized(surrogate, spec)
        z_norm = ranges.normalize(sol.z)
        samples = ranges.normalize(sample_polytope_points(approx, 1000, rng))
        for sample in samples:
            assert not dominates(sample, z_norm, 1e-6)


class TestNeutralReference:
    def test_midpoint(self):
        ranges = compute_ranges(
            OutcomeSet(
                specs=[ObjectiveSpec("a"), ObjectiveSpec("b")],
                points=np.array([[0.0, 1.0], [1.0, 0.0]]),
            ),
            delta=0.0,
        )
        np.testing.assert_allclose(neutral_reference(ranges), [0.5, 0.5])

    def test_degenerate_ranges(self):
        ranges = compute_ranges(
            OutcomeSet(
                specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=np.array([[2.0, 3.0]])
            ),
            delta=1.0,
        )
        np.testing.assert_allclose(neutral_reference(ranges), [2.0, 3.0])

    def test_table1_midpoint(self, table1):
        ranges = compute_ranges(table1, delta=0.0)
        np.testing.assert_allclose(
            neutral_reference(ranges), [17.205, 415.3, 21.135, 15055, -9732]
        )
