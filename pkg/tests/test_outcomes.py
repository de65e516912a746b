import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from paint.errors import ContractError, DataError, ParseError, SchemaError
from paint.outcomes import (
    ObjectiveSpec,
    OutcomeSet,
    compute_ranges,
    dominates,
    from_canonical,
    parse_outcome_set,
    pareto_filter,
    to_canonical,
)

from conftest import TABLE1_CSV


class TestParsing:
    def test_table1_csv_canonical_biogas(self, table1):
        assert table1.n == 6 and table1.k == 5
        assert table1.specs[4].direction == "maximize"
        np.testing.assert_allclose(
            table1.points[:, 4], [-9731, -9935, -9560, -9571, -9626, -9529]
        )

    def test_empty_body_valid_header(self):
        header = TABLE1_CSV.splitlines()[0]
        outcome_set = parse_outcome_set(header + "\n", "csv")
        assert outcome_set.n == 0 and outcome_set.k == 5

    def test_single_row_passthrough(self):
        text = '"a,,min","b,,min"\n1,2\n'
        outcome_set = parse_outcome_set(text, "csv")
        np.testing.assert_array_equal(outcome_set.points, [[1.0, 2.0]])

    def test_malformed_row_reports_row_number(self):
        text = '"a,,min","b,,min"\n1,2\n3,not_a_number\n'
        with pytest.raises(ParseError) as err:
            parse_outcome_set(text, "csv")
        assert err.value.row == 3

    def test_wrong_column_count(self):
        with pytest.raises(ParseError):
            parse_outcome_set('"a,,min","b,,min"\n1,2,3\n', "csv")

    def test_non_finite_value(self):
        with pytest.raises(DataError):
            parse_outcome_set('"a,,min","b,,min"\n1,inf\n', "csv")

    def test_duplicate_objective_name(self):
        with pytest.raises(SchemaError):
            parse_outcome_set('"a,,min","a,,min"\n1,2\n', "csv")

    def test_byte_stream_input(self):
        stream = io.BytesIO(TABLE1_CSV.encode())
        assert parse_outcome_set(stream, "csv").n == 6

    def test_json_roundtrip(self, table1):
        again = parse_outcome_set(table1.dump_json(), "json")
        np.testing.assert_array_equal(again.points, table1.points)
        assert [s.name for s in again.specs] == [s.name for s in table1.specs]

    def test_csv_roundtrip(self, table1):
        again = parse_outcome_set(table1.dump_csv(), "csv")
        np.testing.assert_array_equal(again.points, table1.points)

    def test_json_bad_direction(self):
        doc = {"objectives": [{"name": "a", "direction": "sideways"}, {"name": "b"}]}
        with pytest.raises(SchemaError):
            parse_outcome_set(json.dumps(doc), "json")


class TestDominates:
    def test_strict_improvement(self):
        assert dominates((0, 0), (1, 1), 0.0)

    def test_table1_s3_s4_mutually_nondominated(self):
        s3 = [17.30, 419.0, 16.27, 14870, -9560]
        s4 = [17.74, 414.6, 14.41, 14910, -9571]
        assert not dominates(s3, s4) and not dominates(s4, s3)

    def test_no_self_dominance(self):
        a = np.array([1.0, 2.0, 3.0])
        assert not dominates(a, a)

    def test_length_mismatch(self):
        with pytest.raises(ContractError):
            dominates([1, 2], [1, 2, 3])

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=6))
    def test_irreflexive(self, values):
        assert not dominates(values, values, 0.0)

    @given(
        st.integers(2, 5).flatmap(
            lambda k: st.tuples(
                st.lists(st.floats(-100, 100), min_size=k, max_size=k),
                st.lists(st.floats(-100, 100), min_size=k, max_size=k),
            )
        )
    )
    def test_antisymmetric(self, pair):
        a, b = pair
        assert not (dominates(a, b, 0.0) and dominates(b, a, 0.0))

    @settings(max_examples=50)
    @given(st.integers(0, 2**31 - 1))
    def test_transitive_on_samples(self, seed):
        rng = np.random.default_rng(seed)
        pts = rng.random((6, 3))
        for a in pts:
            for b in pts:
                for c in pts:
                    if dominates(a, b) and dominates(b, c):
                        assert dominates(a, c)


class TestParetoFilter:
    def test_table1_all_retained(self, table1):
        # oracle: all 15 pairs are mutually nondominated by definition
        pts = table1.points
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert not dominates(pts[i], pts[j])
        assert pareto_filter(table1).n == 6

    def test_drops_dominated(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=[[0, 0], [1, 1]]
        )
        filtered = pareto_filter(outcome_set)
        np.testing.assert_array_equal(filtered.points, [[0, 0]])

    def test_duplicates_retained(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=[[1, 2], [1, 2]]
        )
        assert pareto_filter(outcome_set).n == 2

    @settings(max_examples=40)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 4), st.integers(1, 20))
    def test_idempotent_and_clean(self, seed, k, n):
        rng = np.random.default_rng(seed)
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec(f"f{i}") for i in range(k)], points=rng.random((n, k))
        )
        once = pareto_filter(outcome_set)
        twice = pareto_filter(once)
        np.testing.assert_array_equal(once.points, twice.points)
        for i in range(once.n):
            for j in range(once.n):
                if i != j:
                    assert not dominates(once.points[i], once.points[j])


class TestCanonicalization:
    @settings(max_examples=40)
    @given(st.integers(0, 2**31 - 1), st.integers(2, 6))
    def test_double_negation_bit_exact(self, seed, k):
        rng = np.random.default_rng(seed)
        specs = [
            ObjectiveSpec(f"f{i}", direction="maximize" if rng.random() < 0.5 else "minimize")
            for i in range(k)
        ]
        pts = rng.standard_normal((7, k)) * 10.0 ** rng.integers(-3, 4)
        roundtrip = to_canonical(from_canonical(pts, specs), specs)
        assert np.array_equal(roundtrip, pts)


class TestRanges:
    def test_table1_extrema(self, table1):
        ranges = compute_ranges(table1, delta=0.0)
        np.testing.assert_allclose(ranges.ideal, [16.67, 411.6, 14.41, 14860, -9935])
        np.testing.assert_allclose(ranges.nadir_estimate, [17.74, 419.0, 27.86, 15250, -9529])

    def test_single_point(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=[[3.0, 4.0]]
        )
        ranges = compute_ranges(outcome_set, delta=0.5)
        np.testing.assert_array_equal(ranges.ideal, ranges.nadir_estimate)
        np.testing.assert_allclose(ranges.weights, [2.0, 2.0])

    def test_two_points_zero_delta(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=[[0, 1], [1, 0]]
        )
        ranges = compute_ranges(outcome_set, delta=0.0)
        np.testing.assert_allclose(ranges.ideal, [0, 0])
        np.testing.assert_allclose(ranges.nadir_estimate, [1, 1])
        np.testing.assert_allclose(ranges.weights, [1, 1])

    def test_empty_set_error(self):
        outcome_set = OutcomeSet(
            specs=[ObjectiveSpec("a"), ObjectiveSpec("b")], points=np.zeros((0, 2))
        )
        with pytest.raises(ContractError):
            compute_ranges(outcome_set)

    def test_bounds_bracket_points(self, table1):
        ranges = compute_ranges(table1)
        assert np.all(ranges.ideal <= table1.points.min(axis=0) + 1e-12)
        assert np.all(table1.points.max(axis=0) <= ranges.nadir_estimate + 1e-12)
        assert np.all(ranges.weights > 0) and np.all(np.isfinite(ranges.weights))
