import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confounding_interval import oracle
from confounding_interval.core import (
    BoundSpec,
    Dataset,
    SensitivityTuple,
    SummaryStats,
    beta_adjusted,
    is_feasible,
    summarize,
)
from confounding_interval.exceptions import (
    DomainError,
    EmptyFeasibleSetError,
    InfeasibleTupleError,
    RankDeficiencyError,
)
from confounding_interval.oracle import (
    GridConfig,
    grid_min_max,
    lattice_axes,
    ols_beta,
    projection_identities,
    random_feasible_tuple,
    random_spec,
    random_stats,
    synthesize_data,
    verify_prop1,
)
from confounding_interval.solver import solve_interval

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def assert_round_trip(stats, t, p, seed, tol=1e-10):
    s = summarize(synthesize_data(stats, t, p=p, seed=seed))
    assert s.rho_xy == pytest.approx(stats.rho_xy, abs=tol)
    assert s.sigma_ratio == pytest.approx(stats.sigma_ratio, rel=tol)
    assert s.r2wx == pytest.approx(t.r2wx, abs=tol)
    assert s.r2wy == pytest.approx(t.r2wy, abs=tol)
    assert s.rho_hxhy == pytest.approx(t.rho_hxhy, abs=tol)


class TestGrid:
    def test_resolution_must_be_at_least_two(self):
        with pytest.raises(DomainError, match="resolution"):
            GridConfig(1)

    def test_axes_include_endpoints(self, case_spec):
        xs, ys, rhos = lattice_axes(case_spec, 5)
        assert xs[0] == 0.1 and xs[-1] == 0.5
        assert len(ys) == 5
        assert rhos.tolist() == [-1.0, -0.5, 0.0, 0.5, 1.0]

    def test_point_axis_collapses(self):
        spec = BoundSpec.from_pairs((0.3, 0.3), (0.0, 0.2))
        xs, _, _ = lattice_axes(spec, 11)
        assert xs.tolist() == [0.3]

    def test_case_study_grid(self, case_stats, case_spec):
        result = grid_min_max(case_stats, case_spec, GridConfig(41))
        assert result.interval.approximate
        assert result.feasible_count > 0
        # Both case-study endpoints sit on box corners
        assert result.interval.lower == pytest.approx(-36.60, abs=0.01)
        assert result.interval.upper == pytest.approx(17.71, abs=0.01)

    def test_block_size_does_not_change_the_result(self, monkeypatch, case_stats, case_spec):
        whole = grid_min_max(case_stats, case_spec, GridConfig(41))
        monkeypatch.setattr(oracle, "SLAB_BLOCK_NODES", 1)
        sliced = grid_min_max(case_stats, case_spec, GridConfig(41))
        assert sliced.feasible_count == whole.feasible_count
        assert sliced.interval.lower == whole.interval.lower
        assert sliced.interval.upper == whole.interval.upper

    def test_empty_grid(self, empty_stats, empty_spec):
        with pytest.raises(EmptyFeasibleSetError):
            grid_min_max(empty_stats, empty_spec, GridConfig(5))

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_gap_shrinks_on_nested_lattices(self, seed):
        rng = np.random.default_rng(seed)
        stats = random_stats(rng)
        spec = random_spec(stats, rng)
        exact = solve_interval(stats, spec)
        coarse = grid_min_max(stats, spec, GridConfig(21)).interval
        fine = grid_min_max(stats, spec, GridConfig(41)).interval
        tol = 1e-9 * max(1.0, abs(exact.lower), abs(exact.upper))
        assert fine.lower <= coarse.lower + tol
        assert fine.upper >= coarse.upper - tol

    @pytest.mark.slow
    def test_fine_grid_approaches_exact_interval(self):
        rng = np.random.default_rng(2024)
        for _ in range(10):
            stats = random_stats(rng)
            spec = random_spec(stats, rng)
            exact = solve_interval(stats, spec)
            grid = grid_min_max(stats, spec, GridConfig(201)).interval
            tol = 1e-9 * max(1.0, abs(exact.lower), abs(exact.upper))
            assert exact.lower - tol <= grid.lower
            assert grid.upper <= exact.upper + tol


class TestSynthesis:
    def test_needs_enough_rows(self, case_stats):
        with pytest.raises(DomainError, match="n > p \\+ 2"):
            synthesize_data(case_stats, SensitivityTuple(0.2, 0.1, 0.0), n=4, p=2)

    def test_unrealizable_tuple(self, empty_stats):
        with pytest.raises(InfeasibleTupleError, match="residual correlation"):
            synthesize_data(empty_stats, SensitivityTuple(0.8, 0.8, -1.0))

    def test_one_column_needs_collinear_fits(self, case_stats):
        with pytest.raises(InfeasibleTupleError, match="p = 1"):
            synthesize_data(case_stats, SensitivityTuple(0.2, 0.1, 0.5), p=1)

    def test_no_columns_needs_zero_r2(self, case_stats):
        with pytest.raises(InfeasibleTupleError, match="p = 0"):
            synthesize_data(case_stats, SensitivityTuple(0.2, 0.0, 0.0), p=0)

    def test_default_size(self, case_stats):
        d = synthesize_data(case_stats, SensitivityTuple(0.2, 0.1, 0.3), p=2)
        assert (d.n, d.p) == (5, 2)

    def test_same_seed_same_data(self, case_stats):
        t = SensitivityTuple(0.2, 0.1, 0.3)
        first = synthesize_data(case_stats, t, n=20, seed=4)
        second = synthesize_data(case_stats, t, n=20, seed=4)
        np.testing.assert_array_equal(first.x, second.x)
        np.testing.assert_array_equal(first.W, second.W)

    def test_case_study_round_trip(self, case_stats):
        assert_round_trip(case_stats, SensitivityTuple(0.5, 0.2, -1.0), p=2, seed=0)

    def test_no_confounder_round_trip(self, case_stats):
        s = summarize(synthesize_data(case_stats, SensitivityTuple(0.0, 0.0, 0.0), p=0))
        assert s.rho_xy == pytest.approx(case_stats.rho_xy, abs=1e-10)
        assert s.sigma_ratio == pytest.approx(case_stats.sigma_ratio, rel=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(seeds, st.sampled_from([1, 2, 5]))
    def test_round_trip(self, seed, p):
        rng = np.random.default_rng(seed)
        stats = random_stats(rng)
        t = random_feasible_tuple(stats, rng, p=p)
        assert_round_trip(stats, t, p=p, seed=seed)

    @pytest.mark.slow
    def test_round_trip_many(self):
        rng = np.random.default_rng(99)
        for case in range(500):
            p = (1, 2, 5)[case % 3]
            stats = random_stats(rng)
            t = random_feasible_tuple(stats, rng, p=p)
            assert_round_trip(stats, t, p=p, seed=case)


class TestLeastSquares:
    def test_rank_deficient_design(self, rng):
        x = rng.normal(size=10)
        with pytest.raises(RankDeficiencyError):
            ols_beta(Dataset(x, rng.normal(size=10), np.column_stack([x, rng.normal(size=10)])))

    def test_matches_lstsq(self, rng):
        W = rng.normal(size=(25, 2))
        x = rng.normal(size=25) + W[:, 0]
        y = 1.5 * x - W[:, 1] + rng.normal(size=25)
        design = np.column_stack([np.ones(25), x, W])
        expected = np.linalg.lstsq(design, y, rcond=None)[0][1]
        assert ols_beta(Dataset(x, y, W)) == pytest.approx(expected, rel=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_ols_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        stats = random_stats(rng)
        t = random_feasible_tuple(stats, rng)
        report = verify_prop1(stats, t, seed=seed)
        assert report.formula == beta_adjusted(stats, t)
        assert report.discrepancy < 1e-8

    def test_projection_identities(self, rng):
        W = rng.normal(size=(40, 3))
        x = W @ [0.5, 0.1, -0.3] + rng.normal(size=40)
        y = 0.4 * x + W @ [0.2, -0.6, 0.1] + rng.normal(size=40)
        report = projection_identities(Dataset(x, y, W))
        assert -1.0 <= report.residual_correlation <= 1.0
        assert report.decomposition_residual < 1e-10
        assert report.slope_residual < 1e-10

    @pytest.mark.slow
    def test_ols_matches_closed_form_many_cases(self):
        rng = np.random.default_rng(7)
        for case in range(1000):
            stats = random_stats(rng)
            t = random_feasible_tuple(stats, rng)
            assert verify_prop1(stats, t, seed=case).discrepancy < 1e-8


def test_random_tuples_are_feasible(rng):
    stats = SummaryStats(0.6, 1.0)
    spec = BoundSpec.from_pairs((0.0, 0.95), (0.0, 0.95))
    for p in (1, 2, 5):
        t = random_feasible_tuple(stats, rng, p=p)
        assert is_feasible(stats, spec, t)
        if p == 1:
            assert abs(t.rho_hxhy) == 1.0
