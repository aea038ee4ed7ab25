import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from confounding_interval.core import (
    BoundSpec,
    ConfoundingInterval,
    Dataset,
    ExtraConstraints,
    SensitivityTuple,
    SummaryStats,
    band_edges,
    beta_adjusted,
    beta_values,
    feasible_mask,
    feasible_rho_range,
    is_feasible,
    residual_correlation,
    summarize,
)
from confounding_interval.exceptions import (
    DegenerateVarianceError,
    DomainError,
    RankDeficiencyError,
)
from confounding_interval.solver import enumerate_candidates

r2_values = st.floats(min_value=0.0, max_value=0.95)
rho_values = st.floats(min_value=-1.0, max_value=1.0)
rho_xy_values = st.floats(min_value=-0.95, max_value=0.95)
ratios = st.floats(min_value=0.01, max_value=100.0)


class TestValidation:
    @pytest.mark.parametrize("rho_xy", [1.0, -1.0, 1.5, math.nan])
    def test_rho_xy_outside_open_interval(self, rho_xy):
        with pytest.raises(DomainError, match="rho_xy"):
            SummaryStats(rho_xy, 1.0)

    @pytest.mark.parametrize("ratio", [0.0, -2.0, math.inf])
    def test_sigma_ratio_must_be_positive_and_finite(self, ratio):
        with pytest.raises(DomainError, match="sigma_ratio"):
            SummaryStats(0.1, ratio)

    def test_lower_bound_exceeds_upper(self):
        with pytest.raises(DomainError, match="r2x: lower bound exceeds upper"):
            BoundSpec.from_pairs((0.6, 0.5), (0.0, 0.2))

    def test_r2_upper_bound_of_one_rejected(self):
        with pytest.raises(DomainError, match="r2y"):
            BoundSpec.from_pairs((0.0, 0.5), (0.0, 1.0))

    def test_rho_bounds_outside_unit_interval(self):
        with pytest.raises(DomainError, match="rho-hxhy"):
            BoundSpec.from_pairs((0.0, 0.5), (0.0, 0.5), (-1.5, 1.0))

    def test_default_rho_bounds(self):
        spec = BoundSpec.from_pairs((0.1, 0.5), (0.0, 0.2))
        assert spec.rho == (-1.0, 1.0)
        assert len(list(spec.corners())) == 8

    def test_tuple_rejects_r2_of_one(self):
        with pytest.raises(DomainError, match="r2wx"):
            SensitivityTuple(1.0, 0.0, 0.0)

    def test_interval_order(self):
        t = SensitivityTuple(0.0, 0.0, 0.0)
        with pytest.raises(DomainError):
            ConfoundingInterval(1.0, 0.0, t, t)

    def test_box_containment(self):
        outer = BoundSpec.from_pairs((0.0, 0.5), (0.0, 0.5))
        inner = BoundSpec.from_pairs((0.1, 0.4), (0.2, 0.3), (0.0, 0.5))
        assert outer.contains(inner)
        assert not inner.contains(outer)


class TestSlopeFormula:
    def test_no_confounding_gives_unadjusted_slope(self, case_stats):
        t = SensitivityTuple(0.0, 0.0, 0.0)
        assert beta_adjusted(case_stats, t) == pytest.approx(case_stats.unadjusted_slope)

    def test_case_study_upper_endpoint(self, case_stats):
        t = SensitivityTuple(0.5, 0.2, -1.0)
        assert beta_adjusted(case_stats, t) == pytest.approx(17.71, abs=0.01)

    def test_case_study_lower_endpoint(self, case_stats):
        t = SensitivityTuple(0.5, 0.2, 1.0)
        assert beta_adjusted(case_stats, t) == pytest.approx(-36.60, abs=0.01)

    def test_vectorized_matches_scalar(self, case_stats, rng):
        r2wx = rng.uniform(0, 0.9, 50)
        r2wy = rng.uniform(0, 0.9, 50)
        rho = rng.uniform(-1, 1, 50)
        values = beta_values(case_stats, r2wx, r2wy, rho)
        for i in range(50):
            t = SensitivityTuple(r2wx[i], r2wy[i], rho[i])
            assert values[i] == pytest.approx(beta_adjusted(case_stats, t), rel=1e-12)

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values, rho=rho_values)
    def test_scale_equivariance(self, rho_xy, r2wx, r2wy, rho):
        t = SensitivityTuple(r2wx, r2wy, rho)
        base = beta_adjusted(SummaryStats(rho_xy, 1.0), t)
        scaled = beta_adjusted(SummaryStats(rho_xy, 3.5), t)
        assert scaled == pytest.approx(3.5 * base, rel=1e-12, abs=1e-12)

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values, rho=rho_values, ratio=ratios)
    def test_sign_symmetry(self, rho_xy, r2wx, r2wy, rho, ratio):
        base = beta_adjusted(SummaryStats(rho_xy, ratio), SensitivityTuple(r2wx, r2wy, rho))
        mirrored = beta_adjusted(
            SummaryStats(-rho_xy, ratio), SensitivityTuple(r2wx, r2wy, -rho)
        )
        assert mirrored == pytest.approx(-base, rel=1e-12, abs=1e-12)

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values, rho=rho_values, ratio=ratios)
    def test_correlation_decomposition(self, rho_xy, r2wx, r2wy, rho, ratio):
        stats = SummaryStats(rho_xy, ratio)
        t = SensitivityTuple(r2wx, r2wy, rho)
        rho_res = residual_correlation(stats, t)
        slack = math.sqrt(1.0 - r2wx) * math.sqrt(1.0 - r2wy)
        assert t.r_wx * t.r_wy * rho + slack * rho_res == pytest.approx(rho_xy, abs=1e-12)

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values, rho=rho_values, ratio=ratios)
    def test_slope_is_scaled_residual_correlation(self, rho_xy, r2wx, r2wy, rho, ratio):
        stats = SummaryStats(rho_xy, ratio)
        t = SensitivityTuple(r2wx, r2wy, rho)
        expected = (
            ratio
            * math.sqrt(1.0 - r2wy)
            / math.sqrt(1.0 - r2wx)
            * residual_correlation(stats, t)
        )
        assert beta_adjusted(stats, t) == pytest.approx(expected, rel=1e-9, abs=1e-9 * ratio)

    def test_case_study_endpoints_are_candidates(self, case_stats, case_spec):
        tuples = [
            candidate.sensitivity.as_tuple()
            for candidate in enumerate_candidates(case_stats, case_spec)
        ]
        for expected in ((0.5, 0.2, 1.0), (0.5, 0.2, -1.0)):
            assert any(value == pytest.approx(expected, abs=1e-12) for value in tuples)


class TestBand:
    def test_vacuous_when_an_r2_is_zero(self):
        assert band_edges(SummaryStats(0.3, 1.0), 0.0, 0.5) == (-math.inf, math.inf)
        assert feasible_rho_range(SummaryStats(0.3, 1.0), 0.5, 0.0) == (-1.0, 1.0)

    def test_band_edges(self):
        lower, upper = band_edges(SummaryStats(0.9, 1.0), 0.8, 0.8)
        assert lower == pytest.approx(0.875)
        assert upper == pytest.approx(1.375)

    def test_clipped_band(self):
        assert feasible_rho_range(SummaryStats(0.9, 1.0), 0.8, 0.8) == pytest.approx(
            (0.875, 1.0)
        )

    def test_empty_clipped_band(self):
        assert feasible_rho_range(SummaryStats(0.99, 1.0), 0.9, 0.1) is None

    def test_negative_tolerance_rejected(self, case_stats, case_spec):
        with pytest.raises(DomainError, match="tol"):
            is_feasible(case_stats, case_spec, SensitivityTuple(0.2, 0.1, 0.0), tol=-1.0)

    def test_box_membership(self, case_stats, case_spec):
        assert is_feasible(case_stats, case_spec, SensitivityTuple(0.2, 0.1, 0.0))
        assert not is_feasible(case_stats, case_spec, SensitivityTuple(0.6, 0.1, 0.0))

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values, rho=rho_values)
    def test_band_iff_residual_correlation_is_a_correlation(self, rho_xy, r2wx, r2wy, rho):
        # The band is vacuous when a fitted vector is constant
        assume(min(r2wx, r2wy) > 1e-6)
        stats = SummaryStats(rho_xy, 1.0)
        spec = BoundSpec.from_pairs((0.0, 0.95), (0.0, 0.95))
        t = SensitivityTuple(r2wx, r2wy, rho)
        rho_res = residual_correlation(stats, t)
        if abs(rho_res) < 1.0 - 1e-9:
            assert is_feasible(stats, spec, t)
        elif abs(rho_res) > 1.0 + 1e-9:
            assert not is_feasible(stats, spec, t)

    @given(rho_xy=rho_xy_values, r2wx=r2_values, r2wy=r2_values)
    def test_residual_correlation_is_unit_at_band_edges(self, rho_xy, r2wx, r2wy):
        assume(min(r2wx, r2wy) > 1e-6)
        stats = SummaryStats(rho_xy, 1.0)
        for alpha in band_edges(stats, r2wx, r2wy):
            if abs(alpha) > 1.0:
                continue
            rho_res = residual_correlation(stats, SensitivityTuple(r2wx, r2wy, alpha))
            assert abs(rho_res) == pytest.approx(1.0, abs=1e-12)

    def test_mask_broadcasts(self, case_stats, case_spec):
        mask = feasible_mask(case_stats, case_spec, 0.3, np.array([0.0, 0.1, 0.5]), 0.0)
        assert mask.tolist() == [True, True, False]


class TestExtraConstraints:
    def test_inactive_by_default(self):
        assert not ExtraConstraints().active

    def test_mask(self):
        extra = ExtraConstraints(rho_hx_y=(0.0, 0.25))
        r2wy = np.array([0.04, 0.25, 0.25])
        rho = np.array([1.0, 0.4, 0.6])
        # sqrt(r2wy) * rho = 0.2, 0.2, 0.3
        assert extra.mask(0.5, r2wy, rho).tolist() == [True, True, False]

    def test_bounds_validated(self):
        with pytest.raises(DomainError, match="rho_x_hy"):
            ExtraConstraints(rho_x_hy=(0.5, 0.1))


class TestSummarize:
    def test_dataset_needs_enough_rows(self):
        with pytest.raises(DomainError, match="n > p \\+ 2"):
            Dataset([1.0, 2.0, 3.0], [1.0, 2.0, 4.0], np.ones((3, 1)))

    def test_dataset_lengths_must_match(self):
        with pytest.raises(DomainError, match="lengths differ"):
            Dataset([1.0, 2.0, 3.0, 4.0], [1.0, 2.0, 3.0])

    def test_constant_x(self):
        with pytest.raises(DegenerateVarianceError, match="x"):
            summarize(Dataset(np.ones(6), np.arange(6.0)))

    def test_collinear_confounders(self, rng):
        w = rng.normal(size=10)
        d = Dataset(rng.normal(size=10), rng.normal(size=10), np.column_stack([w, 2 * w]))
        with pytest.raises(RankDeficiencyError):
            summarize(d)

    def test_without_confounders(self, rng):
        x = rng.normal(size=40)
        y = 0.5 * x + rng.normal(size=40)
        s = summarize(Dataset(x, y))
        assert s.r2wx == 0.0 and s.r2wy == 0.0 and s.rho_hxhy == 0.0
        assert s.degenerate
        assert s.rho_xy == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)
        # Divisor n
        assert s.sigma_x == pytest.approx(np.std(x), rel=1e-12)
        assert s.sigma_ratio == pytest.approx(np.std(y) / np.std(x), rel=1e-12)

    def test_r2_matches_least_squares(self, rng):
        W = rng.normal(size=(30, 3))
        x = W @ [1.0, -0.5, 0.2] + rng.normal(size=30)
        y = W @ [0.3, 0.3, -1.0] + rng.normal(size=30)
        s = summarize(Dataset(x, y, W))
        design = np.column_stack([np.ones(30), W])
        fitted = design @ np.linalg.lstsq(design, x, rcond=None)[0]
        r2 = 1 - np.sum((x - fitted) ** 2) / np.sum((x - x.mean()) ** 2)
        assert s.r2wx == pytest.approx(r2, abs=1e-12)
        assert not s.degenerate

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=2**32 - 1), p=st.integers(1, 4))
    def test_real_data_lies_in_the_band(self, seed, p):
        generator = np.random.default_rng(seed)
        n = p + 3 + int(generator.integers(0, 30))
        W = generator.normal(size=(n, p))
        x = W @ generator.normal(size=p) + generator.normal(size=n)
        y = 0.7 * x + W @ generator.normal(size=p) + generator.normal(size=n)
        s = summarize(Dataset(x, y, W))
        product = math.sqrt(s.r2wx) * math.sqrt(s.r2wy)
        slack = math.sqrt(1 - s.r2wx) * math.sqrt(1 - s.r2wy)
        assert abs(s.rho_xy - product * s.rho_hxhy) <= slack + 1e-9
