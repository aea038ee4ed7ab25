import math

import numpy as np
import pytest

from confounding_interval.core import BoundSpec, ExtraConstraints, SummaryStats, feasible_mask
from confounding_interval.exceptions import DomainError, EmptyFeasibleSetError
from confounding_interval.oracle import GridConfig, grid_min_max, random_spec, random_stats
from confounding_interval.region import SignificanceRange, necessary_region
from confounding_interval.solver import solve_interval

FIG_STATS = SummaryStats(0.5, 1.0)
FULL_BOX = BoundSpec.from_pairs((0.0, 0.99), (0.0, 0.99))
COARSE = GridConfig(31)


def test_range_order():
    with pytest.raises(DomainError, match="lower bound exceeds upper"):
        SignificanceRange(1.0, 0.0)


def test_range_contains():
    sig = SignificanceRange(0.2)
    assert sig.contains([0.1, 0.2, 5.0]).tolist() == [False, True, True]


def test_explaining_away_a_positive_association():
    sig = SignificanceRange(0.2, math.inf)
    cloud = necessary_region(FIG_STATS, FULL_BOX, sig, COARSE)
    assert not cloud.is_empty
    assert np.all(cloud.beta < 0.2)
    assert np.all(feasible_mask(FIG_STATS, FULL_BOX, cloud.r2wx, cloud.r2wy, cloud.rho_hxhy))
    assert len(cloud.r2wx) == len(cloud.rho_hxhy) == len(cloud)
    # Small confounding cannot move the slope from 0.5 below 0.2
    assert np.all(cloud.r2wx + cloud.r2wy > 0.1)


def test_everything_significant_gives_empty_cloud():
    cloud = necessary_region(FIG_STATS, FULL_BOX, SignificanceRange(), COARSE)
    assert cloud.is_empty


def test_point_box_inside_range():
    stats = SummaryStats(0.3, 2.0)
    spec = BoundSpec.from_pairs((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))
    slope = stats.unadjusted_slope
    cloud = necessary_region(stats, spec, SignificanceRange(slope - 1, slope + 1))
    assert cloud.is_empty


def test_enlarging_the_range_shrinks_the_cloud():
    narrow = necessary_region(FIG_STATS, FULL_BOX, SignificanceRange(0.3, 2.0), COARSE)
    wide = necessary_region(FIG_STATS, FULL_BOX, SignificanceRange(0.1, 5.0), COARSE)
    assert len(wide) <= len(narrow)
    narrow_points = set(zip(narrow.r2wx, narrow.r2wy, narrow.rho_hxhy))
    assert set(zip(wide.r2wx, wide.r2wy, wide.rho_hxhy)) <= narrow_points


def test_extra_constraints_only_remove_points():
    sig = SignificanceRange(0.2, math.inf)
    base = necessary_region(FIG_STATS, FULL_BOX, sig, COARSE)
    constrained = necessary_region(
        FIG_STATS, FULL_BOX, sig, COARSE, ExtraConstraints(rho_hx_y=(-0.2, 0.2))
    )
    assert len(constrained) < len(base)
    assert np.all(np.abs(np.sqrt(constrained.r2wy) * constrained.rho_hxhy) <= 0.2 + 1e-12)


def _check_consistency(seed: int, cfg: GridConfig):
    rng = np.random.default_rng(seed)
    stats = random_stats(rng)
    spec = random_spec(stats, rng)
    exact = solve_interval(stats, spec)
    grid = grid_min_max(stats, spec, cfg).interval
    cut = rng.uniform(exact.lower - 0.2 * exact.width, exact.upper + 0.2 * exact.width)
    sig = SignificanceRange(cut) if rng.random() < 0.5 else SignificanceRange(upper=cut)

    cloud = necessary_region(stats, spec, sig, cfg)
    if sig.contains_interval(exact):
        assert cloud.is_empty
    if not sig.contains_interval(grid):
        assert not cloud.is_empty


@pytest.mark.parametrize("seed", range(10))
def test_consistent_with_exact_interval(seed):
    try:
        _check_consistency(seed, COARSE)
    except EmptyFeasibleSetError:
        pytest.skip("random box has no feasible grid node")


@pytest.mark.slow
def test_consistent_with_exact_interval_at_full_resolution():
    for seed in range(100, 150):
        _check_consistency(seed, GridConfig(101))
