import numpy as np
import pytest

from confounding_interval.core import BoundSpec, SummaryStats


@pytest.fixture
def case_stats():
    """Published case study: rho_xy = -0.11, sigma_y/sigma_x = 42.94."""
    return SummaryStats(-0.11, 42.94)


@pytest.fixture
def case_spec():
    return BoundSpec.from_pairs((0.1, 0.5), (0.0, 0.2))


@pytest.fixture
def positive_rho_spec():
    return BoundSpec.from_pairs((0.1, 0.5), (0.0, 0.2), (0.0, 1.0))


@pytest.fixture
def empty_stats():
    return SummaryStats(0.9, 1.0)


@pytest.fixture
def empty_spec():
    # With rho_hxhy pinned at -1 the band cannot reach rho_xy = 0.9
    return BoundSpec.from_pairs((0.8, 0.8), (0.8, 0.8), (-1.0, -1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
