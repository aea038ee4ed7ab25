"""
Inverse problem: which realizable tuples would push the adjusted slope
outside a prospectively declared range of practically significant values.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import DEFAULT_SETTINGS
from .core import (
    BoundSpec,
    ConfoundingInterval,
    ExtraConstraints,
    SummaryStats,
    beta_values,
    feasible_mask,
)
from .exceptions import DomainError
from .oracle import GridConfig, lattice_axes

logger = logging.getLogger(__name__)

REGION_GRID = GridConfig(DEFAULT_SETTINGS["region_resolution"])


@dataclass(frozen=True)
class SignificanceRange:
    """Slope values declared practically significant; bounds may be infinite."""

    lower: float = -math.inf
    upper: float = math.inf

    def __post_init__(self):
        lower = float(self.lower)
        upper = float(self.upper)
        if math.isnan(lower) or math.isnan(upper):
            raise DomainError("significance range: bounds must not be NaN")
        if lower > upper:
            raise DomainError("significance range: lower bound exceeds upper")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def contains(self, values) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        return (values >= self.lower) & (values <= self.upper)

    def contains_interval(self, interval: ConfoundingInterval) -> bool:
        return self.lower <= interval.lower and interval.upper <= self.upper


@dataclass(frozen=True)
class RegionCloud:
    r2wx: np.ndarray
    r2wy: np.ndarray
    rho_hxhy: np.ndarray
    beta: np.ndarray
    resolution: int

    def __len__(self) -> int:
        return int(self.beta.shape[0])

    @property
    def is_empty(self) -> bool:
        return len(self) == 0


def necessary_region(
    stats: SummaryStats,
    spec: BoundSpec,
    sig: SignificanceRange,
    cfg: GridConfig = REGION_GRID,
    extra: Optional[ExtraConstraints] = None,
) -> RegionCloud:
    """Realizable lattice nodes whose adjusted slope falls outside sig."""
    xs, ys, rhos = lattice_axes(spec, cfg.resolution)
    r2wx, r2wy, rho = (a.ravel() for a in np.meshgrid(xs, ys, rhos, indexing="ij"))

    keep = feasible_mask(stats, spec, r2wx, r2wy, rho, cfg.tol)
    if extra is not None and extra.active:
        keep &= extra.mask(r2wx, r2wy, rho, cfg.tol)
    r2wx, r2wy, rho = r2wx[keep], r2wy[keep], rho[keep]
    beta = beta_values(stats, r2wx, r2wy, rho)
    outside = ~sig.contains(beta)

    logger.info(
        f"Region: {int(outside.sum())} of {int(keep.sum())} feasible nodes "
        f"fall outside [{sig.lower}, {sig.upper}]"
    )
    return RegionCloud(
        r2wx=r2wx[outside],
        r2wy=r2wy[outside],
        rho_hxhy=rho[outside],
        beta=beta[outside],
        resolution=cfg.resolution,
    )
