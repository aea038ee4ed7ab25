"""
Independent checks on the exact solver.

* grid_min_max: brute-force extrema over a lattice of the bound box.
* synthesize_data: builds a dataset realizing a given (stats, tuple) pair.
* ols_beta: the adjusted slope fitted directly by least squares.
* random_stats / random_spec / random_feasible_tuple: inputs for
  randomized checks.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import DEFAULT_SETTINGS
from .core import (
    DEFAULT_TOL,
    BoundSpec,
    ConfoundingInterval,
    Dataset,
    ExtraConstraints,
    SensitivityTuple,
    SummaryStats,
    beta_adjusted,
    beta_values,
    feasible_mask,
    feasible_rho_range,
    residual_correlation,
    summarize,
)
from .exceptions import (
    DomainError,
    EmptyFeasibleSetError,
    InfeasibleTupleError,
    RankDeficiencyError,
)

logger = logging.getLogger(__name__)

# Lattice nodes evaluated per numpy call in grid_min_max
SLAB_BLOCK_NODES = 1_000_000


@dataclass(frozen=True)
class GridConfig:
    resolution: int = DEFAULT_SETTINGS["grid_resolution"]
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 2:
            raise DomainError(f"resolution: must be an integer >= 2, got {self.resolution}")
        if self.tol < 0:
            raise DomainError(f"tol: must be >= 0, got {self.tol}")


@dataclass(frozen=True)
class GridResult:
    interval: ConfoundingInterval
    feasible_count: int
    resolution: int


def lattice_axes(
    spec: BoundSpec, resolution: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evenly spaced nodes per axis, both endpoints included."""
    return tuple(
        np.unique(np.linspace(lower, upper, resolution))
        for lower, upper in (spec.r2x, spec.r2y, spec.rho)
    )


def grid_min_max(
    stats: SummaryStats,
    spec: BoundSpec,
    cfg: GridConfig = GridConfig(),
    extra: Optional[ExtraConstraints] = None,
) -> GridResult:
    """Extrema of the adjusted slope over the feasible lattice nodes.

    Works on blocks of R^2_wx slabs, broadcasting the three axes so each
    block holds at most SLAB_BLOCK_NODES nodes. The result can only be
    narrower than the exact interval.
    """
    xs, ys, rhos = lattice_axes(spec, cfg.resolution)
    y_axis = ys[None, :, None]
    rho_axis = rhos[None, None, :]
    block = max(1, SLAB_BLOCK_NODES // (len(ys) * len(rhos)))

    low = (math.inf, None)
    high = (-math.inf, None)
    count = 0
    for start in range(0, len(xs), block):
        x_axis = xs[start : start + block, None, None]
        mask = feasible_mask(stats, spec, x_axis, y_axis, rho_axis, cfg.tol)
        if extra is not None and extra.active:
            mask &= extra.mask(x_axis, y_axis, rho_axis, cfg.tol)
        feasible = int(mask.sum())
        if not feasible:
            continue
        count += feasible
        values = beta_values(stats, x_axis, y_axis, rho_axis)
        i = np.unravel_index(np.argmin(np.where(mask, values, math.inf)), mask.shape)
        j = np.unravel_index(np.argmax(np.where(mask, values, -math.inf)), mask.shape)
        if values[i] < low[0]:
            low = (float(values[i]), (xs[start + i[0]], ys[i[1]], rhos[i[2]]))
        if values[j] > high[0]:
            high = (float(values[j]), (xs[start + j[0]], ys[j[1]], rhos[j[2]]))

    if count == 0:
        raise EmptyFeasibleSetError(
            f"no feasible grid node at resolution {cfg.resolution}"
        )

    logger.debug(f"Grid {cfg.resolution}: {count} feasible nodes")
    interval = ConfoundingInterval(
        lower=low[0],
        upper=high[0],
        argmin_tuple=SensitivityTuple(*low[1]),
        argmax_tuple=SensitivityTuple(*high[1]),
        approximate=True,
    )
    return GridResult(interval=interval, feasible_count=count, resolution=cfg.resolution)


def random_stats(
    rng: np.random.Generator,
    limit: float = 0.95,
    ratio_range: tuple[float, float] = (math.exp(-2.0), math.exp(2.0)),
) -> SummaryStats:
    """rho_xy uniform on (-limit, limit), sigma ratio log-uniform on ratio_range."""
    log_low, log_high = (math.log(value) for value in ratio_range)
    return SummaryStats(
        rng.uniform(-limit, limit), float(np.exp(rng.uniform(log_low, log_high)))
    )


def random_spec(
    stats: SummaryStats, rng: np.random.Generator, ceiling: float = 0.95
) -> BoundSpec:
    """A random box within [0, ceiling]^2 x [-1, 1] holding a probe-lattice node."""
    probe = DEFAULT_SETTINGS["probe_resolution"]
    while True:
        r2x = np.sort(rng.uniform(0.0, ceiling, 2))
        r2y = np.sort(rng.uniform(0.0, ceiling, 2))
        rho = np.sort(rng.uniform(-1.0, 1.0, 2)) if rng.random() < 0.5 else (-1.0, 1.0)
        spec = BoundSpec.from_pairs(r2x, r2y, rho)
        xs, ys, rhos = lattice_axes(spec, probe)
        grid = np.meshgrid(xs, ys, rhos, indexing="ij")
        if feasible_mask(stats, spec, *grid).any():
            return spec


def random_feasible_tuple(
    stats: SummaryStats,
    rng: np.random.Generator,
    p: int = 2,
    ceiling: float = 0.95,
) -> SensitivityTuple:
    """A random realizable tuple that synthesize_data accepts for this p."""
    if p == 0:
        return SensitivityTuple(0.0, 0.0, 0.0)
    while True:
        r2wx, r2wy = rng.uniform(0.0, ceiling, 2)
        band = feasible_rho_range(stats, r2wx, r2wy)
        if band is None:
            continue
        if p >= 2:
            return SensitivityTuple(r2wx, r2wy, rng.uniform(*band))
        # One confounder column: fitted vectors are collinear
        ends = [value for value in (-1.0, 1.0) if band[0] <= value <= band[1]]
        if ends:
            return SensitivityTuple(r2wx, r2wy, ends[int(rng.integers(len(ends)))])


def _well_conditioned(rng: np.random.Generator, p: int) -> np.ndarray:
    """Random p x p matrix with condition number at most 4."""
    rotation, _ = np.linalg.qr(rng.standard_normal((p, p)))
    return rotation * rng.uniform(0.5, 2.0, size=p)


def synthesize_data(
    stats: SummaryStats,
    t: SensitivityTuple,
    n: int = None,
    p: int = 2,
    seed: int = 0,
) -> Dataset:
    """Construct (x, y, W) whose statistics are exactly (stats, t).

    x and y are assembled in an orthonormal frame of n-space that contains
    the ones vector: fitted parts in the span of W, residual parts
    orthogonal to it. sigma_x is 1 and sigma_y is stats.sigma_ratio.
    """
    if n is None:
        n = p + 3
    if p < 0 or n <= p + 2:
        raise DomainError(f"synthesis: need n > p + 2, got n={n}, p={p}")

    rho_res = residual_correlation(stats, t)
    if abs(rho_res) > 1.0 + 1e-12:
        raise InfeasibleTupleError(
            f"residual correlation {rho_res:.6g} lies outside [-1, 1]"
        )
    rho_res = min(1.0, max(-1.0, rho_res))

    both_fitted = t.r2wx > 0.0 and t.r2wy > 0.0
    if p == 0 and (t.r2wx > 0.0 or t.r2wy > 0.0):
        raise InfeasibleTupleError("synthesis: p = 0 admits only zero R^2 values")
    if p == 1 and both_fitted and abs(t.rho_hxhy) < 1.0:
        raise InfeasibleTupleError(
            "synthesis: p = 1 admits only rho_hxhy = +/-1 when both R^2 are positive"
        )

    rng = np.random.default_rng(seed)
    frame, _ = np.linalg.qr(
        np.column_stack([np.ones(n), rng.standard_normal((n, p + 2))])
    )
    fitted = frame[:, 1 : p + 1]
    e1 = frame[:, p + 1]
    e2 = frame[:, p + 2]

    if p >= 2:
        x_fit = fitted[:, 0]
        y_fit = t.rho_hxhy * fitted[:, 0] + math.sqrt(1.0 - t.rho_hxhy**2) * fitted[:, 1]
    elif p == 1:
        x_fit = fitted[:, 0]
        y_fit = fitted[:, 0] if t.rho_hxhy >= 0 else -fitted[:, 0]
    else:
        x_fit = y_fit = np.zeros(n)

    x_res = e1
    y_res = rho_res * e1 + math.sqrt(1.0 - rho_res**2) * e2

    scale = math.sqrt(n)
    x = scale * (t.r_wx * x_fit + math.sqrt(1.0 - t.r2wx) * x_res)
    y = scale * stats.sigma_ratio * (t.r_wy * y_fit + math.sqrt(1.0 - t.r2wy) * y_res)
    x += rng.normal()
    y += rng.normal() * stats.sigma_ratio

    W = fitted @ _well_conditioned(rng, p) + rng.normal(size=p) if p else None
    return Dataset(x, y, W)


def ols_beta(d: Dataset) -> float:
    """Coefficient on x in the least-squares fit of y on [1 | x | W]."""
    design = np.column_stack([np.ones(d.n), d.x, d.W])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise RankDeficiencyError("[1 | x | W] is not of full column rank")
    q, r = np.linalg.qr(design)
    coefficients = np.linalg.solve(r, q.T @ d.y)
    return float(coefficients[1])


@dataclass(frozen=True)
class Prop1Report:
    ols: float
    formula: float

    @property
    def discrepancy(self) -> float:
        return abs(self.ols - self.formula)


def verify_prop1(
    stats: SummaryStats,
    t: SensitivityTuple,
    n: int = None,
    p: int = 2,
    seed: int = 0,
) -> Prop1Report:
    """Compare the fitted slope on synthesized data with the closed form."""
    d = synthesize_data(stats, t, n=n, p=p, seed=seed)
    return Prop1Report(ols=ols_beta(d), formula=beta_adjusted(stats, t))


@dataclass(frozen=True)
class IdentityReport:
    """Projection identities measured on raw vectors."""

    residual_correlation: float
    decomposition_residual: float
    slope_residual: float


def projection_identities(d: Dataset) -> IdentityReport:
    """Check the correlation decomposition and the slope identity on data.

    rho_xy = R_wx R_wy rho + sqrt(1-R^2_wx) sqrt(1-R^2_wy) rho_res, and
    beta = (sigma_y/sigma_x) sqrt(1-R^2_wy)/sqrt(1-R^2_wx) rho_res, where
    rho_res is the correlation of the residual vectors x - xhat, y - yhat.
    """
    q, _ = np.linalg.qr(np.column_stack([np.ones(d.n), d.W]))
    x_res = d.x - q @ (q.T @ d.x)
    y_res = d.y - q @ (q.T @ d.y)
    rho_res = float(x_res @ y_res / (np.linalg.norm(x_res) * np.linalg.norm(y_res)))

    s = summarize(d)
    slack = math.sqrt(1.0 - s.r2wx) * math.sqrt(1.0 - s.r2wy)
    decomposition = math.sqrt(s.r2wx) * math.sqrt(s.r2wy) * s.rho_hxhy + slack * rho_res
    slope = s.sigma_ratio * math.sqrt(1.0 - s.r2wy) / math.sqrt(1.0 - s.r2wx) * rho_res
    return IdentityReport(
        residual_correlation=rho_res,
        decomposition_residual=abs(s.rho_xy - decomposition),
        slope_residual=abs(ols_beta(d) - slope),
    )
