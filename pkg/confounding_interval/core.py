"""
Domain types and the closed-form kernel.

The adjusted slope of y on x, once a confounder set w is partialled out, is
a function of the measured pair (rho_xy, sigma_y/sigma_x) and of the
sensitivity tuple (R^2_wx, R^2_wy, rho_xhat_yhat):

    beta = (sigma_y/sigma_x) * (rho_xy - R_wx R_wy rho) / (1 - R^2_wx)

A tuple can only come from actual data when rho lies in the realizability
band [alpha_-, alpha_+]. R_wx and R_wy are always the nonnegative roots.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from . import DEFAULT_SETTINGS
from .exceptions import DegenerateVarianceError, DomainError, RankDeficiencyError

logger = logging.getLogger(__name__)

DEFAULT_TOL = DEFAULT_SETTINGS["feasibility_tol"]

# A fitted-value vector whose centered norm is below this fraction of the
# centered response norm is treated as constant.
_FLAT_FIT = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name}: must be finite, got {value}")
    return value


def _check_r2(name: str, value: float) -> float:
    value = _require_finite(name, value)
    if not 0.0 <= value < 1.0:
        raise DomainError(f"{name}: must lie in [0, 1), got {value}")
    return value


@dataclass(frozen=True)
class SummaryStats:
    """The measured association between x and y."""

    rho_xy: float
    sigma_ratio: float

    def __post_init__(self):
        rho = _require_finite("rho_xy", self.rho_xy)
        ratio = _require_finite("sigma_ratio", self.sigma_ratio)
        if not -1.0 < rho < 1.0:
            raise DomainError(f"rho_xy: must lie in (-1, 1), got {rho}")
        if ratio <= 0.0:
            raise DomainError(f"sigma_ratio: must be positive, got {ratio}")
        object.__setattr__(self, "rho_xy", rho)
        object.__setattr__(self, "sigma_ratio", ratio)

    @property
    def unadjusted_slope(self) -> float:
        """Slope of the reduced regression of y on x alone."""
        return self.sigma_ratio * self.rho_xy


@dataclass(frozen=True)
class BoundSpec:
    """Box bounds on the sensitivity tuple."""

    l_x2: float
    u_x2: float
    l_y2: float
    u_y2: float
    l_rho: float = -1.0
    u_rho: float = 1.0

    def __post_init__(self):
        for prefix, lower, upper in (
            ("r2x", self.l_x2, self.u_x2),
            ("r2y", self.l_y2, self.u_y2),
        ):
            lower = _require_finite(f"{prefix} lower", lower)
            upper = _require_finite(f"{prefix} upper", upper)
            if lower < 0.0:
                raise DomainError(f"{prefix}: lower bound must be >= 0, got {lower}")
            if lower > upper:
                raise DomainError(f"{prefix}: lower bound exceeds upper")
            if upper >= 1.0:
                raise DomainError(f"{prefix}: upper bound must be < 1, got {upper}")

        l_rho = _require_finite("rho-hxhy lower", self.l_rho)
        u_rho = _require_finite("rho-hxhy upper", self.u_rho)
        if l_rho < -1.0 or u_rho > 1.0:
            raise DomainError("rho-hxhy: bounds must lie in [-1, 1]")
        if l_rho > u_rho:
            raise DomainError("rho-hxhy: lower bound exceeds upper")

        for name in ("l_x2", "u_x2", "l_y2", "u_y2", "l_rho", "u_rho"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def from_pairs(cls, r2x, r2y, rho=(-1.0, 1.0)) -> "BoundSpec":
        """Build from three (lower, upper) pairs."""
        return cls(r2x[0], r2x[1], r2y[0], r2y[1], rho[0], rho[1])

    @property
    def r2x(self) -> tuple[float, float]:
        return (self.l_x2, self.u_x2)

    @property
    def r2y(self) -> tuple[float, float]:
        return (self.l_y2, self.u_y2)

    @property
    def rho(self) -> tuple[float, float]:
        return (self.l_rho, self.u_rho)

    def corners(self) -> Iterator[tuple[float, float, float]]:
        """Yield the eight (b_x^2, b_y^2, b_rho) corner triples."""
        for bx2 in self.r2x:
            for by2 in self.r2y:
                for brho in self.rho:
                    yield (bx2, by2, brho)

    def contains(self, other: "BoundSpec") -> bool:
        """Whether other's box lies inside this box."""
        return (
            self.l_x2 <= other.l_x2
            and other.u_x2 <= self.u_x2
            and self.l_y2 <= other.l_y2
            and other.u_y2 <= self.u_y2
            and self.l_rho <= other.l_rho
            and other.u_rho <= self.u_rho
        )


@dataclass(frozen=True)
class SensitivityTuple:
    """A point (R^2_wx, R^2_wy, rho_xhat_yhat)."""

    r2wx: float
    r2wy: float
    rho_hxhy: float

    def __post_init__(self):
        object.__setattr__(self, "r2wx", _check_r2("r2wx", self.r2wx))
        object.__setattr__(self, "r2wy", _check_r2("r2wy", self.r2wy))
        rho = _require_finite("rho_hxhy", self.rho_hxhy)
        if not -1.0 <= rho <= 1.0:
            raise DomainError(f"rho_hxhy: must lie in [-1, 1], got {rho}")
        object.__setattr__(self, "rho_hxhy", rho)

    @property
    def r_wx(self) -> float:
        return math.sqrt(self.r2wx)

    @property
    def r_wy(self) -> float:
        return math.sqrt(self.r2wy)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.r2wx, self.r2wy, self.rho_hxhy)


@dataclass(frozen=True)
class ConfoundingInterval:
    """Closed interval of attainable adjusted slopes with witness tuples."""

    lower: float
    upper: float
    argmin_tuple: SensitivityTuple
    argmax_tuple: SensitivityTuple
    approximate: bool = False
    candidate_count: int = 0

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError(
                f"interval: lower {self.lower} exceeds upper {self.upper}"
            )

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= value <= self.upper + tol


@dataclass(frozen=True)
class ExtraConstraints:
    """Optional bounds on the fitted-value correlations rho_xhat_y and rho_x_yhat.

    rho_xhat_y = R_wy * rho_xhat_yhat and rho_x_yhat = R_wx * rho_xhat_yhat.
    The closed-form candidate set does not cover these constraints, so only
    grid and sampling machinery honours them.
    """

    rho_hx_y: Optional[tuple[float, float]] = None
    rho_x_hy: Optional[tuple[float, float]] = None

    def __post_init__(self):
        for name in ("rho_hx_y", "rho_x_hy"):
            bounds = getattr(self, name)
            if bounds is None:
                continue
            lower = _require_finite(f"{name} lower", bounds[0])
            upper = _require_finite(f"{name} upper", bounds[1])
            if lower > upper:
                raise DomainError(f"{name}: lower bound exceeds upper")
            object.__setattr__(self, name, (lower, upper))

    @property
    def active(self) -> bool:
        return self.rho_hx_y is not None or self.rho_x_hy is not None

    def mask(self, r2wx, r2wy, rho_hxhy, tol: float = DEFAULT_TOL) -> np.ndarray:
        r2wx = np.asarray(r2wx, dtype=float)
        r2wy = np.asarray(r2wy, dtype=float)
        rho_hxhy = np.asarray(rho_hxhy, dtype=float)
        keep = np.ones(np.broadcast(r2wx, r2wy, rho_hxhy).shape, dtype=bool)
        if self.rho_hx_y is not None:
            value = np.sqrt(r2wy) * rho_hxhy
            keep &= (value >= self.rho_hx_y[0] - tol) & (value <= self.rho_hx_y[1] + tol)
        if self.rho_x_hy is not None:
            value = np.sqrt(r2wx) * rho_hxhy
            keep &= (value >= self.rho_x_hy[0] - tol) & (value <= self.rho_x_hy[1] + tol)
        return keep


@dataclass(frozen=True)
class Dataset:
    """Raw columns x, y and the n x p confounder matrix W."""

    x: np.ndarray
    y: np.ndarray
    W: np.ndarray = field(default=None)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        y = np.asarray(self.y, dtype=float).reshape(-1)
        n = x.shape[0]
        if self.W is None:
            W = np.empty((n, 0))
        else:
            W = np.asarray(self.W, dtype=float)
            if W.ndim == 1:
                W = W.reshape(-1, 1)
        if y.shape[0] != n or W.shape[0] != n:
            raise DomainError(
                f"dataset: column lengths differ (x={n}, y={y.shape[0]}, W={W.shape[0]})"
            )
        if n <= W.shape[1] + 2:
            raise DomainError(
                f"dataset: need n > p + 2, got n={n}, p={W.shape[1]}"
            )
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DomainError("dataset: x and y must be finite")
        if not np.all(np.isfinite(W)):
            raise DomainError("dataset: W must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "W", W)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class DataSummary:
    """Statistics computed from a Dataset.

    Values are kept raw so a perfect fit (R^2 = 1) or a perfect correlation
    can be reported; the stats/sensitivity properties apply the domain checks.
    """

    rho_xy: float
    sigma_x: float
    sigma_y: float
    r2wx: float
    r2wy: float
    rho_hxhy: float
    degenerate: bool = False
    n: int = 0
    p: int = 0

    @property
    def sigma_ratio(self) -> float:
        return self.sigma_y / self.sigma_x

    @property
    def stats(self) -> SummaryStats:
        return SummaryStats(self.rho_xy, self.sigma_ratio)

    @property
    def sensitivity(self) -> SensitivityTuple:
        return SensitivityTuple(self.r2wx, self.r2wy, self.rho_hxhy)


def beta_values(stats: SummaryStats, r2wx, r2wy, rho_hxhy) -> np.ndarray:
    """Vectorized adjusted slope over arrays of tuple components."""
    r2wx = np.asarray(r2wx, dtype=float)
    r2wy = np.asarray(r2wy, dtype=float)
    rho_hxhy = np.asarray(rho_hxhy, dtype=float)
    numerator = stats.rho_xy - np.sqrt(r2wx) * np.sqrt(r2wy) * rho_hxhy
    return stats.sigma_ratio * numerator / (1.0 - r2wx)


def beta_adjusted(stats: SummaryStats, t: SensitivityTuple) -> float:
    """Adjusted slope coefficient of x once w is partialled out."""
    if t.r2wx >= 1.0:
        raise DomainError("r2wx: adjusted slope undefined at R^2_wx = 1")
    return float(beta_values(stats, t.r2wx, t.r2wy, t.rho_hxhy))


def band_edges(stats: SummaryStats, r2wx: float, r2wy: float) -> tuple[float, float]:
    """Unclipped realizability band edges (alpha_-, alpha_+).

    Returns (-inf, inf) when R_wx R_wy = 0.
    """
    r2wx = _check_r2("r2wx", r2wx)
    r2wy = _check_r2("r2wy", r2wy)
    product = math.sqrt(r2wx) * math.sqrt(r2wy)
    if product == 0.0:
        return (-math.inf, math.inf)
    slack = math.sqrt(1.0 - r2wx) * math.sqrt(1.0 - r2wy)
    return ((stats.rho_xy - slack) / product, (stats.rho_xy + slack) / product)


def feasible_rho_range(
    stats: SummaryStats, r2wx: float, r2wy: float
) -> Optional[tuple[float, float]]:
    """Range of rho_xhat_yhat realizable for the given R^2 pair.

    The band is clipped to [-1, 1]; None means the clipped band is empty.
    """
    alpha_minus, alpha_plus = band_edges(stats, r2wx, r2wy)
    lower = max(-1.0, alpha_minus)
    upper = min(1.0, alpha_plus)
    if lower > upper:
        return None
    return (lower, upper)


def feasible_mask(
    stats: SummaryStats,
    spec: BoundSpec,
    r2wx,
    r2wy,
    rho_hxhy,
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Vectorized membership test for the feasible set.

    The band test accepts either the divided form (rho within the alpha band)
    or the undivided form |rho_xy - R_wx R_wy rho| <= sqrt(1-R^2_wx)sqrt(1-R^2_wy).
    Both describe the same set; the undivided one does not amplify rounding
    when R_wx R_wy is small.
    """
    r2wx = np.asarray(r2wx, dtype=float)
    r2wy = np.asarray(r2wy, dtype=float)
    rho_hxhy = np.asarray(rho_hxhy, dtype=float)

    in_domain = (
        (r2wx >= 0.0)
        & (r2wx < 1.0)
        & (r2wy >= 0.0)
        & (r2wy < 1.0)
        & (np.abs(rho_hxhy) <= 1.0)
    )
    in_box = (
        (r2wx >= spec.l_x2 - tol)
        & (r2wx <= spec.u_x2 + tol)
        & (r2wy >= spec.l_y2 - tol)
        & (r2wy <= spec.u_y2 + tol)
        & (rho_hxhy >= spec.l_rho - tol)
        & (rho_hxhy <= spec.u_rho + tol)
    )

    with np.errstate(divide="ignore", invalid="ignore"):
        product = np.sqrt(np.clip(r2wx, 0.0, None)) * np.sqrt(np.clip(r2wy, 0.0, None))
        slack = np.sqrt(np.clip(1.0 - r2wx, 0.0, None)) * np.sqrt(
            np.clip(1.0 - r2wy, 0.0, None)
        )
        undivided = np.abs(stats.rho_xy - product * rho_hxhy) <= slack + tol
        alpha_minus = (stats.rho_xy - slack) / product
        alpha_plus = (stats.rho_xy + slack) / product
        divided = (rho_hxhy >= alpha_minus - tol) & (rho_hxhy <= alpha_plus + tol)

    in_band = (product == 0.0) | divided | undivided
    return in_domain & in_box & in_band


def is_feasible(
    stats: SummaryStats,
    spec: BoundSpec,
    t: SensitivityTuple,
    tol: float = DEFAULT_TOL,
) -> bool:
    """Whether t lies in the feasible set within tol."""
    if tol < 0:
        raise DomainError(f"tol: must be >= 0, got {tol}")
    return bool(feasible_mask(stats, spec, t.r2wx, t.r2wy, t.rho_hxhy, tol))


def residual_correlation(stats: SummaryStats, t: SensitivityTuple) -> float:
    """Correlation between the residuals of x and y after projecting out w."""
    if t.r2wx >= 1.0 or t.r2wy >= 1.0:
        raise DomainError("residual correlation undefined when an R^2 equals 1")
    slack = math.sqrt(1.0 - t.r2wx) * math.sqrt(1.0 - t.r2wy)
    return (stats.rho_xy - t.r_wx * t.r_wy * t.rho_hxhy) / slack


def sign_determined(stats: SummaryStats, spec: BoundSpec) -> bool:
    """Whether every attainable slope shares the sign of rho_xy.

    Holds when u_x u_y < |rho_xy|: the numerator of the slope formula can
    then never reach zero.
    """
    return math.sqrt(spec.u_x2) * math.sqrt(spec.u_y2) < abs(stats.rho_xy)


def _centered(v: np.ndarray) -> np.ndarray:
    return v - v.mean()


def _correlation(a: np.ndarray, b: np.ndarray) -> float:
    value = float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))
    return min(1.0, max(-1.0, value))


def summarize(d: Dataset) -> DataSummary:
    """Compute rho_xy, the sigma pair and the sensitivity tuple from raw data.

    Fits x and y on [1 | W] by least squares (QR). Standard deviations use
    divisor n.
    """
    if np.ptp(d.x) == 0.0:
        raise DegenerateVarianceError("x: column is constant")
    if np.ptp(d.y) == 0.0:
        raise DegenerateVarianceError("y: column is constant")

    design = np.column_stack([np.ones(d.n), d.W])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise RankDeficiencyError(
            f"[1 | W] is not of full column rank ({design.shape[1]} columns)"
        )
    q, _ = np.linalg.qr(design)

    xc = _centered(d.x)
    yc = _centered(d.y)
    x_fit = _centered(q @ (q.T @ d.x))
    y_fit = _centered(q @ (q.T @ d.y))

    norm_xc = np.linalg.norm(xc)
    norm_yc = np.linalg.norm(yc)
    norm_xf = np.linalg.norm(x_fit)
    norm_yf = np.linalg.norm(y_fit)

    degenerate = False
    r2wx = min(1.0, float((norm_xf / norm_xc) ** 2))
    r2wy = min(1.0, float((norm_yf / norm_yc) ** 2))
    if norm_xf <= _FLAT_FIT * norm_xc:
        r2wx = 0.0
        degenerate = True
    if norm_yf <= _FLAT_FIT * norm_yc:
        r2wy = 0.0
        degenerate = True

    if degenerate:
        if d.p:
            logger.warning("Fitted values are constant; reporting rho_hxhy = 0")
        rho_hxhy = 0.0
    else:
        rho_hxhy = _correlation(x_fit, y_fit)

    return DataSummary(
        rho_xy=_correlation(xc, yc),
        sigma_x=float(norm_xc / math.sqrt(d.n)),
        sigma_y=float(norm_yc / math.sqrt(d.n)),
        r2wx=r2wx,
        r2wy=r2wy,
        rho_hxhy=rho_hxhy,
        degenerate=degenerate,
        n=d.n,
        p=d.p,
    )
