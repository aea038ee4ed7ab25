"""
Exact confounding intervals.

The extrema of the adjusted slope over the feasible set occur among a finite
set of closed-form candidates. Each candidate keeps some subset of the box
faces and the realizability band active:

    6a  R^2_wy face and rho face, stationary in R_wx
    6b  rho face and the band, on the diagonal R_wx = R_wy (upper edge)
    6c  same, lower edge
    6d  box corners
    6e  R^2_wx face, R^2_wy face and the band
    6f  R^2_wx face, rho face and the band, solved for R_wy
    6g  R^2_wy face, rho face and the band, solved for R_wx
    6h  rho face and the band with both R^2 interior, off the diagonal

Families 6a to 6g give at most eleven points for each of the eight face
combinations, so never more than 88. Along the rho face, the band edge
is stationary where b (tan^2 a + tan^2 c) = 2 s tan a tan c, with
R_wx = sin a, R_wy = sin c and s the edge sign; 6b and 6c only cover the
diagonal of that curve. 6h adds at most four points for each rho bound.
"""

import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from . import DEFAULT_SETTINGS
from .core import (
    DEFAULT_TOL,
    BoundSpec,
    ConfoundingInterval,
    ExtraConstraints,
    SensitivityTuple,
    SummaryStats,
    beta_values,
    feasible_mask,
)
from .exceptions import DomainError, EmptyFeasibleSetError, PriorIncompatibleError
from .oracle import GridConfig, grid_min_max

logger = logging.getLogger(__name__)

DEGENERATE_EPS = DEFAULT_SETTINGS["degenerate_eps"]
DEDUP_DISTANCE = DEFAULT_SETTINGS["dedup_distance"]
MAX_CANDIDATES = 88
# Off-diagonal band-edge points on the rho faces (family 6h)
MAX_OFF_DIAGONAL = 8
QUANTILE_LEVELS = (0.025, 0.25, 0.5, 0.75, 0.975)


class Family(Enum):
    A = "6a"
    B = "6b"
    C = "6c"
    D = "6d"
    E = "6e"
    F = "6f"
    G = "6g"
    H = "6h"


_FAMILY_ORDER = {family: index for index, family in enumerate(Family)}


@dataclass(frozen=True)
class Candidate:
    """A feasible point of the candidate set and the branch that produced it."""

    sensitivity: SensitivityTuple
    family: Family
    branch: str


def _quadratic_roots(
    a: float, b: float, c: float, eps: float = DEGENERATE_EPS
) -> list[tuple[str, float]]:
    """Real roots of a x^2 + b x + c = 0, labelled by branch."""
    if abs(a) <= eps:
        if abs(b) > eps:
            return [("linear", -c / b)]
        return []

    discriminant = b * b - 4.0 * a * c
    if discriminant < 0.0:
        return []

    root_disc = math.sqrt(discriminant)
    q = -0.5 * (b + math.copysign(root_disc, b))
    if q == 0.0:
        return [("+", 0.0), ("-", 0.0)]
    if b >= 0.0:
        return [("+", c / q), ("-", q / a)]
    return [("+", q / a), ("-", c / q)]


def q_pm_squared(
    a: float, b: float, c: float, eps: float = DEGENERATE_EPS
) -> tuple[float, ...]:
    """Distinct squares of the real roots of a x^2 + b x + c = 0, ascending."""
    return tuple(sorted({root * root for _, root in _quadratic_roots(a, b, c, eps)}))


def _band_face_roots(
    b_face: float, b_rho: float, rho_xy: float, eps: float
) -> list[tuple[str, float]]:
    """Roots R of the band edge with one R fixed at b_face and rho at b_rho."""
    b2 = b_face * b_face
    return _quadratic_roots(
        b2 * b_rho * b_rho + 1.0 - b2,
        -2.0 * b_face * b_rho * rho_xy,
        b2 - 1.0 + rho_xy * rho_xy,
        eps,
    )


def _off_diagonal_points(
    b_rho: float, rho_xy: float, eps: float
) -> list[tuple[str, float, float]]:
    """Band-edge points on the face rho = b_rho where the slope is stationary.

    tan a = k tan c with b k^2 - 2 s k + b = 0; substituting T = tan^2 c into
    the squared band equation leaves a quadratic in T.
    """
    rho2 = rho_xy * rho_xy
    points = []
    for sign, label in ((1.0, "+"), (-1.0, "-")):
        for _, k in _quadratic_roots(b_rho, -2.0 * sign, b_rho, eps):
            if not k >= 0.0:
                continue
            k2 = k * k
            roots = _quadratic_roots(
                (rho2 - b_rho * b_rho) * k2,
                rho2 * (1.0 + k2) - 2.0 * sign * b_rho * k,
                rho2 - 1.0,
                eps,
            )
            for _, t in roots:
                if not (0.0 <= t < math.inf):
                    continue
                points.append((label, k2 * t / (1.0 + k2 * t), t / (1.0 + t)))
    return points


def _raw_candidates(
    stats: SummaryStats, spec: BoundSpec, eps: float
) -> list[tuple[Family, str, float, float, float]]:
    rho_xy = stats.rho_xy
    raw = []

    for bx2, by2, b_rho in spec.corners():
        bx = math.sqrt(bx2)
        by = math.sqrt(by2)

        lead = -by * b_rho
        if abs(lead) <= eps:
            logger.debug(f"6a skipped at b_y={by:.6g}, b_rho={b_rho:.6g}: degenerate")
        else:
            for branch, root in _quadratic_roots(lead, 2.0 * rho_xy, lead, eps):
                raw.append((Family.A, branch, root * root, by2, b_rho))

        for family, sign in ((Family.B, 1.0), (Family.C, -1.0)):
            denominator = b_rho + sign
            if abs(denominator) <= eps:
                continue
            r2 = (rho_xy + sign) / denominator
            raw.append((family, "+" if sign > 0 else "-", r2, r2, b_rho))

        raw.append((Family.D, "corner", bx2, by2, b_rho))

        product = bx * by
        if product > eps:
            slack = math.sqrt(1.0 - bx2) * math.sqrt(1.0 - by2)
            raw.append((Family.E, "+", bx2, by2, (rho_xy + slack) / product))
            raw.append((Family.E, "-", bx2, by2, (rho_xy - slack) / product))

        for branch, root in _band_face_roots(bx, b_rho, rho_xy, eps):
            raw.append((Family.F, branch, bx2, root * root, b_rho))
        for branch, root in _band_face_roots(by, b_rho, rho_xy, eps):
            raw.append((Family.G, branch, root * root, by2, b_rho))

    for b_rho in sorted({spec.l_rho, spec.u_rho}):
        for branch, x2, y2 in _off_diagonal_points(b_rho, rho_xy, eps):
            raw.append((Family.H, branch, x2, y2, b_rho))

    return raw


def _snap(values: np.ndarray, lower: float, upper: float, tol: float) -> np.ndarray:
    """Move values lying within tol outside [lower, upper] onto the boundary."""
    values = np.where((values < lower) & (values >= lower - tol), lower, values)
    return np.where((values > upper) & (values <= upper + tol), upper, values)


def enumerate_candidates(
    stats: SummaryStats,
    spec: BoundSpec,
    tol: float = DEFAULT_TOL,
    eps: float = DEGENERATE_EPS,
    dedup: float = DEDUP_DISTANCE,
) -> tuple[Candidate, ...]:
    """Feasible members of the closed-form candidate set, deduplicated.

    Raises EmptyFeasibleSetError when nothing survives and a coarse grid
    probe finds no feasible point either. Returns an empty tuple when the
    probe does find feasible points.
    """
    raw = _raw_candidates(stats, spec, eps)
    limit = MAX_CANDIDATES + MAX_OFF_DIAGONAL
    if len(raw) > limit:
        raise AssertionError(f"candidate count {len(raw)} exceeds {limit}")

    points = np.array([entry[2:] for entry in raw], dtype=float)
    finite = np.all(np.isfinite(points), axis=1)
    points[~finite] = np.nan
    r2wx = _snap(points[:, 0], spec.l_x2, spec.u_x2, tol)
    r2wy = _snap(points[:, 1], spec.l_y2, spec.u_y2, tol)
    rho = _snap(points[:, 2], spec.l_rho, spec.u_rho, tol)
    keep = finite & feasible_mask(stats, spec, r2wx, r2wy, rho, tol)
    logger.debug(f"{int(keep.sum())} of {len(raw)} candidates feasible")

    survivors = sorted(
        (
            (_FAMILY_ORDER[raw[i][0]], r2wx[i], r2wy[i], rho[i], raw[i][0], raw[i][1])
            for i in np.flatnonzero(keep)
        ),
        key=lambda item: item[:4],
    )

    kept: list[Candidate] = []
    kept_points: list[np.ndarray] = []
    for _, x2, y2, r, family, branch in survivors:
        point = np.array([x2, y2, r])
        if any(np.max(np.abs(point - other)) < dedup for other in kept_points):
            continue
        kept_points.append(point)
        kept.append(Candidate(SensitivityTuple(x2, y2, r), family, branch))

    if not kept:
        # Raises EmptyFeasibleSetError when the probe is empty too
        probe = grid_min_max(
            stats,
            spec,
            GridConfig(DEFAULT_SETTINGS["probe_resolution"], tol),
        )
        logger.warning(
            f"No closed-form candidate survived but the probe found "
            f"{probe.feasible_count} feasible nodes"
        )
    return tuple(kept)


def solve_interval(
    stats: SummaryStats, spec: BoundSpec, tol: float = DEFAULT_TOL
) -> ConfoundingInterval:
    """Exact confounding interval [l, u] with witness tuples."""
    candidates = enumerate_candidates(stats, spec, tol)
    if not candidates:
        probe = grid_min_max(
            stats, spec, GridConfig(DEFAULT_SETTINGS["probe_resolution"], tol)
        )
        return replace(probe.interval, approximate=True)

    points = np.array([c.sensitivity.as_tuple() for c in candidates])
    values = beta_values(stats, points[:, 0], points[:, 1], points[:, 2])
    low = int(np.argmin(values))
    high = int(np.argmax(values))
    logger.debug(
        f"Interval [{values[low]:.6g}, {values[high]:.6g}] from "
        f"{len(candidates)} candidates ({candidates[low].family.value}, "
        f"{candidates[high].family.value})"
    )
    return ConfoundingInterval(
        lower=float(values[low]),
        upper=float(values[high]),
        argmin_tuple=candidates[low].sensitivity,
        argmax_tuple=candidates[high].sensitivity,
        candidate_count=len(candidates),
    )


@dataclass(frozen=True)
class AxisPrior:
    """Prior on one tuple component: uniform, beta on [lower, upper], or point."""

    kind: str = "uniform"
    lower: float = 0.0
    upper: float = 0.0
    a: float = 1.0
    b: float = 1.0

    KINDS = ("uniform", "beta", "point")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"prior: unknown kind {self.kind!r}")
        if self.lower > self.upper:
            raise DomainError("prior: lower bound exceeds upper")
        if self.kind == "point" and self.lower != self.upper:
            raise DomainError("prior: a point prior needs lower == upper")
        if self.a <= 0 or self.b <= 0:
            raise DomainError("prior: beta shape parameters must be positive")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "point":
            return np.full(size, self.lower)
        if self.kind == "beta":
            return self.lower + (self.upper - self.lower) * rng.beta(self.a, self.b, size)
        return rng.uniform(self.lower, self.upper, size)


@dataclass(frozen=True)
class PriorSpec:
    """Independent priors on the three tuple components."""

    r2wx: AxisPrior
    r2wy: AxisPrior
    rho_hxhy: AxisPrior
    sample_count: int = DEFAULT_SETTINGS["prior_samples"]
    seed: int = DEFAULT_SETTINGS["seed"]

    def __post_init__(self):
        if self.sample_count <= 0:
            raise DomainError("prior: sample count must be positive")

    @classmethod
    def uniform(cls, spec: BoundSpec, sample_count: int = None, seed: int = None):
        return cls.beta(spec, 1.0, 1.0, sample_count, seed, kind="uniform")

    @classmethod
    def beta(
        cls,
        spec: BoundSpec,
        a: float,
        b: float,
        sample_count: int = None,
        seed: int = None,
        kind: str = "beta",
    ):
        axes = [
            AxisPrior(kind, lower, upper, a, b)
            for lower, upper in (spec.r2x, spec.r2y, spec.rho)
        ]
        return cls(
            *axes,
            sample_count=(
                DEFAULT_SETTINGS["prior_samples"] if sample_count is None else sample_count
            ),
            seed=DEFAULT_SETTINGS["seed"] if seed is None else seed,
        )

    @classmethod
    def point(cls, t: SensitivityTuple, sample_count: int = None, seed: int = None):
        axes = [AxisPrior("point", value, value) for value in t.as_tuple()]
        return cls(
            *axes,
            sample_count=(
                DEFAULT_SETTINGS["prior_samples"] if sample_count is None else sample_count
            ),
            seed=DEFAULT_SETTINGS["seed"] if seed is None else seed,
        )

    def check_support(self, spec: BoundSpec):
        for name, axis, (lower, upper) in (
            ("r2wx", self.r2wx, spec.r2x),
            ("r2wy", self.r2wy, spec.r2y),
            ("rho_hxhy", self.rho_hxhy, spec.rho),
        ):
            if axis.lower < lower or axis.upper > upper:
                raise DomainError(f"prior: support for {name} lies outside the bounds")

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.column_stack(
            [
                self.r2wx.sample(rng, size),
                self.r2wy.sample(rng, size),
                self.rho_hxhy.sample(rng, size),
            ]
        )


@dataclass(frozen=True)
class PriorResult:
    """Distribution of the adjusted slope induced by a prior."""

    samples: np.ndarray
    acceptance_rate: float
    quantiles: dict
    approximate: bool = False

    @property
    def minimum(self) -> float:
        return float(self.samples.min())

    @property
    def maximum(self) -> float:
        return float(self.samples.max())


def propagate_prior(
    stats: SummaryStats,
    spec: BoundSpec,
    prior: PriorSpec,
    extra: Optional[ExtraConstraints] = None,
    tol: float = DEFAULT_TOL,
) -> PriorResult:
    """Push a prior on the tuple through the slope formula.

    Draws are rejected unless feasible (and inside any extra constraints).
    Deterministic for a fixed prior.seed.
    """
    prior.check_support(spec)
    rng = np.random.default_rng(prior.seed)
    probe_size = DEFAULT_SETTINGS["prior_probe"]
    min_acceptance = DEFAULT_SETTINGS["min_acceptance"]

    def accepted(batch: np.ndarray) -> np.ndarray:
        keep = feasible_mask(stats, spec, batch[:, 0], batch[:, 1], batch[:, 2], tol)
        if extra is not None and extra.active:
            keep &= extra.mask(batch[:, 0], batch[:, 1], batch[:, 2], tol)
        return batch[keep]

    kept = [accepted(prior.draw(rng, probe_size))]
    drawn = probe_size
    count = len(kept[0])
    rate = count / drawn
    if rate < min_acceptance:
        raise PriorIncompatibleError(
            f"prior acceptance rate {rate:.2e} is below {min_acceptance:.0e}"
        )

    while count < prior.sample_count:
        remaining = prior.sample_count - count
        size = min(int(math.ceil(1.1 * remaining / rate)) + 16, 2_000_000)
        batch = accepted(prior.draw(rng, size))
        kept.append(batch)
        drawn += size
        count += len(batch)
        rate = max(count / drawn, min_acceptance)

    points = np.concatenate(kept)[: prior.sample_count]
    samples = beta_values(stats, points[:, 0], points[:, 1], points[:, 2])
    acceptance_rate = count / drawn
    logger.info(
        f"Propagated {prior.sample_count} prior samples "
        f"(acceptance {acceptance_rate:.3f})"
    )
    return PriorResult(
        samples=samples,
        acceptance_rate=acceptance_rate,
        quantiles={q: float(np.quantile(samples, q)) for q in QUANTILE_LEVELS},
        approximate=bool(extra is not None and extra.active),
    )
