import logging

import numpy as np

from . import DEFAULT_SETTINGS
from .core import BoundSpec, SummaryStats, beta_adjusted, summarize
from .oracle import (
    GridConfig,
    grid_min_max,
    ols_beta,
    projection_identities,
    random_feasible_tuple,
    random_spec,
    random_stats,
    synthesize_data,
)
from .solver import solve_interval

logger = logging.getLogger(__name__)

# Published case study: slope of y on x with R^2_wx in [0.1, 0.5]
CASE_STUDY_STATS = SummaryStats(-0.11, 42.94)
CASE_STUDY_R2X = (0.1, 0.5)
CASE_STUDY_TARGETS = {
    (-1.0, 1.0): (-36.60, 17.71),
    (0.0, 1.0): (-36.60, -5.25),
}
# Upper R^2_wy bound as stated in the text and in the sweep caption
CASE_STUDY_UY2 = {"text": 0.2, "caption": 0.5}
REPORTED_DIGITS_TOL = 0.01

CONTAINMENT_TOL = 1e-9
SLOPE_IDENTITY_TOL = 1e-8
ROUND_TRIP_TOL = 1e-10


def _result(check: str, passed: bool, detail: str) -> dict:
    status = "passed" if passed else "FAILED"
    log = logger.info if passed else logger.error
    log(f"{check} {status}: {detail}")
    return {"check": check, "passed": bool(passed), "detail": detail}


def _nested_coarse(resolution: int) -> int:
    """Coarser resolution whose lattice is a subset of the given one."""
    return (resolution - 1) // 2 + 1


class OracleChecker:
    """Cross-check the exact solver against independent constructions.

    Each check returns a dict with:
    - check: str
    - passed: bool
    - detail: str
    """

    def __init__(
        self,
        cases: int = DEFAULT_SETTINGS["verify_cases"],
        seed: int = DEFAULT_SETTINGS["seed"],
        resolution: int = DEFAULT_SETTINGS["grid_resolution"],
    ):
        self.cases = cases
        self.seed = seed
        # Odd resolutions keep the halved lattice nested inside the full one
        self.resolution = resolution if resolution % 2 else resolution + 1

    def run_all(self) -> list[dict]:
        return [
            self.check_case_study(),
            self.check_grid_equivalence(),
            self.check_slope_identity(),
            self.check_round_trip(),
        ]

    def check_case_study(self) -> dict:
        """Which published R^2_wy bound reproduces the published endpoints."""
        reproduced = []
        for label, u_y2 in CASE_STUDY_UY2.items():
            matches = True
            for rho_bounds, (lower, upper) in CASE_STUDY_TARGETS.items():
                spec = BoundSpec.from_pairs(CASE_STUDY_R2X, (0.0, u_y2), rho_bounds)
                interval = solve_interval(CASE_STUDY_STATS, spec)
                logger.debug(
                    f"Case study ({label}, rho in {rho_bounds}): "
                    f"[{interval.lower:.4f}, {interval.upper:.4f}]"
                )
                matches &= (
                    abs(interval.lower - lower) <= REPORTED_DIGITS_TOL
                    and abs(interval.upper - upper) <= REPORTED_DIGITS_TOL
                )
            if matches:
                reproduced.append(f"{label} (u_y2={u_y2:g})")

        detail = (
            f"published endpoints reproduced by {', '.join(reproduced)}"
            if reproduced
            else "no published bound set reproduces the endpoints"
        )
        return _result("case_study", bool(reproduced), detail)

    def check_grid_equivalence(self) -> dict:
        """Grid intervals lie inside the exact one and approach it as the grid refines."""
        rng = np.random.default_rng(self.seed)
        fine_cfg = GridConfig(self.resolution)
        coarse_cfg = GridConfig(_nested_coarse(self.resolution))
        failures = []
        max_gap = 0.0
        for case in range(self.cases):
            stats = random_stats(rng)
            spec = random_spec(stats, rng)
            exact = solve_interval(stats, spec)
            fine = grid_min_max(stats, spec, fine_cfg).interval
            coarse = grid_min_max(stats, spec, coarse_cfg).interval

            scale = CONTAINMENT_TOL * max(1.0, abs(exact.lower), abs(exact.upper))
            if fine.lower < exact.lower - scale or fine.upper > exact.upper + scale:
                failures.append(f"case {case}: grid escapes the exact interval")
            fine_gap = max(fine.lower - exact.lower, exact.upper - fine.upper)
            coarse_gap = max(coarse.lower - exact.lower, exact.upper - coarse.upper)
            if fine_gap > coarse_gap + scale:
                failures.append(f"case {case}: gap grew from {coarse_gap:.3g} to {fine_gap:.3g}")
            max_gap = max(max_gap, fine_gap)

        detail = (
            f"{self.cases} cases at resolution {self.resolution}, max gap {max_gap:.3g}"
            if not failures
            else "; ".join(failures[:5])
        )
        return _result("grid_equivalence", not failures, detail)

    def check_slope_identity(self) -> dict:
        """Least-squares slope on synthesized data equals the closed form."""
        rng = np.random.default_rng(self.seed + 1)
        worst = 0.0
        worst_identity = 0.0
        for case in range(self.cases):
            stats = random_stats(rng)
            t = random_feasible_tuple(stats, rng)
            d = synthesize_data(stats, t, p=2, seed=self.seed + case)
            worst = max(worst, abs(ols_beta(d) - beta_adjusted(stats, t)))
            identities = projection_identities(d)
            worst_identity = max(
                worst_identity,
                identities.decomposition_residual,
                identities.slope_residual,
            )

        passed = worst < SLOPE_IDENTITY_TOL and worst_identity < SLOPE_IDENTITY_TOL
        return _result(
            "slope_identity",
            passed,
            f"max slope discrepancy {worst:.3g}, max identity residual {worst_identity:.3g}",
        )

    def check_round_trip(self) -> dict:
        """summarize(synthesize_data(stats, t)) gives back stats and t."""
        rng = np.random.default_rng(self.seed + 2)
        worst = 0.0
        for case in range(self.cases):
            p = (1, 2, 5)[case % 3]
            stats = random_stats(rng)
            t = random_feasible_tuple(stats, rng, p=p)
            s = summarize(synthesize_data(stats, t, p=p, seed=self.seed + case))
            worst = max(
                worst,
                abs(s.rho_xy - stats.rho_xy),
                abs(s.sigma_ratio - stats.sigma_ratio) / stats.sigma_ratio,
                abs(s.r2wx - t.r2wx),
                abs(s.r2wy - t.r2wy),
                abs(s.rho_hxhy - t.rho_hxhy),
            )

        return _result(
            "round_trip", worst < ROUND_TRIP_TOL, f"max deviation {worst:.3g}"
        )
