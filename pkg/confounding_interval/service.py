import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import DEFAULT_SETTINGS
from .core import (
    BoundSpec,
    ConfoundingInterval,
    DataSummary,
    Dataset,
    ExtraConstraints,
    SummaryStats,
    beta_adjusted,
    sign_determined,
    summarize,
)
from .exceptions import EmptyFeasibleSetError
from .oracle import GridConfig, Prop1Report, grid_min_max, ols_beta
from .solver import Family, enumerate_candidates, solve_interval

logger = logging.getLogger(__name__)


@dataclass
class IntervalReport:
    """An interval together with the diagnostics the interval command prints."""

    interval: ConfoundingInterval
    sign_determined: bool
    family_counts: dict = field(default_factory=dict)


@dataclass
class SweepRow:
    l_rho: float
    u_rho: float
    lower: float = math.nan
    upper: float = math.nan
    feasible: bool = True


@dataclass
class GroupReport:
    """Everything from-data reports for one group of rows."""

    label: str
    summary: DataSummary
    ols: Optional[float] = None
    prop1: Optional[Prop1Report] = None


def sweep_pairs(steps: int) -> list[tuple[float, float]]:
    """All (l, u) pairs with l <= u from steps + 1 even values on [-1, 1]."""
    values = np.round(np.linspace(-1.0, 1.0, steps + 1), 12)
    return [
        (float(lower), float(upper))
        for i, lower in enumerate(values)
        for upper in values[i:]
    ]


class AnalysisService:
    """Orchestration shared by the commands."""

    def __init__(self, max_workers: int = 8):
        self.max_workers = max_workers

    def interval(
        self,
        stats: SummaryStats,
        spec: BoundSpec,
        extra: Optional[ExtraConstraints] = None,
        resolution: Optional[int] = None,
    ) -> IntervalReport:
        """Exact interval, or the grid oracle when extra constraints are set."""
        if extra is not None and extra.active:
            cfg = GridConfig(resolution or DEFAULT_SETTINGS["grid_resolution"])
            logger.info(f"Extra constraints set; using the {cfg.resolution}-node grid")
            interval = grid_min_max(stats, spec, cfg, extra).interval
            return IntervalReport(interval, sign_determined(stats, spec))

        interval = solve_interval(stats, spec)
        counts = {family.value: 0 for family in Family}
        if not interval.approximate:
            for candidate in enumerate_candidates(stats, spec):
                counts[candidate.family.value] += 1
        logger.info(f"Interval [{interval.lower:.6g}, {interval.upper:.6g}]")
        return IntervalReport(interval, sign_determined(stats, spec), counts)

    def _sweep_row(self, stats: SummaryStats, spec: BoundSpec, pair) -> SweepRow:
        row = SweepRow(*pair)
        try:
            interval = solve_interval(stats, replace(spec, l_rho=pair[0], u_rho=pair[1]))
        except EmptyFeasibleSetError:
            logger.debug(f"Sweep pair {pair} has an empty feasible set")
            row.feasible = False
            return row
        row.lower = interval.lower
        row.upper = interval.upper
        return row

    def sweep(
        self, stats: SummaryStats, spec: BoundSpec, steps: int = DEFAULT_SETTINGS["sweep_steps"]
    ) -> list[SweepRow]:
        """Exact interval for every rho-bound pair of the sweep lattice, in lattice order."""
        pairs = sweep_pairs(steps)
        rows: dict[int, SweepRow] = {}
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            futures = {
                executor.submit(self._sweep_row, stats, spec, pair): index
                for index, pair in enumerate(pairs)
            }
            for future in as_completed(futures):
                rows[futures[future]] = future.result()

        logger.info(
            f"Swept {len(pairs)} rho-bound pairs "
            f"({sum(not row.feasible for row in rows.values())} infeasible)"
        )
        return [rows[index] for index in range(len(pairs))]

    def summarize_groups(self, groups: list[tuple[str, Dataset]]) -> list[GroupReport]:
        """Summary statistics per group; slope checks when W columns are present."""
        reports = []
        for label, dataset in groups:
            summary = summarize(dataset)
            report = GroupReport(label=label, summary=summary)
            if dataset.p and summary.r2wx < 1.0 and summary.r2wy < 1.0:
                report.ols = ols_beta(dataset)
                report.prop1 = Prop1Report(
                    ols=report.ols,
                    formula=beta_adjusted(summary.stats, summary.sensitivity),
                )
            reports.append(report)
            logger.info(f"Group {label}: n={summary.n}, p={summary.p}")
        return reports
