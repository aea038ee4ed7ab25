import logging
import math
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from . import DEFAULT_SETTINGS
from .checks import OracleChecker
from .config import RunConfig, parse_pair
from .datasets import load_datasets
from .exceptions import ConfoundingIntervalError, DomainError, EmptyFeasibleSetError
from .oracle import GridConfig
from .region import SignificanceRange, necessary_region
from .service import AnalysisService
from .solver import PriorSpec, propagate_prior
from .tables import (
    checks_frame,
    describe_inputs,
    emit,
    interval_frame,
    interval_title,
    prior_frame,
    region_frame,
    summary_row,
    sweep_frame,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_EMPTY = 3
EXIT_IO = 4

# R^2 box used by region when no bounds are given
REGION_DEFAULT_R2 = (0.0, 0.99)


@dataclass
class CommandResult:
    """Result of one subcommand run."""

    success: bool
    command: str
    exit_code: int = EXIT_OK
    output: str = ""
    error: str = ""


class Command:
    """Base class: subclasses build the output text in execute()."""

    name = ""

    def __init__(self, config: RunConfig, service: AnalysisService = None):
        self.config = config
        self.service = service or AnalysisService()
        self.failed = False

    def execute(self) -> str:
        raise NotImplementedError

    def emit(self, frame: pd.DataFrame, title: str = None, notes=()) -> str:
        return emit(frame, self.config.output_format, title=title, notes=notes)

    def run(self) -> CommandResult:
        try:
            output = self.execute()
            if self.config.out:
                path = Path(self.config.out)
                path.write_text(output, encoding="utf-8", newline="\n")
                logger.info(f"Wrote {self.name} output to {path}")
                output = ""
        except EmptyFeasibleSetError as e:
            return self._failure(EXIT_EMPTY, f"empty feasible set: {e}")
        except ConfoundingIntervalError as e:
            return self._failure(EXIT_INVALID, str(e))
        except OSError as e:
            return self._failure(EXIT_IO, str(e))
        except (TypeError, ValueError) as e:
            return self._failure(EXIT_INVALID, f"invalid value: {e}")

        if self.failed:
            return CommandResult(
                success=False,
                command=self.name,
                exit_code=EXIT_CHECK_FAILED,
                output=output,
                error="verification failed",
            )
        return CommandResult(success=True, command=self.name, output=output)

    def _failure(self, exit_code: int, message: str) -> CommandResult:
        logger.error(message)
        return CommandResult(
            success=False, command=self.name, exit_code=exit_code, error=message
        )


class IntervalCommand(Command):
    name = "interval"

    def execute(self) -> str:
        stats = self.config.stats()
        spec = self.config.bounds()
        report = self.service.interval(
            stats, spec, self.config.extra(), self.config.resolution
        )
        notes = [describe_inputs(stats, spec)]
        if report.family_counts:
            families = ", ".join(
                f"{family}: {count}" for family, count in report.family_counts.items()
            )
            notes.append(
                f"Surviving candidates: {report.interval.candidate_count} ({families})"
            )
        notes.append(
            "Sign of the adjusted slope is determined"
            if report.sign_determined
            else "Sign of the adjusted slope is not determined"
        )
        return self.emit(
            interval_frame(report.interval, report.sign_determined),
            title=interval_title(report.interval),
            notes=notes,
        )


class SweepCommand(Command):
    name = "sweep"

    def execute(self) -> str:
        stats = self.config.stats()
        spec = self.config.bounds()
        steps = int(self.config.get("steps", DEFAULT_SETTINGS["sweep_steps"]))
        if steps < 1:
            raise DomainError(f"steps: must be a positive integer, got {steps}")
        rows = self.service.sweep(stats, spec, steps)
        return self.emit(
            sweep_frame(rows),
            title="Confounding intervals by bounds on rho_hxhy",
            notes=[describe_inputs(stats, spec)],
        )


class FromDataCommand(Command):
    name = "from-data"

    def execute(self) -> str:
        path = self.config.require("data")
        groups = load_datasets(Path(path), self.config.get("group-by"))
        reports = self.service.summarize_groups(groups)

        rows = []
        for report in reports:
            row = summary_row(report.label, report.summary)
            if report.summary.p:
                row.update(
                    {
                        "ols_beta": report.ols if report.ols is not None else math.nan,
                        "formula_beta": report.prop1.formula if report.prop1 else math.nan,
                        "discrepancy": report.prop1.discrepancy if report.prop1 else math.nan,
                    }
                )
            rows.append(row)

        notes = []
        if any(report.summary.p for report in reports):
            notes.append(
                "Measured r2wx and r2wy are lower bounds (l_x2, l_y2) for any "
                "larger confounder set containing the measured columns"
            )
        return self.emit(pd.DataFrame(rows), title=f"Summary of {path}", notes=notes)


class RegionCommand(Command):
    name = "region"

    def execute(self) -> str:
        stats = self.config.stats()
        spec = self.config.bounds(default_r2=REGION_DEFAULT_R2)
        sig = SignificanceRange(
            *parse_pair("exclude", self.config.get("exclude", (-math.inf, math.inf)))
        )
        cfg = GridConfig(self.config.resolution or DEFAULT_SETTINGS["region_resolution"])
        cloud = necessary_region(stats, spec, sig, cfg, self.config.extra())
        return self.emit(
            region_frame(cloud),
            title=(
                f"{len(cloud)} realizable tuples give a slope outside "
                f"[{sig.lower:g}, {sig.upper:g}]"
            ),
            notes=[describe_inputs(stats, spec)],
        )


class PriorCommand(Command):
    name = "prior"

    def execute(self) -> str:
        stats = self.config.stats()
        spec = self.config.bounds()
        samples = int(self.config.get("samples", DEFAULT_SETTINGS["prior_samples"]))
        if samples < 1:
            raise DomainError(f"samples: must be a positive integer, got {samples}")
        shape = self.config.get("beta")
        if shape is not None:
            a, b = parse_pair("beta", shape)
            prior = PriorSpec.beta(spec, a, b, samples, self.config.seed)
        else:
            prior = PriorSpec.uniform(spec, samples, self.config.seed)

        result = propagate_prior(stats, spec, prior, self.config.extra())
        notes = [describe_inputs(stats, spec)]
        if result.approximate:
            notes.append("Computed under additional fitted-value constraints")
        return self.emit(
            prior_frame(result),
            title="Distribution of the adjusted slope under the prior",
            notes=notes,
        )


class VerifyCommand(Command):
    name = "verify"

    def execute(self) -> str:
        checker = OracleChecker(
            cases=int(self.config.get("cases", DEFAULT_SETTINGS["verify_cases"])),
            seed=self.config.seed,
            resolution=self.config.resolution or DEFAULT_SETTINGS["grid_resolution"],
        )
        results = checker.run_all()
        self.failed = not all(result["passed"] for result in results)
        return self.emit(checks_frame(results), title="Oracle checks")


COMMANDS = {
    command.name: command
    for command in (
        IntervalCommand,
        SweepCommand,
        FromDataCommand,
        RegionCommand,
        PriorCommand,
        VerifyCommand,
    )
}
