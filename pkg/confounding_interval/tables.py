"""
Result tables and their text emissions.

Every result is first laid out as a pandas DataFrame, then emitted as a
human table, CSV or JSON. Machine formats carry 12 significant digits.
"""

import io
import json
import math
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from . import DEFAULT_SETTINGS
from .core import BoundSpec, ConfoundingInterval, DataSummary, SummaryStats
from .exceptions import DomainError
from .region import RegionCloud

FORMATS = ("table", "csv", "json")
DIGITS = DEFAULT_SETTINGS["machine_digits"]
DECIMALS = DEFAULT_SETTINGS["table_decimals"]

_NON_FINITE = {"inf": math.inf, "-inf": -math.inf, "nan": math.nan}


def format_number(value: float, digits: int = DIGITS) -> str:
    """Decimal text with the given significant digits; inf/-inf/nan spelled out."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}g}"


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if math.isfinite(value):
            return float(format_number(value))
        return format_number(value)
    return value


def emit(
    frame: pd.DataFrame,
    fmt: str,
    title: Optional[str] = None,
    notes: Iterable[str] = (),
) -> str:
    """Render a frame; title and notes only appear in the human table."""
    if fmt == "csv":
        return frame.to_csv(
            index=False, float_format=f"%.{DIGITS}g", na_rep="nan", lineterminator="\n"
        )
    if fmt == "json":
        records = [
            {key: _json_value(value) for key, value in row.items()}
            for row in frame.to_dict(orient="records")
        ]
        return json.dumps(records, sort_keys=True, indent=2) + "\n"
    if fmt != "table":
        raise DomainError(f"format: must be one of {', '.join(FORMATS)}, got {fmt!r}")

    lines = [title] if title else []
    if frame.empty:
        lines.append("(no rows)")
    else:
        lines.append(
            frame.to_string(index=False, float_format=lambda v: f"{v:.{DECIMALS}f}")
        )
    lines.extend(notes)
    return "\n".join(lines) + "\n"


def read_table(text: str, fmt: str) -> pd.DataFrame:
    """Parse a CSV or JSON emission back into a frame."""
    if fmt == "csv":
        return pd.read_csv(
            io.StringIO(text),
            keep_default_na=False,
            na_values=["nan"],
            float_precision="round_trip",
        )
    if fmt == "json":
        records = json.loads(text)
        return pd.DataFrame(
            [
                {
                    key: _NON_FINITE.get(value, value) if isinstance(value, str) else value
                    for key, value in record.items()
                }
                for record in records
            ]
        )
    raise DomainError(f"format: only csv and json can be read back, got {fmt!r}")


def interval_frame(
    interval: ConfoundingInterval, sign_determined: bool
) -> pd.DataFrame:
    rows = []
    for endpoint, beta, witness in (
        ("lower", interval.lower, interval.argmin_tuple),
        ("upper", interval.upper, interval.argmax_tuple),
    ):
        rows.append(
            {
                "endpoint": endpoint,
                "beta": beta,
                "r2wx": witness.r2wx,
                "r2wy": witness.r2wy,
                "rho_hxhy": witness.rho_hxhy,
                "approximate": interval.approximate,
                "candidate_count": interval.candidate_count,
                "sign_determined": sign_determined,
            }
        )
    return pd.DataFrame(rows)


def interval_title(interval: ConfoundingInterval) -> str:
    label = "Approximate confounding interval" if interval.approximate else "Confounding interval"
    return f"{label}: [{interval.lower:.{DECIMALS}f}, {interval.upper:.{DECIMALS}f}]"


def sweep_frame(rows) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "l_rho": row.l_rho,
                "u_rho": row.u_rho,
                "lower": row.lower,
                "upper": row.upper,
                "feasible": row.feasible,
            }
            for row in rows
        ],
        columns=["l_rho", "u_rho", "lower", "upper", "feasible"],
    )


def region_frame(cloud: RegionCloud) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "r2wx": cloud.r2wx,
            "r2wy": cloud.r2wy,
            "rho_hxhy": cloud.rho_hxhy,
            "beta": cloud.beta,
        }
    )


def prior_frame(result) -> pd.DataFrame:
    rows = [(f"q{level * 100:g}", value) for level, value in result.quantiles.items()]
    rows += [
        ("minimum", result.minimum),
        ("maximum", result.maximum),
        ("acceptance_rate", result.acceptance_rate),
        ("samples", float(len(result.samples))),
    ]
    return pd.DataFrame(rows, columns=["statistic", "value"])


def summary_row(group: str, summary: DataSummary) -> dict:
    row = {
        "group": group,
        "n": summary.n,
        "p": summary.p,
        "rho_xy": summary.rho_xy,
        "sigma_x": summary.sigma_x,
        "sigma_y": summary.sigma_y,
        "sigma_ratio": summary.sigma_ratio,
    }
    if summary.p:
        row.update(
            {
                "r2wx": summary.r2wx,
                "r2wy": summary.r2wy,
                "rho_hxhy": summary.rho_hxhy,
                "degenerate": summary.degenerate,
            }
        )
    return row


def checks_frame(results: list[dict]) -> pd.DataFrame:
    return pd.DataFrame(results, columns=["check", "passed", "detail"])


def describe_inputs(stats: SummaryStats, spec: BoundSpec) -> str:
    return (
        f"rho_xy={stats.rho_xy:g}, sigma_y/sigma_x={stats.sigma_ratio:g}, "
        f"R2_wx in [{spec.l_x2:g}, {spec.u_x2:g}], "
        f"R2_wy in [{spec.l_y2:g}, {spec.u_y2:g}], "
        f"rho_hxhy in [{spec.l_rho:g}, {spec.u_rho:g}]"
    )
