import logging
import re
from pathlib import Path
from typing import Optional

import pandas as pd

from .core import Dataset
from .exceptions import DataParseError

logger = logging.getLogger(__name__)

CONFOUNDER_COLUMN = re.compile(r"^w(\d+)$")


def read_csv_text(path: Path) -> pd.DataFrame:
    """Read a CSV with header as untyped text cells."""
    try:
        return pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataParseError(f"{path}: {e}") from e


def confounder_columns(frame: pd.DataFrame) -> list[str]:
    """Columns named w1, w2, ... in numeric order."""
    matches = [
        (int(match.group(1)), column)
        for column in frame.columns
        if (match := CONFOUNDER_COLUMN.match(str(column).strip()))
    ]
    return [column for _, column in sorted(matches)]


def parse_numeric(frame: pd.DataFrame, columns: list[str]) -> pd.DataFrame:
    """Convert the given text columns to floats, naming the first bad cell."""
    parsed = {}
    for column in columns:
        text = frame[column].str.strip()
        values = pd.to_numeric(text, errors="coerce")
        bad = values.isna()
        if bad.any():
            position = int(bad.to_numpy().nonzero()[0][0])
            # Line 1 is the header
            line = position + 2
            raise DataParseError(
                f"line {line}, column {column}: cannot parse {text.iloc[position]!r} as a number",
                line=line,
                column=column,
            )
        parsed[column] = values.astype(float)
    return pd.DataFrame(parsed, index=frame.index)


def load_datasets(
    path: Path, group_by: Optional[str] = None
) -> list[tuple[str, Dataset]]:
    """Load x, y and optional w1..wp columns, split by a moderator column.

    Without group_by the single group is labelled "all".
    """
    frame = read_csv_text(Path(path))
    frame.columns = [str(column).strip() for column in frame.columns]
    for required in ("x", "y"):
        if required not in frame.columns:
            raise DataParseError(f"missing required column {required!r}", line=1, column=required)
    if group_by is not None and group_by not in frame.columns:
        raise DataParseError(f"missing group column {group_by!r}", line=1, column=group_by)

    w_columns = confounder_columns(frame)
    numeric = parse_numeric(frame, ["x", "y"] + w_columns)
    logger.info(f"Loaded {len(numeric)} rows with {len(w_columns)} confounder columns")

    if group_by is None:
        groups = [("all", numeric)]
    else:
        labels = frame[group_by].str.strip()
        groups = [(str(label), numeric[labels == label]) for label in sorted(labels.unique())]

    return [(label, _group_dataset(label, part, w_columns)) for label, part in groups]


def _group_dataset(label: str, part: pd.DataFrame, w_columns: list[str]) -> Dataset:
    """Dataset for one group; W is left out when there are too few rows for it."""
    if w_columns and len(part) <= len(w_columns) + 2:
        logger.warning(
            f"Group {label}: {len(part)} rows are too few for {len(w_columns)} confounder "
            f"columns (need n > p + 2); reporting summary statistics only"
        )
        w_columns = []
    return Dataset(
        part["x"].to_numpy(),
        part["y"].to_numpy(),
        part[w_columns].to_numpy() if w_columns else None,
    )
