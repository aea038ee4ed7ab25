import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional
from urllib.parse import urlparse

import requests

from . import DEFAULT_SETTINGS
from .core import BoundSpec, ExtraConstraints, SummaryStats
from .exceptions import ConfigError, DomainError
from .tables import FORMATS

logger = logging.getLogger(__name__)

# Keys accepted in a config file, spelled like the long flags
CONFIG_KEYS = {
    "rho-xy",
    "sigma-ratio",
    "r2x",
    "r2y",
    "rho-hxhy",
    "rho-hx-y",
    "rho-x-hy",
    "exclude",
    "samples",
    "seed",
    "resolution",
    "format",
    "out",
    "steps",
    "cases",
    "uniform",
    "beta",
    "group-by",
}


@dataclass
class RunConfig:
    """Everything one CLI run needs, after defaults, config file and flags."""

    subcommand: str
    source: str = "flags"
    output_format: str = DEFAULT_SETTINGS["format"]
    out: Optional[str] = None
    seed: int = DEFAULT_SETTINGS["seed"]
    resolution: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.output_format not in FORMATS:
            raise DomainError(
                f"format: must be one of {', '.join(FORMATS)}, got {self.output_format!r}"
            )
        if self.source not in ("flags", "config", "csv"):
            raise DomainError(f"input source: unknown {self.source!r}")

    def get(self, key: str, default=None):
        value = self.params.get(key)
        return default if value is None else value

    def require(self, key: str):
        value = self.params.get(key)
        if value is None:
            raise DomainError(f"missing required value: --{key}")
        return value

    def stats(self) -> SummaryStats:
        return SummaryStats(self.require("rho-xy"), self.require("sigma-ratio"))

    def bounds(self, default_r2: Optional[tuple] = None) -> BoundSpec:
        r2x = self.get("r2x", default_r2)
        r2y = self.get("r2y", default_r2)
        if r2x is None:
            self.require("r2x")
        if r2y is None:
            self.require("r2y")
        return BoundSpec.from_pairs(
            parse_pair("r2x", r2x),
            parse_pair("r2y", r2y),
            parse_pair("rho-hxhy", self.get("rho-hxhy", (-1.0, 1.0))),
        )

    def extra(self) -> ExtraConstraints:
        hx_y = self.get("rho-hx-y")
        x_hy = self.get("rho-x-hy")
        return ExtraConstraints(
            rho_hx_y=parse_pair("rho-hx-y", hx_y) if hx_y is not None else None,
            rho_x_hy=parse_pair("rho-x-hy", x_hy) if x_hy is not None else None,
        )


def parse_pair(name: str, value) -> tuple[float, float]:
    try:
        lower, upper = value
        return (float(lower), float(upper))
    except (TypeError, ValueError) as e:
        raise DomainError(f"{name}: expected two numbers, got {value!r}") from e


class ConfigLoader:
    """Load a flat JSON config from a local path or an http(s) URL."""

    def __init__(self, timeout: int = DEFAULT_SETTINGS["config_timeout"]):
        self.timeout = timeout
        self.session = requests.Session()
        self.session.headers.update({"Accept": "application/json"})

    def load(self, location: str) -> dict:
        if urlparse(location).scheme in ("http", "https"):
            return self._validate(self._fetch(location), location)
        return self._validate(self._read_local(Path(location)), location)

    def _fetch(self, url: str) -> dict:
        try:
            response = self.session.get(url, timeout=self.timeout)
            response.raise_for_status()
        except requests.RequestException as e:
            logger.warning(f"Failed to fetch remote config: {e}")
            return self._local_copy(url)

        try:
            return response.json()
        except ValueError as e:
            raise ConfigError(f"{url}: not valid JSON: {e}") from e

    def _local_copy(self, url: str) -> dict:
        """Fall back to a file of the same name in the working directory."""
        fallback = Path(Path(urlparse(url).path).name)
        if fallback.name and fallback.exists():
            logger.info(f"Using local config {fallback}")
            return self._read_local(fallback)
        raise OSError(f"config {url} is unreachable and no local copy exists")

    def _read_local(self, path: Path) -> dict:
        text = path.read_text(encoding="utf-8")
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: not valid JSON: {e}") from e

    def _validate(self, data, location: str) -> dict:
        if not isinstance(data, dict):
            raise ConfigError(f"{location}: expected a JSON object")
        unknown = sorted(set(data) - CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"{location}: unknown keys {', '.join(unknown)}")
        for key, value in data.items():
            if isinstance(value, dict):
                raise ConfigError(f"{location}: value for {key!r} must be flat")
        return dict(data)


def build_run_config(
    subcommand: str,
    flags: dict,
    config_location: Optional[str] = None,
    data_path: Optional[str] = None,
    loader: Optional[ConfigLoader] = None,
) -> RunConfig:
    """Merge settings, an optional config file and explicit flags.

    flags maps long flag names (e.g. "rho-xy") to parsed values, None when
    the flag was not given. Flags override the config file.
    """
    if config_location and data_path:
        raise DomainError("exactly one input source: --config and --data are exclusive")

    params = {}
    source = "flags"
    if config_location:
        params.update((loader or ConfigLoader()).load(config_location))
        source = "config"
    elif data_path:
        source = "csv"

    params.update({key: value for key, value in flags.items() if value is not None})
    if data_path:
        params["data"] = data_path

    return RunConfig(
        subcommand=subcommand,
        source=source,
        output_format=params.get("format") or DEFAULT_SETTINGS["format"],
        out=params.get("out"),
        seed=int(params.get("seed", DEFAULT_SETTINGS["seed"])),
        resolution=int(params["resolution"]) if params.get("resolution") is not None else None,
        params=params,
    )
