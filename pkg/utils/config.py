"""
Run configuration for the qpz command.

Values come from, highest first: command-line flags, QPZ_* environment
variables, a flat key=value file read with python-dotenv, built-in defaults.
"""
import logging
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple

from dotenv import dotenv_values

from utils.periods import SeriesSettings

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_FILE = "qpz.env"

# field -> (environment / config-file key, parser)
CONFIG_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "precision_bits": ("QPZ_PRECISION_BITS", int),
    "cache_path": ("QPZ_CACHE", str),
    "c_max": ("QPZ_CMAX", int),
    "b_bound_initial": ("QPZ_BBOUND", int),
    "b_bound_cap": ("QPZ_BBOUND_CAP", int),
    "a_bound_initial": ("QPZ_ABOUND", int),
    "a_bound_cap": ("QPZ_ABOUND_CAP", int),
    "quadrature_tol": ("QPZ_QUADRATURE_TOL", float),
    "series_tol": ("QPZ_SERIES_TOL", float),
}


class ConfigError(ValueError):
    """Invalid configuration value; reported as a usage error."""


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int = 192
    c_max: int = 100000
    b_bound_initial: int = 64
    b_bound_cap: int = 32768
    a_bound_initial: int = 256
    a_bound_cap: int = 65536
    quadrature_tol: float = 1e-8
    series_tol: float = 1e-9
    cache_path: Optional[str] = None
    output_format: str = "text"
    strict_series: bool = False

    def series_settings(self) -> SeriesSettings:
        return SeriesSettings(
            b_bound_initial=self.b_bound_initial,
            b_bound_cap=self.b_bound_cap,
            a_bound_initial=self.a_bound_initial,
            a_bound_cap=self.a_bound_cap,
            series_tol=self.series_tol,
            quadrature_tol=self.quadrature_tol,
            strict=self.strict_series,
        )

    def cache_key_fields(self) -> Dict[str, Any]:
        """Settings that change computed values; output format and cache path do not."""
        return {
            "precision_bits": self.precision_bits,
            "c_max": self.c_max,
            "b_bound_initial": self.b_bound_initial,
            "b_bound_cap": self.b_bound_cap,
            "a_bound_initial": self.a_bound_initial,
            "a_bound_cap": self.a_bound_cap,
            "quadrature_tol": repr(self.quadrature_tol),
            "series_tol": repr(self.series_tol),
            "strict_series": self.strict_series,
        }


def validate_config(config: RunConfig) -> RunConfig:
    """
    Check value ranges.

    Raises:
        ConfigError: If a value is out of range
    """
    if config.precision_bits < 64:
        raise ConfigError(f"precision_bits must be >= 64, got {config.precision_bits}")
    if config.quadrature_tol <= 0 or config.series_tol <= 0:
        raise ConfigError("tolerances must be > 0")
    if config.c_max < 1:
        raise ConfigError(f"c_max must be >= 1, got {config.c_max}")
    if config.b_bound_initial < 0 or config.b_bound_cap < 0:
        raise ConfigError("b bounds must be >= 0")
    if config.a_bound_initial < 1 or config.a_bound_cap < config.a_bound_initial:
        raise ConfigError(f"a bounds must satisfy 1 <= a_bound_initial <= a_bound_cap, "
                          f"got {config.a_bound_initial} and {config.a_bound_cap}")
    if config.output_format not in ("json", "text"):
        raise ConfigError(f"output_format must be json or text, got {config.output_format!r}")
    return config


def _parse_source(values: Mapping[str, Optional[str]], source: str) -> Dict[str, Any]:
    parsed = {}
    for name, (key, parser) in CONFIG_KEYS.items():
        raw = values.get(key)
        if raw is None or raw == "":
            continue
        try:
            parsed[name] = parser(raw)
        except ValueError as e:
            raise ConfigError(f"{key}={raw!r} from {source} is not valid: {e}")
    return parsed


def resolve_config_file(config_file: Optional[str], environ: Mapping[str, str]) -> Optional[Path]:
    """--config, else QPZ_CONFIG, else qpz.env in the working directory if it exists."""
    if config_file:
        path = Path(config_file)
        if not path.is_file():
            raise ConfigError(f"config file {config_file} not found")
        return path
    if environ.get("QPZ_CONFIG"):
        path = Path(environ["QPZ_CONFIG"])
        if not path.is_file():
            raise ConfigError(f"config file {path} (from QPZ_CONFIG) not found")
        return path
    default = Path(DEFAULT_CONFIG_FILE)
    return default if default.is_file() else None


def load_config(flags: Optional[Mapping[str, Any]] = None,
                config_file: Optional[str] = None,
                environ: Optional[Mapping[str, str]] = None) -> RunConfig:
    """
    Build a RunConfig from flags, environment, config file and defaults.

    Args:
        flags: RunConfig field values from the command line; None entries are ignored
        config_file: Explicit config file path
        environ: Environment mapping, defaults to os.environ

    Returns:
        RunConfig: Validated configuration

    Raises:
        ConfigError: If a value cannot be parsed or is out of range
    """
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}

    path = resolve_config_file(config_file, environ)
    if path is not None:
        values.update(_parse_source(dotenv_values(path), str(path)))
        logger.debug("read config file %s", path)

    values.update(_parse_source(environ, "environment"))

    known = {f.name for f in fields(RunConfig)}
    for name, value in (flags or {}).items():
        if value is None:
            continue
        if name not in known:
            raise ConfigError(f"unknown setting {name}")
        values[name] = value

    return validate_config(replace(RunConfig(), **values))
