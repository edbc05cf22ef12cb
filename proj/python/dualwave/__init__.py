"""Stochastic pilot-wave simulator."""

import json
from pathlib import Path

from ._core import (
    ConfigError,
    DomainError,
    ModelError,
    NumericError,
    canonical_config,
    config_hash,
    format_number,
    physical_arithmetic,
    run,
    sha256_hex,
    version,
    write,
)

__version__ = version()


def load(path):
    """Read a configuration file and return its canonical text."""
    return canonical_config(Path(path).read_text())


def summary(result):
    """Parsed summary.json of a result returned by run()."""
    return json.loads(result["files"]["summary.json"])


__all__ = [
    "ConfigError",
    "DomainError",
    "ModelError",
    "NumericError",
    "canonical_config",
    "config_hash",
    "format_number",
    "load",
    "physical_arithmetic",
    "run",
    "sha256_hex",
    "summary",
    "version",
    "write",
]
