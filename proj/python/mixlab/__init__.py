"""Python interface to the mixlab C++ core."""

import json as _json

from ._core import (
    ConfigError,
    NumericalError,
    __version__,
    default_cutoff,
    sector_dimension,
)
from . import _core


def _text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def normalize_config(config):
    """Validated configuration with every default filled in, as a dict."""
    return _json.loads(_core.normalize_config(_text(config)))


def hartree_trajectory(config):
    """Dict of lists t, mass1, mass2, energy."""
    return _core.hartree_trajectory(_text(config))


def run_exact(config):
    return _core.run_exact(_text(config))


def run_coherent(config):
    return _core.run_coherent(_text(config))


__all__ = [
    "ConfigError",
    "NumericalError",
    "__version__",
    "default_cutoff",
    "hartree_trajectory",
    "normalize_config",
    "run_coherent",
    "run_exact",
    "sector_dimension",
]
