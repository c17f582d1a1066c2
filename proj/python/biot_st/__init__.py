"""Space-time finite elements for the dynamic Biot model."""

from __future__ import annotations

from collections.abc import Mapping
from typing import Any

from . import _core
from ._core import (
    EXIT_CONFIG_ERROR,
    EXIT_SOLVER_FAILURE,
    EXIT_SUCCESS,
    BiotError,
    ConfigError,
    config_keys,
    dominant_period,
    gauss_legendre,
    gauss_lobatto,
    gauss_radau,
    lame_from_E_nu,
    manufactured_solution,
)

__all__ = [
    "EXIT_CONFIG_ERROR",
    "EXIT_SOLVER_FAILURE",
    "EXIT_SUCCESS",
    "BiotError",
    "ConfigError",
    "benchmark",
    "config_keys",
    "convergence",
    "describe",
    "dominant_period",
    "gauss_legendre",
    "gauss_lobatto",
    "gauss_radau",
    "lame_from_E_nu",
    "manufactured_solution",
    "run",
]


def _entries(options: Mapping[str, Any] | None, kwargs: dict[str, Any]) -> dict[str, str]:
    merged: dict[str, Any] = dict(options or {})
    merged.update(kwargs)
    out = {}
    for key, value in merged.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        out[key] = str(value)
    return out


def describe(options: Mapping[str, Any] | None = None, study: str | None = None, **kwargs: Any) -> str:
    """Effective configuration as one ``key=value`` line."""
    return _core.describe(_entries(options, kwargs), study)


def convergence(options: Mapping[str, Any] | None = None, **kwargs: Any) -> dict[str, Any]:
    """Error norms of the manufactured case per refinement level."""
    return _core.convergence(_entries(options, kwargs))


def benchmark(level: int = 0, options: Mapping[str, Any] | None = None, **kwargs: Any) -> dict[str, Any]:
    """Goal series and extrema of the L-shape benchmark on one level."""
    return _core.benchmark(_entries(options, kwargs), level)


def run(study: str, options: Mapping[str, Any] | None = None, **kwargs: Any) -> int:
    """Runs a study, writes CSV artifacts and returns the exit status."""
    return _core.run(_entries(options, kwargs), study)
