"""Optimizer stationary-distribution benchmark.

Thin layer over the compiled ``_core`` module. Configuration documents are
plain dicts; they are serialized to JSON and validated by the same schema as
the command-line tool.
"""

import json as _json

from . import _core
from ._core import (
    ArgumentError,
    BoundaryError,
    ConfigError,
    DivergenceError,
    NumericError,
    algorithm_names,
    classify,
    command_names,
    domain,
    evaluate,
    gradient,
    landscape_names,
    mann_whitney_u,
    refine_registry,
    registry,
    run_trajectory,
    stationary_distribution,
    t_test,
)

__all__ = [
    "ArgumentError",
    "BoundaryError",
    "ConfigError",
    "DivergenceError",
    "NumericError",
    "algorithm_names",
    "classify",
    "command_names",
    "domain",
    "evaluate",
    "gradient",
    "landscape_names",
    "mann_whitney_u",
    "refine_registry",
    "registry",
    "run",
    "run_trajectory",
    "stationary_distribution",
    "t_test",
    "validate_config",
]


def validate_config(config):
    """Schema diagnostics for a config dict, one string per problem."""
    return list(_core.validate_config(_json.dumps(config)))


def run(command, config):
    """Runs a CLI command in memory.

    Returns a dict with ``tables`` (parsed JSON tables), ``files`` (name to
    content, nothing is written), ``messages`` and ``exit_code``.
    """
    result = _core.run_command(command, _json.dumps(config))
    result["tables"] = [_json.loads(t) for t in result["tables"]]
    return result
