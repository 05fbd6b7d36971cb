"""Python bindings for the jumpsde toolkit."""

import json

from ._jumpsde import (
    Error,
    Model,
    builtin,
    builtin_names,
    eval_expr,
    explosion_probability,
    feynman_kac,
    generator,
    model_from_scenario,
    normalize_scenario,
    simulate,
    wasserstein_bounded,
)
from ._jumpsde import check_drift_ergodicity as _check_drift_ergodicity


def check_drift_ergodicity(model, V="abs2", count=500, radius=5.0, seed=0):
    """Drift condition report as a dict (same schema as the CLI's check.json entries)."""
    return json.loads(_check_drift_ergodicity(model, V, count, radius, seed))


__all__ = [
    "Error",
    "Model",
    "builtin",
    "builtin_names",
    "check_drift_ergodicity",
    "eval_expr",
    "explosion_probability",
    "feynman_kac",
    "generator",
    "model_from_scenario",
    "normalize_scenario",
    "simulate",
    "wasserstein_bounded",
]
