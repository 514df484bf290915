"""DDPG with a meta-learned exploration policy.

Thin wrapper over the C++ core; see `default_config()` for every tunable.
"""

from ._core import (
    Env,
    default_config,
    evaluate_checkpoint,
    run_experiment,
    selftest,
)

__all__ = [
    "Env",
    "default_config",
    "evaluate_checkpoint",
    "run_experiment",
    "selftest",
]
