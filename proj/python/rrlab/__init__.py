"""Desk-scale constrained RL laboratory.

Thin convenience layer over the `_rrlab` extension: the heavy lifting
(environments, learners, exact oracle, experiment harness) lives in C++;
this module adds dict-friendly wrappers around the JSON string bridge.
"""

import json as _json

from _rrlab import (  # noqa: F401
    CmdpSpec,
    ConfigError,
    ConstrainedSolution,
    InfeasibleError,
    PolicyValuePoint,
    StationaryPolicy,
    ToyEnvConfig,
    __version__,
    composite_reward,
    config_fingerprint,
    constrained_optimum,
    discounted_cost,
    discounted_return,
    dual_update,
    enumerate_policies,
    exact_pareto_front,
    exact_policy_values,
    hypervolume,
    lagrangian_scalarize,
    load_config,
    make_cmdp,
    pareto_index,
    toy_env_build,
)
from _rrlab import compare_baselines as _compare_baselines
from _rrlab import frontier_sweep as _frontier_sweep
from _rrlab import run_experiment as _run_experiment


def load_config_dict(path):
    """Load an experiment config file into its canonical dict form."""
    return _json.loads(load_config(path))


def fingerprint(config):
    """Content hash of a config given as a dict or JSON string."""
    if isinstance(config, dict):
        config = _json.dumps(config)
    return config_fingerprint(config)


def run_experiment(config, workers=1):
    """Run one experiment; returns a list of run-record dicts."""
    if isinstance(config, dict):
        config = _json.dumps(config)
    return [_json.loads(line) for line in _run_experiment(config, workers)]


def compare_baselines(config, workers=1):
    """Rule-based, engagement-only, penalty-shaped and RRL on shared seeds."""
    if isinstance(config, dict):
        config = _json.dumps(config)
    return _json.loads(_compare_baselines(config, workers))


def frontier_sweep(config, workers=1):
    """Weight/threshold sweep; returns one frontier-row dict per cell."""
    if isinstance(config, dict):
        config = _json.dumps(config)
    return _json.loads(_frontier_sweep(config, workers))
