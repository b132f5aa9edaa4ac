"""Smoke tests for the python bindings: the core operations round-trip and a
small end-to-end experiment runs and reproduces."""

import math

import pytest

import rrlab


def acceptance_toy(threshold_d=2.0):
    cfg = rrlab.ToyEnvConfig()
    cfg.r0 = 1.0
    cfg.c1 = 1.0
    cfg.reward_emotional_engage = 1.0
    cfg.p_emotional = [[0.1, 0.1], [0.9, 0.2]]
    cfg.discount = 0.95
    cfg.threshold_d = threshold_d
    return rrlab.toy_env_build(cfg)


def tiny_experiment_config():
    return {
        "version": 1,
        "name": "smoke",
        "environment": {
            "kind": "toy",
            "r0": 1.0,
            "c1": 1.0,
            "reward_emotional_engage": 1.0,
            "p_emotional": [[0.1, 0.1], [0.9, 0.2]],
            "discount": 0.95,
            "threshold_d": 2.0,
        },
        "agent": {
            "kind": "rrl",
            "weights": {"w_eng": 1.0, "w_emo": 0.0, "w_safety": 0.0},
            "dual_step_size": 0.05,
            "iterations": 10,
            "batch_size": 2,
            "learning_rate": 0.2,
        },
        "horizon": 40,
        "seeds": [1, 2],
        "evaluation": {"episodes": 10},
    }


def test_version():
    assert rrlab.__version__


def test_exact_values_on_symmetric_toy():
    cfg = rrlab.ToyEnvConfig()  # symmetric 0.5 transitions, gamma 0.95
    spec = rrlab.toy_env_build(cfg)
    always_engage = rrlab.StationaryPolicy.deterministic([0, 0], 2)
    values, costs = rrlab.exact_policy_values(spec, always_engage)
    # v(n) - v(e) = 1 and v(n) + v(e) = 1/(1 - gamma)
    assert values[0] == pytest.approx(10.5, abs=1e-9)
    assert values[1] == pytest.approx(9.5, abs=1e-9)
    assert costs[0] > 0.0


def test_make_cmdp_validates():
    with pytest.raises(rrlab.ConfigError):
        rrlab.make_cmdp(
            transition=[[[0.6, 0.3]], [[0.5, 0.5]]],  # first row sums to 0.9
            reward=[[0.0], [0.0]],
            cost=[[0.0], [0.0]],
            discount=0.9,
        )


def test_constrained_optimum_matches_frozen_oracle():
    solution = rrlab.constrained_optimum(acceptance_toy(2.0))
    assert solution.optimal_value == pytest.approx(18.430939226519335, abs=1e-9)
    assert solution.optimal_cost == pytest.approx(2.0, abs=1e-9)
    assert solution.lambda_star == pytest.approx(0.26519337016588906, abs=1e-6)
    assert solution.is_mixture
    assert solution.feasible_actions == [0, 1]
    assert solution.infeasible_actions == [0, 0]


def test_infeasible_budget_raises():
    spec = rrlab.make_cmdp(
        transition=[[[0.5, 0.5], [0.5, 0.5]], [[0.5, 0.5], [0.5, 0.5]]],
        reward=[[1.0, 0.0], [0.0, 0.0]],
        cost=[[1.0, 1.0], [1.0, 1.0]],
        discount=0.9,
        threshold_d=0.1,
    )
    with pytest.raises(rrlab.InfeasibleError):
        rrlab.constrained_optimum(spec)


def test_pareto_front_and_index():
    front = rrlab.exact_pareto_front(acceptance_toy())
    assert [p.actions for p in front] == [[0, 1], [0, 0]]
    costs = [p.value_cost for p in front]
    assert costs == sorted(costs)

    idx = rrlab.pareto_index([[3, 1, 1], [1, 3, 1], [0.5, 0.5, 0.5]], [0, 0, 0])
    assert idx[2] == 0.0
    assert sum(idx) == pytest.approx(1.0, abs=1e-9)


def test_dual_update_and_composite():
    assert rrlab.dual_update(0.5, 0.1, 1.0, 2.0) == pytest.approx(0.6)
    assert rrlab.dual_update(0.05, 0.1, 1.0, 0.0) == 0.0
    assert rrlab.composite_reward(0.5, -1.0, True, w_eng=2, w_emo=1, w_safety=3) == -3.0


def test_run_experiment_reproduces():
    config = tiny_experiment_config()
    records = rrlab.run_experiment(config)
    assert len(records) == 2
    for record in records:
        assert record["fingerprint"] == rrlab.fingerprint(record["config"])
        assert all(l >= 0.0 for l in record["train"]["lambda"])
        assert len(record["train"]["mean_return"]) == 10
        assert 0.0 <= record["metrics"]["violation_probability"] <= 1.0

    again = rrlab.run_experiment(config, workers=2)
    for a, b in zip(records, again):
        a.pop("wall_clock_seconds")
        b.pop("wall_clock_seconds")
    assert records == again


def test_compare_and_sweep():
    config = tiny_experiment_config()
    table = rrlab.compare_baselines(config)
    agents = [row["agent"] for row in table]
    assert agents == ["rule_based", "engagement_only", "penalty_shaped", "rrl"]

    config["sweep"] = {"threshold_d": [0.5, 2.0]}
    rows = rrlab.frontier_sweep(config)
    assert len(rows) == 2
    assert sum(row["pareto_index"] for row in rows) <= 1.0 + 1e-9
