"""Training-loop tests: config gates, step order, truncation, determinism."""

from __future__ import annotations

import inspect
import math

import numpy as np
import pytest

import mfac.trainer as trainer_mod
from mfac.env import LQConfig, LQMeanFieldEnv, MFCGConfig, MFCGMeanFieldEnv
from mfac.errors import ConfigError
from mfac.score import SampleSet
from mfac.trainer import (
    TrainConfig,
    init_state,
    probe_control,
    run_ih_mf_ac,
    run_ih_mfcg_ac,
)

SET1 = LQConfig(c1=0.25, c2=1.5, c3=0.5, c4=0.6, c5=1.0, sigma_vol=0.3, beta=1.0, dt=0.01)


def tiny_cfg(**kw) -> TrainConfig:
    base = dict(
        mode="mfg",
        n_steps=40,
        langevin_iters=5,
        n_particles=8,
        log_interval=10,
        truncation_steps=20,
        seed=3,
        target_mean=0.8,
    )
    base.update(kw)
    return TrainConfig(**base)


# ------------------------------------------------------------------- configs


def test_learning_rate_orderings_enforced():
    with pytest.raises(ConfigError, match="frozen population"):
        tiny_cfg(mode="mfg", lr_score=1e-4)  # not below min(actor, critic)
    with pytest.raises(ConfigError, match="moving with the control"):
        tiny_cfg(mode="mfc", lr_score=1e-6)  # not above max(actor, critic)
    with pytest.raises(ConfigError, match="lr_local_score"):
        tiny_cfg(mode="mfcg")
    with pytest.raises(ConfigError, match="mfcg mode requires"):
        tiny_cfg(mode="mfcg", lr_local_score=1e-7)
    # valid instances construct fine
    tiny_cfg(mode="mfg", lr_score=1e-6)
    tiny_cfg(mode="mfc", lr_score=5e-4)
    tiny_cfg(mode="mfcg", lr_local_score=5e-4)


def test_mode_function_pairing_enforced():
    env = LQMeanFieldEnv(SET1)
    with pytest.raises(ConfigError):
        run_ih_mfcg_ac(env, tiny_cfg(mode="mfg"))
    with pytest.raises(ConfigError):
        run_ih_mf_ac(env, tiny_cfg(mode="mfcg", lr_local_score=5e-4))


def test_zero_steps_returns_initialized_networks_and_no_metrics():
    cfg = tiny_cfg(n_steps=0)
    result = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg)
    assert result.status == "completed"
    assert result.metrics == []
    fresh = init_state(cfg)
    np.testing.assert_array_equal(result.actor.params, fresh.actor.params)
    np.testing.assert_array_equal(result.critic.params, fresh.critic.params)
    np.testing.assert_array_equal(result.score.params, fresh.score.params)


# ---------------------------------------------------------------- step order


def test_step_call_sequence_matches_algorithm_order():
    events: list[str] = []
    run_ih_mf_ac(LQMeanFieldEnv(SET1), tiny_cfg(n_steps=2), trace_hook=events.append)
    per_step = [
        "score_update",
        "mean_field_samples",
        "action",
        "reward",
        "env_step",
        "critic_update",
        "actor_update",
    ]
    assert events == per_step * 2


def test_mfcg_step_sequence_inserts_local_stages():
    cfg = tiny_cfg(mode="mfcg", lr_local_score=5e-4, n_steps=1)
    mf = MFCGConfig(
        c1=0.5, c2=1.5, c3=0.5, c4=0.25, ct1=0.3, ct2=1.25, ct5=0.25,
        sigma_vol=0.5, beta=1.0, dt=0.01,
    )
    events: list[str] = []
    run_ih_mfcg_ac(MFCGMeanFieldEnv(mf), cfg, trace_hook=events.append)
    assert events == [
        "score_update",
        "local_score_update",
        "mean_field_samples",
        "local_mean_field_samples",
        "action",
        "reward",
        "env_step",
        "critic_update",
        "actor_update",
    ]


# ---------------------------------------------------------------- truncation


class _EscapingEnv:
    """Dynamics that jump far outside the truncation bound every step."""

    def __init__(self):
        self.cfg = SET1

    def reward(self, x, a, samples):
        return -0.01

    def step(self, x, a, rng):
        rng.standard_normal()  # keep the documented rng consumption
        return x + 100.0


def test_truncation_clamps_stored_states_only_during_warmup():
    cfg = tiny_cfg(n_steps=0, truncation_steps=3, truncation_bound=5.0)
    st = init_state(cfg)
    env = _EscapingEnv()
    observed = []
    for n in range(1, 7):
        run_ih_mf_ac(env, tiny_cfg(n_steps=n, truncation_steps=3), state=st)
        observed.append(st.x)
    assert all(abs(x) <= 5.0 for x in observed[:3])
    assert all(abs(x) > 5.0 for x in observed[3:])


# -------------------------------------------------------------------- metrics


def test_metric_row_count_is_ceil_steps_over_interval():
    cfg = tiny_cfg(n_steps=25, log_interval=10)
    result = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg)
    assert [row.step for row in result.metrics] == [10, 20, 25]
    assert len(result.metrics) == math.ceil(25 / 10)


def test_abs_mean_error_is_exact_absolute_difference():
    result = run_ih_mf_ac(LQMeanFieldEnv(SET1), tiny_cfg(n_steps=10))
    row = result.metrics[-1]
    assert row.abs_mean_error == abs(row.sample_mean - 0.8)


def test_probe_control_trivial_cases():
    cfg = tiny_cfg(n_steps=0)
    st = init_state(cfg)
    assert probe_control(st.actor, []) == []
    zeroed = st.actor
    zeroed.params[:] = 0.0
    assert probe_control(zeroed, [-1.0, 0.0, 2.0]) == [0.0, 0.0, 0.0]


# ---------------------------------------------------------------- determinism


def test_identical_configs_give_bitwise_identical_metric_traces():
    cfg = tiny_cfg(n_steps=30)
    a = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg)
    b = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg)
    assert a.metrics == b.metrics
    np.testing.assert_array_equal(a.actor.params, b.actor.params)
    np.testing.assert_array_equal(a.state.samples.particles, b.state.samples.particles)


def test_resume_from_state_matches_uninterrupted_run():
    cfg_full = tiny_cfg(n_steps=30)
    full = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg_full)

    cfg_half = tiny_cfg(n_steps=10)
    part = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg_half)
    rest = run_ih_mf_ac(LQMeanFieldEnv(SET1), cfg_full, state=part.state)
    assert part.metrics + rest.metrics == full.metrics
    np.testing.assert_array_equal(rest.actor.params, full.actor.params)


# -------------------------------------------------------------------- faults


class _FaultingEnv:
    def __init__(self, fault_at: int):
        self.calls = 0
        self.fault_at = fault_at

    def reward(self, x, a, samples):
        self.calls += 1
        return float("inf") if self.calls > self.fault_at else -0.01

    def step(self, x, a, rng):
        rng.standard_normal()
        return x


def test_fault_terminates_with_status_and_postmortem_state():
    result = run_ih_mf_ac(_FaultingEnv(fault_at=7), tiny_cfg(n_steps=50))
    assert result.fault_step == 7
    assert result.status == "fault at step 7"
    assert result.state.step == 7  # state preserved for post-mortem
    assert np.all(np.isfinite(result.actor.params))


# ------------------------------------------------------------ module boundary


def test_trainer_has_no_dependency_on_environment_internals():
    source = inspect.getsource(trainer_mod)
    assert "from .env" not in source
    assert "import env" not in source
    assert "LQConfig" not in source
