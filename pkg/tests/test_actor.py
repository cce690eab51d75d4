"""Gaussian policy tests: head semantics, sampling, and the policy-gradient term."""

from __future__ import annotations

import math

import numpy as np
import pytest

from mfac import actor as actor_mod
from mfac import diffnet
from mfac.actor import (
    GaussianPolicy,
    actor_loss_grad,
    log_prob,
    new_policy,
    policy_params,
    policy_params_batch,
    policy_spec,
    sample_action,
)

LN2 = math.log(2.0)


class _FixedNormal:
    """rng stub returning a fixed standard-normal draw."""

    def __init__(self, z: float):
        self.z = z

    def standard_normal(self):
        return self.z


def test_policy_param_count_is_258():
    assert policy_spec().param_count == 258
    rng = np.random.default_rng(0)
    assert new_policy(rng).params.size == 258


def test_zero_params_heads():
    policy = GaussianPolicy(spec=policy_spec(), params=diffnet.zero_params(policy_spec()))
    mu, sigma = policy_params(policy, 0.9)
    assert mu == 0.0
    assert sigma == pytest.approx(LN2 + 1e-5, rel=1e-12)


def test_std_floor_shifts_only_sigma():
    rng = np.random.default_rng(1)
    base = new_policy(rng)
    doubled = GaussianPolicy(spec=base.spec, params=base.params, std_floor=2e-5)
    for x in (-1.3, 0.0, 2.2):
        mu1, s1 = policy_params(base, x)
        mu2, s2 = policy_params(doubled, x)
        assert mu1 == mu2
        assert s2 - s1 == pytest.approx(1e-5, rel=1e-9)


def test_sigma_positive_over_large_sweep():
    rng = np.random.default_rng(2)
    policy = new_policy(rng)
    xs = rng.standard_normal(1_000_000) * 10.0
    _, sigma = policy_params_batch(policy, xs)
    assert np.all(sigma >= policy.std_floor)
    assert np.all(sigma > 0.0)


def test_sigma_never_below_floor_even_for_adversarial_params():
    spec = policy_spec()
    params = diffnet.zero_params(spec)
    params[-1] = -1e6  # std head bias; positivity map underflows to 0
    policy = GaussianPolicy(spec=spec, params=params)
    _, sigma = policy_params(policy, 0.0)
    assert sigma >= policy.std_floor


def test_sample_at_floor_with_zero_draw_returns_mean():
    spec = policy_spec()
    params = diffnet.zero_params(spec)
    params[-1] = -60.0  # softplus(-60) == 0 in float64
    policy = GaussianPolicy(spec=spec, params=params)
    mu, sigma = policy_params(policy, 0.4)
    assert sigma == policy.std_floor
    sample = sample_action(policy, 0.4, _FixedNormal(0.0))
    assert sample.action == mu


def test_sampling_deterministic_per_seed():
    policy = new_policy(np.random.default_rng(3))
    rng1, rng2 = np.random.default_rng(7), np.random.default_rng(7)
    seq_a = [sample_action(policy, 0.1, rng1).action for _ in range(10)]
    seq_b = [sample_action(policy, 0.1, rng2).action for _ in range(10)]
    assert seq_a == seq_b


def test_sample_mean_matches_clt_bound():
    policy = new_policy(np.random.default_rng(4))
    x = 0.35
    mu, sigma = policy_params(policy, x)
    rng = np.random.default_rng(123)
    n = 100_000
    actions = np.array([sample_action(policy, x, rng).action for _ in range(n)])
    assert abs(actions.mean() - mu) < 4.0 * sigma / math.sqrt(n)


def test_sample_log_prob_consistent_with_log_prob_op():
    policy = new_policy(np.random.default_rng(6))
    rng = np.random.default_rng(8)
    for _ in range(20):
        s = sample_action(policy, -0.7, rng)
        assert s.log_prob == pytest.approx(log_prob(policy, -0.7, s.action), rel=1e-12)


def _policy_with_heads(mu: float, sigma: float) -> GaussianPolicy:
    """Zero trunk; output biases chosen so the heads emit exactly (mu, sigma)."""
    spec = policy_spec()
    params = diffnet.zero_params(spec)
    params[-2] = mu
    params[-1] = math.log(math.expm1(sigma - 1e-5))  # softplus inverse
    return GaussianPolicy(spec=spec, params=params)


def test_log_prob_frozen_values():
    # standard normal at the mode and a shifted/scaled case; 40-digit oracle
    standard = _policy_with_heads(0.0, 1.0)
    assert log_prob(standard, 0.3, 0.0) == pytest.approx(-0.9189385332046727, rel=1e-9)
    shifted = _policy_with_heads(1.0, 0.5)
    assert log_prob(shifted, -2.0, 2.0) == pytest.approx(-2.2257913526447274, rel=1e-9)


def test_log_prob_maximal_at_mode():
    policy = new_policy(np.random.default_rng(9))
    x = 0.6
    mu, _ = policy_params(policy, x)
    peak = log_prob(policy, x, mu)
    for a in np.linspace(mu - 3, mu + 3, 41):
        assert log_prob(policy, x, float(a)) <= peak + 1e-15


def test_actor_loss_grad_zero_delta():
    policy = new_policy(np.random.default_rng(10))
    g = actor_loss_grad(policy, 0.2, 1.5, delta=0.0)
    np.testing.assert_array_equal(g, np.zeros_like(policy.params))


def test_actor_loss_grad_mean_head_zero_at_mode():
    policy = new_policy(np.random.default_rng(11))
    x = -0.4
    mu, _ = policy_params(policy, x)
    g = actor_loss_grad(policy, x, mu, delta=0.7)
    _, (gw2, gb2) = diffnet.unpack(policy.spec, g)
    np.testing.assert_array_equal(gw2[0], np.zeros_like(gw2[0]))
    assert gb2[0] == 0.0


def test_actor_loss_grad_matches_finite_difference():
    rng = np.random.default_rng(12)
    x, delta = 0.8, -1.3
    for _ in range(3):
        policy = new_policy(rng)
        a = sample_action(policy, x, rng).action
        g = actor_loss_grad(policy, x, a, delta)

        def loss(p):
            shifted = GaussianPolicy(spec=policy.spec, params=p)
            return -delta * log_prob(shifted, x, a)

        h = 1e-5
        g_fd = np.zeros_like(g)
        for i in range(g.size):
            up, dn = policy.params.copy(), policy.params.copy()
            up[i] += h
            dn[i] -= h
            g_fd[i] = (loss(up) - loss(dn)) / (2 * h)
        scale = max(np.abs(g_fd).max(), 1e-8)
        assert np.abs(g - g_fd).max() / scale < 1e-4


def test_actor_loss_grad_linear_in_delta():
    policy = new_policy(np.random.default_rng(13))
    g1 = actor_loss_grad(policy, 0.1, 0.9, delta=0.37)
    g2 = actor_loss_grad(policy, 0.1, 0.9, delta=0.74)
    np.testing.assert_array_equal(g2, 2.0 * g1)


def test_score_identity_zero_mean_gradient():
    # E_a[d log pi / d psi] = 0 at fixed x; Monte Carlo per-coordinate check.
    policy = new_policy(np.random.default_rng(14))
    x = 0.25
    rng = np.random.default_rng(15)
    n = 100_000
    total = np.zeros_like(policy.params)
    total_sq = np.zeros_like(policy.params)
    for _ in range(n):
        a = sample_action(policy, x, rng).action
        g = actor_loss_grad(policy, x, a, delta=-1.0)  # equals +dlogpi/dpsi
        total += g
        total_sq += g * g
    mean = total / n
    std = np.sqrt(np.maximum(total_sq / n - mean**2, 0.0))
    se = std / math.sqrt(n)
    assert np.all(np.abs(mean) < 5.0 * np.maximum(se, 1e-12))
