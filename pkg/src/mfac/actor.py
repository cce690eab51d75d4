"""Gaussian stochastic policy: state -> N(mean(x), std(x)^2) with one action dim.

The network is a shared tanh trunk feeding a two-row linear output layer; row 0
is the mean head, row 1 the (pre-activation) std head. The std passes through a
positivity map plus an additive exploration floor, so no reachable parameter
vector can produce a degenerate standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diffnet
from .diffnet import Array, NetSpec, sigmoid
from .errors import ContractError, FaultStateError

LOG_2PI = math.log(2.0 * math.pi)

STD_ACTIVATIONS = ("softplus", "sigmoid", "exp")


def policy_spec(input_dim: int = 1, trunk_width: int = 64) -> NetSpec:
    """Shared trunk, two-output head (mean, std pre-activation); 258 params."""
    return NetSpec(input_dim, ((trunk_width, "tanh"),), 2)


@dataclass
class GaussianPolicy:
    spec: NetSpec
    params: Array
    std_floor: float = 1e-5
    std_activation: str = "softplus"

    def __post_init__(self) -> None:
        if self.std_floor <= 0.0:
            raise ContractError("std_floor must be > 0")
        if self.std_activation not in STD_ACTIVATIONS:
            raise ContractError(f"unknown std activation {self.std_activation!r}")


@dataclass(frozen=True)
class ActionSample:
    action: float
    log_prob: float


def new_policy(rng: np.random.Generator, **kwargs) -> GaussianPolicy:
    spec = policy_spec()
    return GaussianPolicy(spec=spec, params=diffnet.init_params(spec, rng), **kwargs)


def _positive(name: str, z: float) -> tuple[float, float]:
    """Positivity map value and derivative at the std head pre-activation."""
    if name == "softplus":
        value = float(np.logaddexp(0.0, z))
        return value, float(sigmoid(z))
    if name == "sigmoid":
        s = float(sigmoid(z))
        return s, s * (1.0 - s)
    e = math.exp(z)
    return e, e


def policy_params(policy: GaussianPolicy, x) -> tuple[float, float]:
    """Mean and standard deviation of the action distribution at state x."""
    out = diffnet.forward(policy.spec, policy.params, x)
    mu = float(out[0])
    sigma, _ = _positive(policy.std_activation, float(out[1]))
    sigma += policy.std_floor
    if not (math.isfinite(mu) and math.isfinite(sigma)):
        raise FaultStateError(f"non-finite policy output mu={mu} sigma={sigma}")
    return mu, sigma


def policy_params_batch(policy: GaussianPolicy, xs: Array) -> tuple[Array, Array]:
    """Vectorized (mu, sigma) over a batch of states."""
    xs = np.asarray(xs, dtype=float)
    out = diffnet.forward_batch(policy.spec, policy.params, xs[:, None])
    mu = out[:, 0]
    pre = out[:, 1]
    if policy.std_activation == "softplus":
        sigma = np.logaddexp(0.0, pre)
    elif policy.std_activation == "sigmoid":
        sigma = sigmoid(pre)
    else:
        sigma = np.exp(pre)
    return mu, sigma + policy.std_floor


def sample_action(policy: GaussianPolicy, x, rng: np.random.Generator) -> ActionSample:
    """Draw a ~ N(mu, sigma^2); consumes exactly one standard normal from rng."""
    mu, sigma = policy_params(policy, x)
    z = rng.standard_normal()
    action = mu + sigma * z
    lp = -math.log(sigma) - 0.5 * LOG_2PI - 0.5 * z * z
    return ActionSample(action=action, log_prob=lp)


def log_prob(policy: GaussianPolicy, x, a: float) -> float:
    mu, sigma = policy_params(policy, x)
    r = (a - mu) / sigma
    return -math.log(sigma) - 0.5 * LOG_2PI - 0.5 * r * r


def actor_loss_grad(policy: GaussianPolicy, x, a: float, delta: float) -> Array:
    """Gradient of -delta * log pi(a | x) in all policy parameters.

    delta is a constant here (no gradient flows into the TD error); the
    upstream vector is pushed through the head outputs: the mean head sees
    d(-delta*logpi)/dmu, the std head additionally picks up the positivity
    map's derivative.
    """
    if not math.isfinite(delta):
        raise ContractError("delta must be finite")
    out = diffnet.forward(policy.spec, policy.params, x)
    mu = float(out[0])
    sigma, dsigma_dpre = _positive(policy.std_activation, float(out[1]))
    sigma += policy.std_floor
    diff = a - mu
    dlogp_dmu = diff / (sigma * sigma)
    dlogp_dsigma = (diff * diff) / sigma**3 - 1.0 / sigma
    upstream = np.array([-delta * dlogp_dmu, -delta * dlogp_dsigma * dsigma_dpre])
    return diffnet.grad_params(policy.spec, policy.params, x, upstream)
