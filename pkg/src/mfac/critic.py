"""State-value network with one-step TD target/error and the semi-gradient loss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diffnet
from .diffnet import Array, NetSpec
from .errors import ContractError

def critic_spec(input_dim: int = 1, width: int = 128) -> NetSpec:
    """Single ELU hidden layer; 385 parameters at the default sizes."""
    return NetSpec(input_dim, ((width, "elu"),), 1)


@dataclass
class CriticNet:
    spec: NetSpec
    params: Array


def new_critic(rng: np.random.Generator) -> CriticNet:
    spec = critic_spec()
    return CriticNet(spec=spec, params=diffnet.init_params(spec, rng))


def value(critic: CriticNet, x) -> float:
    return float(diffnet.forward(critic.spec, critic.params, x)[0])


def td_target(r: float, gamma: float, v_next: float) -> float:
    """Bootstrapped target r + gamma * v_next; v_next is a constant downstream."""
    if not 0.0 < gamma < 1.0:
        raise ContractError(f"discount gamma must lie in (0, 1), got {gamma}")
    return r + gamma * v_next


def td_error(y: float, v_cur: float) -> float:
    if not (math.isfinite(y) and math.isfinite(v_cur)):
        raise ContractError("TD inputs must be finite")
    return y - v_cur


def critic_loss_grad(critic: CriticNet, x, delta: float) -> Array:
    """Semi-gradient of the squared TD error: -2 * delta * dV/dtheta at x.

    Only the current-state value carries gradient; the bootstrapped target is
    frozen, so no term through V(x') appears.
    """
    return diffnet.grad_params_scalar(critic.spec, critic.params, x, -2.0 * delta)
