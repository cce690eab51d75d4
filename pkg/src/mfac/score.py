"""Stein-score representation of the mean field and Langevin sample generation.

The mean-field distribution is carried implicitly by a network approximating
the score (gradient of the log density). One online score-matching step fits it
to the current state sample; Langevin Monte Carlo then turns the score into a
set of k particles whose empirical statistics stand in for the measure itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import diffnet
from .diffnet import AdamState, Array, NetSpec
from .errors import ContractError, FaultStateError


def score_spec(dim: int = 1, width: int = 128) -> NetSpec:
    """Single tanh hidden layer, matching input/output dims; 385 params at d=1."""
    return NetSpec(dim, ((width, "tanh"),), dim)


@dataclass
class ScoreNet:
    spec: NetSpec
    params: Array


def new_score(rng: np.random.Generator) -> ScoreNet:
    spec = score_spec()
    return ScoreNet(spec=spec, params=diffnet.init_params(spec, rng))


@dataclass(frozen=True)
class SampleSet:
    """k mean-field particles (d=1); the concrete stand-in for the measure."""

    particles: Array

    def __post_init__(self) -> None:
        particles = np.asarray(self.particles, dtype=float)
        if particles.ndim != 1 or particles.size < 1:
            raise ContractError("particles must be a non-empty 1-D array")
        object.__setattr__(self, "particles", particles)

    @property
    def k(self) -> int:
        return self.particles.size


def empirical_mean(samples: SampleSet) -> float:
    return float(np.mean(samples.particles))


def empirical_variance(samples: SampleSet) -> float:
    """Second central sample moment (divides by k)."""
    return float(np.var(samples.particles))


def score_step(
    score: ScoreNet, x, lr: float, adam: AdamState
) -> tuple[ScoreNet, AdamState, float]:
    """One online score-matching update at the current state sample.

    The loss is tr(d Sigma/dx)(x) + 0.5*||Sigma(x)||^2; a single Adam step is
    applied to its exact parameter gradient. The loss value is returned for
    logging regardless of lr (lr=0 reports the loss without moving).
    """
    loss, grad = diffnet.grad_params_of_score_loss(score.spec, score.params, x)
    new_params, new_adam = diffnet.adam_update(score.params, grad, adam, lr)
    return ScoreNet(spec=score.spec, params=new_params), new_adam, loss


def langevin_sample(
    score: ScoreNet,
    warm_start: SampleSet,
    eps: float,
    n_iter: int,
    rng: np.random.Generator,
) -> SampleSet:
    """Unadjusted Langevin chains: x <- x + (eps/2)*Sigma(x) + sqrt(eps)*z.

    Each of the k particles evolves as an independent chain for n_iter steps.
    The entire noise block of shape (n_iter, k) is drawn from rng up front and
    particle i consumes column i, so the result is identical whether particles
    are advanced serially or in parallel, and rng is consumed exactly once per
    call in a fixed order.
    """
    if eps <= 0.0:
        raise ContractError("langevin eps must be > 0")
    if n_iter < 0:
        raise ContractError("n_iter must be >= 0")
    x = warm_start.particles.copy()
    if n_iter == 0:
        return SampleSet(x)
    noise = rng.standard_normal((n_iter, x.size))
    half, root = 0.5 * eps, math.sqrt(eps)
    noise *= root

    shapes = score.spec.layer_shapes
    # overflow inside a diverging chain is caught by the finiteness check below
    with np.errstate(over="ignore", invalid="ignore"):
        if score.spec.input_dim == 1 and len(shapes) == 2 and shapes[0][2] == "tanh":
            # Hot path for the default 1 -> H (tanh) -> 1 architecture: batched
            # over particles, with the hidden affine map expressed as one GEMM
            # against [x | 1] so the bias costs no separate pass.
            (w1, b1), (w2, b2) = diffnet.unpack(score.spec, score.params)
            h = w1.shape[0]
            w_aug = np.empty((2, h))
            w_aug[0] = w1[:, 0]
            w_aug[1] = b1
            x_aug = np.empty((x.size, 2))
            x_aug[:, 1] = 1.0
            hidden = np.empty((x.size, h))
            w2v, b2v = w2[0], float(b2[0])
            for m in range(n_iter):
                x_aug[:, 0] = x
                np.matmul(x_aug, w_aug, out=hidden)
                np.tanh(hidden, out=hidden)
                s = hidden @ w2v
                s += b2v
                s *= half
                x += s
                x += noise[m]
        else:
            for m in range(n_iter):
                s = diffnet.forward_batch(score.spec, score.params, x[:, None])[:, 0]
                x = x + half * s + noise[m]

    if not np.all(np.isfinite(x)):
        raise FaultStateError("Langevin particles became non-finite")
    return SampleSet(x)
