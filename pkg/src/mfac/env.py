"""Model-free environment boundary and the linear-quadratic benchmarks.

The training loop only ever sees ``reward(x, a, samples...)`` and
``step(x, a, rng)``; the cost coefficients and dynamics below are the
environment's hidden model. Rewards are negated costs scaled by the time step,
so they are always <= 0 for the quadratic benchmarks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .score import SampleSet, empirical_mean


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


@dataclass(frozen=True)
class LQConfig:
    """Running-cost coefficients, volatility, discount rate, and step size."""

    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    sigma_vol: float
    beta: float
    dt: float

    def __post_init__(self) -> None:
        _require(self.sigma_vol >= 0.0, "volatility must be >= 0")
        _require(self.beta > 0.0, "discount rate beta must be > 0")
        _require(self.dt > 0.0, "time step dt must be > 0")
        gamma = math.exp(-self.beta * self.dt)
        _require(0.0 < gamma < 1.0, "e^(-beta*dt) must lie in (0,1)")
        _require(
            abs(self.c1 + self.c3 - self.c1 * self.c2) > 1e-12,
            "degenerate game mean denominator c1 + c3 - c1*c2",
        )
        _require(
            abs(self.c1 + self.c3 + self.c5 - self.c1 * self.c2 * (2.0 - self.c2)) > 1e-12,
            "degenerate control mean denominator c1 + c3 + c5 - c1*c2*(2 - c2)",
        )

    @property
    def gamma(self) -> float:
        return math.exp(-self.beta * self.dt)


@dataclass(frozen=True)
class MFCGConfig:
    """Two-population variant: global (c*) and local (ct*) coupling terms."""

    c1: float
    c2: float
    c3: float
    c4: float
    ct1: float
    ct2: float
    ct5: float
    sigma_vol: float
    beta: float
    dt: float

    def __post_init__(self) -> None:
        _require(self.sigma_vol >= 0.0, "volatility must be >= 0")
        _require(self.beta > 0.0, "discount rate beta must be > 0")
        _require(self.dt > 0.0, "time step dt must be > 0")
        _require(
            abs(self.mean_denominator) > 1e-12,
            "degenerate mean denominator c1(1-c2) + ct1(1-ct2)^2 + c3 + ct5",
        )

    @property
    def mean_denominator(self) -> float:
        return (
            self.c1 * (1.0 - self.c2)
            + self.ct1 * (1.0 - self.ct2) ** 2
            + self.c3
            + self.ct5
        )

    @property
    def gamma(self) -> float:
        return math.exp(-self.beta * self.dt)


@dataclass(frozen=True)
class Transition:
    reward: float
    next_state: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.reward) and math.isfinite(self.next_state)):
            raise ConfigError("transition fields must be finite")


def lq_reward(cfg: LQConfig, x: float, a: float, m: float) -> float:
    """Negated quadratic running cost times dt; m is the mean-field first moment."""
    cost = (
        0.5 * a * a
        + cfg.c1 * (x - cfg.c2 * m) ** 2
        + cfg.c3 * (x - cfg.c4) ** 2
        + cfg.c5 * m * m
    )
    return -cost * cfg.dt


def lq_step(cfg: LQConfig, x: float, a: float, rng: np.random.Generator) -> float:
    """Euler-Maruyama transition x + a*dt + sigma*sqrt(dt)*z; one rng draw."""
    return x + a * cfg.dt + cfg.sigma_vol * math.sqrt(cfg.dt) * rng.standard_normal()


def mfcg_reward(
    cfg: MFCGConfig, x: float, a: float, m_global: float, m_local: float
) -> float:
    cost = (
        0.5 * a * a
        + cfg.c1 * (x - cfg.c2 * m_global) ** 2
        + cfg.c3 * (x - cfg.c4) ** 2
        + cfg.ct1 * (x - cfg.ct2 * m_local) ** 2
        + cfg.ct5 * m_local * m_local
    )
    return -cost * cfg.dt


def mfcg_step(cfg: MFCGConfig, x: float, a: float, rng: np.random.Generator) -> float:
    return x + a * cfg.dt + cfg.sigma_vol * math.sqrt(cfg.dt) * rng.standard_normal()


def truncate_state(x: float, bound: float) -> float:
    """Clamp to [-bound, bound]; the trainer applies this only during warm-up."""
    if bound <= 0.0:
        raise ConfigError("truncation bound must be > 0")
    return min(max(x, -bound), bound)


class LQMeanFieldEnv:
    """Single-population environment facade consumed by the training loop.

    Only the empirical mean of the sample set enters the quadratic cost; the
    full set is accepted so richer environments can use higher moments.
    """

    def __init__(self, cfg: LQConfig):
        self.cfg = cfg

    def reward(self, x: float, a: float, samples: SampleSet) -> float:
        return lq_reward(self.cfg, x, a, empirical_mean(samples))

    def step(self, x: float, a: float, rng: np.random.Generator) -> float:
        return lq_step(self.cfg, x, a, rng)


class MFCGMeanFieldEnv:
    """Two-population facade: reward sees both sets, dynamics only the global one."""

    def __init__(self, cfg: MFCGConfig):
        self.cfg = cfg

    def reward(
        self, x: float, a: float, global_samples: SampleSet, local_samples: SampleSet
    ) -> float:
        return mfcg_reward(
            self.cfg, x, a, empirical_mean(global_samples), empirical_mean(local_samples)
        )

    def step(self, x: float, a: float, rng: np.random.Generator) -> float:
        return mfcg_step(self.cfg, x, a, rng)
