"""Closed-form benchmark solutions for the linear-quadratic problems.

All three variants share the same structure: the value function is the
quadratic ``v(x) = G2*x^2 + G1*x + G0`` whose leading coefficient solves
``2*G2^2 + beta*G2 = C`` with ``C`` the total quadratic state-cost weight,
the optimal feedback control is ``-v'(x)``, and the controlled state is an
Ornstein-Uhlenbeck process whose limiting law is Gaussian with mean
``-G1/(2*G2)`` and variance ``sigma^2/(4*G2)``.

The fixed-point residual oracle uses the best-response mean map derived by
freezing the population mean m, solving the resulting single-agent quadratic
control problem (match the linear HJB coefficients), and reading off the rest
point of the optimally controlled state:

    Phi(m) = (c1*c2*m + c3*c4) / (c1 + c3).

The game-consistent mean is the fixed point of Phi; iterating Phi converges at
rate c1*c2/(c1+c3) whenever that ratio is below one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .env import LQConfig, MFCGConfig
from .errors import DegenerateModelError

KINDS = ("mfg", "mfc", "mfcg")


@dataclass(frozen=True)
class AnalyticSolution:
    gamma2: float
    gamma1: float
    gamma0: float
    mean: float
    variance: float
    kind: str


def _gamma2(beta: float, quad_weight: float) -> float:
    """Positive root of 2*G2^2 + beta*G2 - quad_weight = 0."""
    return (-beta + math.sqrt(beta * beta + 8.0 * quad_weight)) / 4.0


def _checked_div(num: float, den: float, what: str) -> float:
    if abs(den) < 1e-12:
        raise DegenerateModelError(f"degenerate denominator in {what}")
    return num / den


def solve_mfg(cfg: LQConfig) -> AnalyticSolution:
    """Equilibrium of the frozen-population game."""
    g2 = _gamma2(cfg.beta, cfg.c1 + cfg.c3)
    g1 = _checked_div(
        -2.0 * g2 * cfg.c3 * cfg.c4,
        g2 * (cfg.beta + 2.0 * g2) - cfg.c1 * cfg.c2,
        "game value linear coefficient",
    )
    mean = _checked_div(
        cfg.c3 * cfg.c4, cfg.c1 + cfg.c3 - cfg.c1 * cfg.c2, "game mean"
    )
    g0 = (
        cfg.c5 * mean**2
        + cfg.c3 * cfg.c4**2
        + cfg.c1 * cfg.c2**2 * mean**2
        + cfg.sigma_vol**2 * g2
        - 0.5 * g1 * g1
    ) / cfg.beta
    return AnalyticSolution(
        gamma2=g2,
        gamma1=g1,
        gamma0=g0,
        mean=mean,
        variance=cfg.sigma_vol**2 / (4.0 * g2),
        kind="mfg",
    )


def solve_mfc(cfg: LQConfig) -> AnalyticSolution:
    """Social optimum of the population-steering control problem."""
    g2 = _gamma2(cfg.beta, cfg.c1 + cfg.c3)  # same leading coefficient as the game
    g1 = _checked_div(
        -2.0 * g2 * cfg.c3 * cfg.c4,
        g2 * (cfg.beta + 2.0 * g2) + cfg.c5 - cfg.c1 * cfg.c2 * (2.0 - cfg.c2),
        "control value linear coefficient",
    )
    mean = _checked_div(
        cfg.c3 * cfg.c4,
        cfg.c1 + cfg.c3 + cfg.c5 - cfg.c1 * cfg.c2 * (2.0 - cfg.c2),
        "control mean",
    )
    g0 = (
        cfg.c5 * mean**2
        + cfg.c3 * cfg.c4**2
        + cfg.c1 * cfg.c2**2 * mean**2
        + cfg.sigma_vol**2 * g2
        - 0.5 * g1 * g1
    ) / cfg.beta
    return AnalyticSolution(
        gamma2=g2,
        gamma1=g1,
        gamma0=g0,
        mean=mean,
        variance=cfg.sigma_vol**2 / (4.0 * g2),
        kind="mfc",
    )


def solve_mfcg(cfg: MFCGConfig) -> AnalyticSolution:
    """Mixed problem: competitive global coupling plus cooperative local one."""
    g2 = _gamma2(cfg.beta, cfg.c1 + cfg.c3 + cfg.ct1)
    den = cfg.mean_denominator
    g1 = _checked_div(-2.0 * g2 * cfg.c3 * cfg.c4, den, "mixed value linear coefficient")
    mean = _checked_div(cfg.c3 * cfg.c4, den, "mixed mean")
    g0 = (
        cfg.c1 * cfg.c2**2 * mean**2
        + (cfg.ct1 * cfg.ct2**2 + cfg.ct5) * mean**2
        + cfg.sigma_vol**2 * g2
        - 0.5 * g1 * g1
        + cfg.c3 * cfg.c4**2
    ) / cfg.beta
    return AnalyticSolution(
        gamma2=g2,
        gamma1=g1,
        gamma0=g0,
        mean=mean,
        variance=cfg.sigma_vol**2 / (4.0 * g2),
        kind="mfcg",
    )


def optimal_control(sol: AnalyticSolution, x: float) -> float:
    """Feedback control -v'(x) = -(2*G2*x + G1)."""
    return -(2.0 * sol.gamma2 * x + sol.gamma1)


def value_function(sol: AnalyticSolution, x: float) -> float:
    return sol.gamma2 * x * x + sol.gamma1 * x + sol.gamma0


def best_response_mean(cfg: LQConfig, m: float) -> float:
    """Rest point of the state controlled optimally against a frozen mean m."""
    return _checked_div(
        cfg.c1 * cfg.c2 * m + cfg.c3 * cfg.c4, cfg.c1 + cfg.c3, "best response mean"
    )


def mfg_fixed_point_residual(cfg: LQConfig) -> float:
    """|Phi(m_hat) - m_hat| for the best-response mean map; ~0 at equilibrium."""
    m_hat = solve_mfg(cfg).mean
    return abs(best_response_mean(cfg, m_hat) - m_hat)
