"""Online three-timescale training loops for the mean-field actor-critic.

One loop handles the single-population problems (game vs. control selected
purely by the learning-rate ordering), the other the mixed two-population
problem with an extra local score network. Both advance a single agent
trajectory; per step they

1. update the score network(s) from the current state (online score matching),
2. regenerate the mean-field particle set(s) by warm-started Langevin chains,
3. sample an action, observe reward and next state from the environment
   (with the next state clamped during the warm-up window),
4. compute the one-step TD target/error and update critic then actor.

Randomness comes from exactly one seeded generator consumed in a fixed,
documented order per step: Langevin noise block (global, then local), action
noise, dynamics noise. Initialization consumes, in order: actor, critic,
score (, local score) weights, the initial state, the initial particle set(s).
Given identical configs the metric trace is bitwise reproducible, including
across checkpoint save/resume boundaries.

The loops are model-free: the environment is an opaque object with ``reward``
and ``step`` methods, and the analytic target used for error metrics arrives
as a plain number in the config.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np

from .actor import GaussianPolicy, actor_loss_grad, new_policy, policy_params, sample_action
from .critic import CriticNet, critic_loss_grad, new_critic, td_error, td_target, value
from .diffnet import AdamState, adam_init, adam_update
from .errors import ConfigError, FaultStateError
from .score import SampleSet, ScoreNet, empirical_mean, empirical_variance, langevin_sample, new_score, score_step

MODES = ("mfg", "mfc", "mfcg")

ORDERING_REQUIREMENTS = {
    "mfg": "mfg mode requires lr_score < min(lr_actor, lr_critic): the slow score emulates optimizing against a frozen population",
    "mfc": "mfc mode requires lr_score > max(lr_actor, lr_critic): the fast score keeps the population moving with the control",
    "mfcg": "mfcg mode requires lr_score < min(lr_actor, lr_critic) < max(lr_actor, lr_critic) < lr_local_score",
}


class MeanFieldEnv(Protocol):
    def reward(self, x: float, a: float, samples: SampleSet) -> float: ...

    def step(self, x: float, a: float, rng: np.random.Generator) -> float: ...


class TwoPopulationEnv(Protocol):
    def reward(
        self, x: float, a: float, global_samples: SampleSet, local_samples: SampleSet
    ) -> float: ...

    def step(self, x: float, a: float, rng: np.random.Generator) -> float: ...


@dataclass(frozen=True)
class TrainConfig:
    """Run parameters; the learning-rate ordering is a hard invariant per mode."""

    mode: str
    n_steps: int
    dt: float = 0.01
    beta: float = 1.0
    lr_actor: float = 5e-6
    lr_critic: float = 1e-5
    lr_score: float = 1e-6
    lr_local_score: float | None = None
    langevin_eps: float = 5e-2
    langevin_iters: int = 200
    n_particles: int = 1000
    truncation_bound: float = 5.0
    truncation_steps: int = 200_000
    seed: int = 0
    log_interval: int = 1000
    initial_state_mean: float = 0.0
    initial_state_std: float = 1.0
    probe_states: tuple[float, ...] = (-1.0, -0.5, 0.0, 0.5, 1.0)
    target_mean: float = 0.0
    std_floor: float = 1e-5

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        for name in ("dt", "beta", "langevin_eps", "truncation_bound", "initial_state_std"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        for name in ("lr_actor", "lr_critic", "lr_score"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")
        if self.n_steps < 0 or self.truncation_steps < 0 or self.langevin_iters < 0:
            raise ConfigError("step counts must be >= 0")
        if self.n_particles < 1 or self.log_interval < 1:
            raise ConfigError("n_particles and log_interval must be >= 1")
        object.__setattr__(self, "probe_states", tuple(float(p) for p in self.probe_states))

        lo, hi = min(self.lr_actor, self.lr_critic), max(self.lr_actor, self.lr_critic)
        if self.mode == "mfg" and not self.lr_score < lo:
            raise ConfigError(ORDERING_REQUIREMENTS["mfg"])
        if self.mode == "mfc" and not self.lr_score > hi:
            raise ConfigError(ORDERING_REQUIREMENTS["mfc"])
        if self.mode == "mfcg":
            if self.lr_local_score is None:
                raise ConfigError("mfcg mode requires lr_local_score")
            if not (self.lr_score < lo < hi < self.lr_local_score):
                raise ConfigError(ORDERING_REQUIREMENTS["mfcg"])

    @property
    def gamma(self) -> float:
        return math.exp(-self.beta * self.dt)


@dataclass(frozen=True)
class MetricRow:
    """Logged snapshot; running averages cover the window since the last row.

    ``td_err_avg`` is the mean absolute TD error over the window and
    ``score_loss_avg`` the mean (signed) score-matching loss. ``probe_mu`` is
    the policy mean head at the configured probe states (the deterministic
    control readout). ``local_*`` fields are populated in mfcg mode only.
    """

    step: int
    sample_mean: float
    sample_var: float
    abs_mean_error: float
    td_err_avg: float
    score_loss_avg: float
    probe_mu: tuple[float, ...]
    local_sample_mean: float | None = None
    local_sample_var: float | None = None
    local_abs_mean_error: float | None = None
    local_score_loss_avg: float | None = None


@dataclass
class TrainerState:
    """Everything needed to continue a run; serialized into checkpoints."""

    step: int
    x: float
    actor: GaussianPolicy
    critic: CriticNet
    score: ScoreNet
    adam_actor: AdamState
    adam_critic: AdamState
    adam_score: AdamState
    samples: SampleSet
    rng: np.random.Generator
    local_score: ScoreNet | None = None
    adam_local_score: AdamState | None = None
    local_samples: SampleSet | None = None
    td_abs_sum: float = 0.0
    score_loss_sum: float = 0.0
    local_score_loss_sum: float = 0.0
    window: int = 0


@dataclass
class TrainResult:
    status: str  # "completed" | "fault at step n"
    fault_step: int | None
    metrics: list[MetricRow]
    state: TrainerState
    wall_time: float

    @property
    def actor(self) -> GaussianPolicy:
        return self.state.actor

    @property
    def critic(self) -> CriticNet:
        return self.state.critic

    @property
    def score(self) -> ScoreNet:
        return self.state.score

    @property
    def local_score(self) -> ScoreNet | None:
        return self.state.local_score


def init_state(cfg: TrainConfig) -> TrainerState:
    """Seeded initialization; rng consumption order is part of the contract."""
    rng = np.random.default_rng(cfg.seed)
    actor = new_policy(rng, std_floor=cfg.std_floor)
    critic = new_critic(rng)
    score = new_score(rng)
    local_score = new_score(rng) if cfg.mode == "mfcg" else None
    x = cfg.initial_state_mean + cfg.initial_state_std * rng.standard_normal()
    if cfg.truncation_steps > 0:
        x = min(max(x, -cfg.truncation_bound), cfg.truncation_bound)
    draw = lambda: SampleSet(
        cfg.initial_state_mean + cfg.initial_state_std * rng.standard_normal(cfg.n_particles)
    )
    samples = draw()
    local_samples = draw() if cfg.mode == "mfcg" else None
    return TrainerState(
        step=0,
        x=x,
        actor=actor,
        critic=critic,
        score=score,
        adam_actor=adam_init(actor.params.size),
        adam_critic=adam_init(critic.params.size),
        adam_score=adam_init(score.params.size),
        samples=samples,
        rng=rng,
        local_score=local_score,
        adam_local_score=adam_init(local_score.params.size) if local_score else None,
        local_samples=local_samples,
    )


def probe_control(actor: GaussianPolicy, probes) -> list[float]:
    """Policy mean head at each probe state (the deterministic control readout)."""
    return [policy_params(actor, float(x))[0] for x in probes]


def _finite_or_fault(name: str, v: float) -> float:
    if not math.isfinite(v):
        raise FaultStateError(f"non-finite {name}: {v!r}")
    return v


def _ac_update(env, cfg: TrainConfig, st: TrainerState, action: float, reward: float, hook) -> None:
    """Shared tail of both loops: dynamics, TD, critic update, actor update."""
    x = st.x
    x_next = _finite_or_fault("next state", env.step(x, action, st.rng))
    if st.step < cfg.truncation_steps:
        x_next = min(max(x_next, -cfg.truncation_bound), cfg.truncation_bound)
    if hook:
        hook("env_step")

    y = td_target(reward, cfg.gamma, value(st.critic, x_next))
    delta = td_error(y, value(st.critic, x))

    grad_c = critic_loss_grad(st.critic, x, delta)
    new_params, st.adam_critic = adam_update(st.critic.params, grad_c, st.adam_critic, cfg.lr_critic)
    st.critic = CriticNet(spec=st.critic.spec, params=new_params)
    if hook:
        hook("critic_update")

    grad_a = actor_loss_grad(st.actor, x, action, delta)
    new_params, st.adam_actor = adam_update(st.actor.params, grad_a, st.adam_actor, cfg.lr_actor)
    st.actor = replace(st.actor, params=new_params)
    if hook:
        hook("actor_update")

    st.x = x_next
    st.td_abs_sum += abs(delta)
    st.window += 1
    st.step += 1


def _emit_row(cfg: TrainConfig, st: TrainerState, metrics, on_row) -> None:
    n = max(st.window, 1)
    local = st.local_samples is not None
    row = MetricRow(
        step=st.step,
        sample_mean=empirical_mean(st.samples),
        sample_var=empirical_variance(st.samples),
        abs_mean_error=abs(empirical_mean(st.samples) - cfg.target_mean),
        td_err_avg=st.td_abs_sum / n,
        score_loss_avg=st.score_loss_sum / n,
        probe_mu=tuple(probe_control(st.actor, cfg.probe_states)),
        local_sample_mean=empirical_mean(st.local_samples) if local else None,
        local_sample_var=empirical_variance(st.local_samples) if local else None,
        local_abs_mean_error=(
            abs(empirical_mean(st.local_samples) - cfg.target_mean) if local else None
        ),
        local_score_loss_avg=st.local_score_loss_sum / n if local else None,
    )
    st.td_abs_sum = st.score_loss_sum = st.local_score_loss_sum = 0.0
    st.window = 0
    metrics.append(row)
    if on_row:
        on_row(row)


def _run_loop(
    env,
    cfg: TrainConfig,
    step_fn: Callable,
    state: TrainerState | None,
    on_row,
    trace_hook,
) -> TrainResult:
    t0 = time.perf_counter()
    st = state if state is not None else init_state(cfg)
    metrics: list[MetricRow] = []
    status, fault_step = "completed", None
    while st.step < cfg.n_steps:
        try:
            step_fn(env, cfg, st, trace_hook)
            if st.step % cfg.log_interval == 0 or st.step == cfg.n_steps:
                _emit_row(cfg, st, metrics, on_row)
        except FaultStateError:
            status, fault_step = f"fault at step {st.step}", st.step
            break
    return TrainResult(
        status=status,
        fault_step=fault_step,
        metrics=metrics,
        state=st,
        wall_time=time.perf_counter() - t0,
    )


def _mf_step(env, cfg: TrainConfig, st: TrainerState, hook) -> None:
    x = st.x
    st.score, st.adam_score, loss = score_step(st.score, x, cfg.lr_score, st.adam_score)
    st.score_loss_sum += loss
    if hook:
        hook("score_update")
    st.samples = langevin_sample(
        st.score, st.samples, cfg.langevin_eps, cfg.langevin_iters, st.rng
    )
    if hook:
        hook("mean_field_samples")
    action = sample_action(st.actor, x, st.rng)
    if hook:
        hook("action")
    reward = _finite_or_fault("reward", env.reward(x, action.action, st.samples))
    if hook:
        hook("reward")
    _ac_update(env, cfg, st, action.action, reward, hook)


def run_ih_mf_ac(
    env: MeanFieldEnv,
    cfg: TrainConfig,
    state: TrainerState | None = None,
    on_row: Callable[[MetricRow], None] | None = None,
    trace_hook: Callable[[str], None] | None = None,
) -> TrainResult:
    """Single-population loop; mode (game vs. control) is set by the lr ordering."""
    if cfg.mode not in ("mfg", "mfc"):
        raise ConfigError("run_ih_mf_ac handles mfg/mfc modes only")
    return _run_loop(env, cfg, _mf_step, state, on_row, trace_hook)


def _mfcg_step(env, cfg: TrainConfig, st: TrainerState, hook) -> None:
    x = st.x
    st.score, st.adam_score, loss = score_step(st.score, x, cfg.lr_score, st.adam_score)
    st.score_loss_sum += loss
    if hook:
        hook("score_update")
    st.local_score, st.adam_local_score, local_loss = score_step(
        st.local_score, x, cfg.lr_local_score, st.adam_local_score
    )
    st.local_score_loss_sum += local_loss
    if hook:
        hook("local_score_update")
    st.samples = langevin_sample(
        st.score, st.samples, cfg.langevin_eps, cfg.langevin_iters, st.rng
    )
    if hook:
        hook("mean_field_samples")
    st.local_samples = langevin_sample(
        st.local_score, st.local_samples, cfg.langevin_eps, cfg.langevin_iters, st.rng
    )
    if hook:
        hook("local_mean_field_samples")
    action = sample_action(st.actor, x, st.rng)
    if hook:
        hook("action")
    reward = _finite_or_fault(
        "reward", env.reward(x, action.action, st.samples, st.local_samples)
    )
    if hook:
        hook("reward")
    _ac_update(env, cfg, st, action.action, reward, hook)


def run_ih_mfcg_ac(
    env: TwoPopulationEnv,
    cfg: TrainConfig,
    state: TrainerState | None = None,
    on_row: Callable[[MetricRow], None] | None = None,
    trace_hook: Callable[[str], None] | None = None,
) -> TrainResult:
    """Two-population loop: independent global and local scores, shared agent."""
    if cfg.mode != "mfcg":
        raise ConfigError("run_ih_mfcg_ac requires mfcg mode")
    return _run_loop(env, cfg, _mfcg_step, state, on_row, trace_hook)
