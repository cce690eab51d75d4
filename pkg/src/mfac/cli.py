"""Command-line entry point: configs, run orchestration, persistence, exports.

Subcommands:

* ``train``       — run a configured training loop (single seed or ensemble),
                    streaming metrics to CSV and writing checkpoint/summary.
* ``analytic``    — print the closed-form benchmark solution as JSON.
* ``export-hist`` — regenerate particles from a checkpointed score and dump a
                    binned histogram plus analytic overlays for figures.

File formats are JSON for configs/checkpoints/summaries and CSV for metrics.
Exit codes: 0 completed, 2 configuration error, 3 fault-state run.

The run config document has sections ``problem``, ``training``, ``output`` and
an optional ``profiles`` section mapping profile names to training-field
overrides (``--profile`` selects one). Unknown keys are rejected everywhere.
The discount rate and step size live in ``problem`` only; the trainer receives
them through its config to keep a single source of truth.

Output directory precedence: ``--out`` flag, then ``MFAC_OUT_DIR`` environment
variable, then the config's ``output`` field.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic as analytic_mod
from .actor import GaussianPolicy, policy_params_batch
from .critic import CriticNet, value
from .diffnet import AdamState, NetSpec
from .env import LQConfig, LQMeanFieldEnv, MFCGConfig, MFCGMeanFieldEnv
from .errors import ConfigError, MfacError
from .score import SampleSet, ScoreNet, langevin_sample
from .trainer import (
    MetricRow,
    TrainConfig,
    TrainerState,
    init_state,
    run_ih_mf_ac,
    run_ih_mfcg_ac,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAULT = 3

CHECKPOINT_FORMAT = "mfac-checkpoint-v1"

BASE_COLUMNS = (
    "step",
    "sample_mean",
    "sample_var",
    "abs_mean_error",
    "td_err_avg",
    "score_loss_avg",
)
LOCAL_COLUMNS = (
    "local_sample_mean",
    "local_sample_var",
    "local_abs_mean_error",
    "local_score_loss_avg",
)

_LQ_KEYS = {"kind", "c1", "c2", "c3", "c4", "c5", "sigma", "beta", "dt"}
_MFCG_KEYS = {"kind", "c1", "c2", "c3", "c4", "ct1", "ct2", "ct5", "sigma", "beta", "dt"}
_TRAINING_KEYS = {
    "mode",
    "n_steps",
    "lr_actor",
    "lr_critic",
    "lr_score",
    "lr_local_score",
    "langevin_eps",
    "langevin_iters",
    "n_particles",
    "truncation_bound",
    "truncation_steps",
    "seed",
    "log_interval",
    "initial_state_mean",
    "initial_state_std",
    "probe_states",
    "std_floor",
    "checkpoint_interval",
}


@dataclass
class RunConfig:
    """Fully resolved run description (profile applied, seed fixed)."""

    problem_dict: dict
    training_dict: dict
    output: str

    @property
    def mode(self) -> str:
        return self.training_dict["mode"]

    def problem(self):
        d = dict(self.problem_dict)
        kind = d.pop("kind")
        sigma = d.pop("sigma")
        if kind == "lq":
            return LQConfig(sigma_vol=sigma, **d)
        return MFCGConfig(sigma_vol=sigma, **d)

    def train_config(self) -> TrainConfig:
        t = dict(self.training_dict)
        t.pop("checkpoint_interval", None)
        probes = t.pop("probe_states", None)
        mode = t["mode"]
        problem = self.problem()
        sol = self.solve()
        kwargs = dict(t, dt=problem.dt, beta=problem.beta, target_mean=sol.mean)
        if probes is not None:
            kwargs["probe_states"] = tuple(probes)
        return TrainConfig(**kwargs)

    def solve(self) -> analytic_mod.AnalyticSolution:
        problem = self.problem()
        if self.mode == "mfg":
            return analytic_mod.solve_mfg(problem)
        if self.mode == "mfc":
            return analytic_mod.solve_mfc(problem)
        return analytic_mod.solve_mfcg(problem)

    def env(self):
        problem = self.problem()
        if isinstance(problem, LQConfig):
            return LQMeanFieldEnv(problem)
        return MFCGMeanFieldEnv(problem)

    @property
    def checkpoint_interval(self) -> int:
        return int(self.training_dict.get("checkpoint_interval", 0))

    def hash(self) -> str:
        blob = json.dumps(
            {"problem": self.problem_dict, "training": self.training_dict},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def load_run_config(
    path: str | Path, profile: str | None = None, seed: int | None = None
) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    _check_keys(doc, {"problem", "training", "profiles", "output"}, "config document")
    for required in ("problem", "training", "output"):
        if required not in doc:
            raise ConfigError(f"config document is missing the {required!r} section")

    problem = dict(doc["problem"])
    kind = problem.get("kind")
    if kind == "lq":
        _check_keys(problem, _LQ_KEYS, "problem")
        missing = _LQ_KEYS - set(problem)
    elif kind == "mfcg":
        _check_keys(problem, _MFCG_KEYS, "problem")
        missing = _MFCG_KEYS - set(problem)
    else:
        raise ConfigError(f"problem.kind must be 'lq' or 'mfcg', got {kind!r}")
    if missing:
        raise ConfigError(f"problem section is missing keys: {sorted(missing)}")

    training = dict(doc["training"])
    if profile is not None:
        profiles = doc.get("profiles", {})
        if profile not in profiles:
            raise ConfigError(f"profile {profile!r} not defined in config")
        overrides = dict(profiles[profile])
        _check_keys(overrides, _TRAINING_KEYS, f"profiles.{profile}")
        training.update(overrides)
    _check_keys(training, _TRAINING_KEYS, "training")
    for required in ("mode", "n_steps"):
        if required not in training:
            raise ConfigError(f"training section is missing {required!r}")
    if seed is not None:
        training["seed"] = int(seed)
    training.setdefault("seed", 0)

    cfg = RunConfig(problem_dict=problem, training_dict=training, output=doc["output"])
    cfg.train_config()  # validate eagerly, including the lr orderings
    mode, want = cfg.mode, ("mfcg" if kind == "mfcg" else ("mfg", "mfc"))
    if mode not in want:
        raise ConfigError(f"training.mode {mode!r} incompatible with problem.kind {kind!r}")
    if cfg.checkpoint_interval:
        if cfg.checkpoint_interval % int(training.get("log_interval", 1000)) != 0:
            raise ConfigError("checkpoint_interval must be a multiple of log_interval")
    return cfg


# ----------------------------------------------------------------- metrics IO


def metrics_header(mode: str, n_probes: int) -> list[str]:
    cols = list(BASE_COLUMNS)
    if mode == "mfcg":
        cols += list(LOCAL_COLUMNS)
    cols += [f"probe_mu_{i}" for i in range(n_probes)]
    return cols


def _row_values(mode: str, row: MetricRow) -> list:
    vals = [
        row.step,
        row.sample_mean,
        row.sample_var,
        row.abs_mean_error,
        row.td_err_avg,
        row.score_loss_avg,
    ]
    if mode == "mfcg":
        vals += [
            row.local_sample_mean,
            row.local_sample_var,
            row.local_abs_mean_error,
            row.local_score_loss_avg,
        ]
    vals += list(row.probe_mu)
    return vals


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


class MetricsWriter:
    """Streams rows to CSV, flushing each row so long runs stay observable."""

    def __init__(self, path: Path, mode: str, n_probes: int):
        self.path = path
        self.mode = mode
        self._fh = open(path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(metrics_header(mode, n_probes))
        self._fh.flush()

    def write(self, row: MetricRow) -> None:
        self._writer.writerow(_fmt(v) for v in _row_values(self.mode, row))
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


# -------------------------------------------------------------- checkpoint IO


def _spec_dict(spec: NetSpec) -> dict:
    return {
        "input_dim": spec.input_dim,
        "hidden_layers": [list(layer) for layer in spec.hidden_layers],
        "output_dim": spec.output_dim,
    }


def _spec_from(d: dict) -> NetSpec:
    return NetSpec(
        input_dim=d["input_dim"],
        hidden_layers=tuple((w, a) for w, a in d["hidden_layers"]),
        output_dim=d["output_dim"],
    )


def _adam_dict(a: AdamState) -> dict:
    return {
        "m": a.m.tolist(),
        "v": a.v.tolist(),
        "step_count": a.step_count,
        "beta1": a.beta1,
        "beta2": a.beta2,
        "eps_hat": a.eps_hat,
    }


def _adam_from(d: dict) -> AdamState:
    return AdamState(
        m=np.asarray(d["m"], dtype=float),
        v=np.asarray(d["v"], dtype=float),
        step_count=int(d["step_count"]),
        beta1=d["beta1"],
        beta2=d["beta2"],
        eps_hat=d["eps_hat"],
    )


def state_to_dict(st: TrainerState) -> dict:
    out = {
        "step": st.step,
        "x": st.x,
        "specs": {
            "actor": _spec_dict(st.actor.spec),
            "critic": _spec_dict(st.critic.spec),
            "score": _spec_dict(st.score.spec),
        },
        "params": {
            "actor": st.actor.params.tolist(),
            "critic": st.critic.params.tolist(),
            "score": st.score.params.tolist(),
        },
        "adam": {
            "actor": _adam_dict(st.adam_actor),
            "critic": _adam_dict(st.adam_critic),
            "score": _adam_dict(st.adam_score),
        },
        "actor_std_floor": st.actor.std_floor,
        "actor_std_activation": st.actor.std_activation,
        "particles": st.samples.particles.tolist(),
        "accumulators": {
            "td_abs_sum": st.td_abs_sum,
            "score_loss_sum": st.score_loss_sum,
            "local_score_loss_sum": st.local_score_loss_sum,
            "window": st.window,
        },
        "rng_state": st.rng.bit_generator.state,
    }
    if st.local_score is not None:
        out["specs"]["local_score"] = _spec_dict(st.local_score.spec)
        out["params"]["local_score"] = st.local_score.params.tolist()
        out["adam"]["local_score"] = _adam_dict(st.adam_local_score)
        out["local_particles"] = st.local_samples.particles.tolist()
    return out


def state_from_dict(d: dict) -> TrainerState:
    actor = GaussianPolicy(
        spec=_spec_from(d["specs"]["actor"]),
        params=np.asarray(d["params"]["actor"], dtype=float),
        std_floor=d["actor_std_floor"],
        std_activation=d["actor_std_activation"],
    )
    critic = CriticNet(
        spec=_spec_from(d["specs"]["critic"]),
        params=np.asarray(d["params"]["critic"], dtype=float),
    )
    score = ScoreNet(
        spec=_spec_from(d["specs"]["score"]),
        params=np.asarray(d["params"]["score"], dtype=float),
    )
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = d["rng_state"]
    acc = d["accumulators"]
    st = TrainerState(
        step=int(d["step"]),
        x=float(d["x"]),
        actor=actor,
        critic=critic,
        score=score,
        adam_actor=_adam_from(d["adam"]["actor"]),
        adam_critic=_adam_from(d["adam"]["critic"]),
        adam_score=_adam_from(d["adam"]["score"]),
        samples=SampleSet(np.asarray(d["particles"], dtype=float)),
        rng=rng,
        td_abs_sum=acc["td_abs_sum"],
        score_loss_sum=acc["score_loss_sum"],
        local_score_loss_sum=acc["local_score_loss_sum"],
        window=int(acc["window"]),
    )
    if "local_score" in d["params"]:
        st.local_score = ScoreNet(
            spec=_spec_from(d["specs"]["local_score"]),
            params=np.asarray(d["params"]["local_score"], dtype=float),
        )
        st.adam_local_score = _adam_from(d["adam"]["local_score"])
        st.local_samples = SampleSet(np.asarray(d["local_particles"], dtype=float))
    return st


def write_checkpoint(path: Path, cfg: RunConfig, st: TrainerState, status: str) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": {
            "problem": cfg.problem_dict,
            "training": cfg.training_dict,
            "output": cfg.output,
        },
        "config_hash": cfg.hash(),
        "step": st.step,
        "status": status,
        "state": state_to_dict(st),
    }
    path.write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ConfigError(f"unrecognized checkpoint format in {path}")
    return doc


# ------------------------------------------------------------------- summary


def _analytic_dict(sol: analytic_mod.AnalyticSolution) -> dict:
    return {
        "kind": sol.kind,
        "mean": sol.mean,
        "variance": sol.variance,
        "gamma2": sol.gamma2,
        "gamma1": sol.gamma1,
        "gamma0": sol.gamma0,
    }


def write_summary(
    path: Path, cfg: RunConfig, result, seed: int, profile: str | None
) -> None:
    sol = cfg.solve()
    final = result.metrics[-1] if result.metrics else None
    critic = result.critic
    sd = math.sqrt(sol.variance) if sol.variance > 0 else 1.0
    xs = np.linspace(sol.mean - 3 * sd, sol.mean + 3 * sd, 61)
    try:
        value_probe = {
            "xs": xs.tolist(),
            "learned_neg_critic": [-value(critic, float(x)) for x in xs],
            "analytic": [analytic_mod.value_function(sol, float(x)) for x in xs],
        }
    except MfacError:
        value_probe = None  # post-mortem summary for a faulted run
    doc = {
        "status": result.status,
        "fault_step": result.fault_step,
        "seed": seed,
        "profile": profile,
        "mode": cfg.mode,
        "n_steps": cfg.training_dict["n_steps"],
        "wall_time_s": result.wall_time,
        "config_hash": cfg.hash(),
        "analytic": _analytic_dict(sol),
        "final": None
        if final is None
        else {
            name: val
            for name, val in zip(
                metrics_header(cfg.mode, len(final.probe_mu)),
                _row_values(cfg.mode, final),
            )
        },
        "probe_states": list(cfg.train_config().probe_states),
        "value_probe": value_probe,
    }
    path.write_text(json.dumps(doc, indent=1))


# ---------------------------------------------------------------- train logic


def _resolve_out_dir(cfg: RunConfig, flag: str | None) -> Path:
    if flag:
        return Path(flag)
    env_dir = os.environ.get("MFAC_OUT_DIR")
    if env_dir:
        return Path(env_dir)
    return Path(cfg.output)


def _run_single(
    cfg: RunConfig,
    out_dir: Path,
    seed: int,
    profile: str | None,
    resume_state: TrainerState | None = None,
) -> int:
    out_dir.mkdir(parents=True, exist_ok=True)
    train_cfg = cfg.train_config()
    env = cfg.env()
    state = resume_state if resume_state is not None else init_state(train_cfg)
    writer = MetricsWriter(
        out_dir / "metrics.csv", cfg.mode, len(train_cfg.probe_states)
    )
    interval = cfg.checkpoint_interval

    def on_row(row: MetricRow) -> None:
        writer.write(row)
        if interval and state.step % interval == 0 and state.step < train_cfg.n_steps:
            write_checkpoint(out_dir / f"checkpoint_{state.step}.json", cfg, state, "partial")

    runner = run_ih_mfcg_ac if cfg.mode == "mfcg" else run_ih_mf_ac
    try:
        result = runner(env, train_cfg, state=state, on_row=on_row)
    finally:
        writer.close()
    write_checkpoint(out_dir / "checkpoint.json", cfg, result.state, result.status)
    write_summary(out_dir / "summary.json", cfg, result, seed, profile)
    if result.fault_step is not None:
        print(f"run ended in fault state at step {result.fault_step}", file=sys.stderr)
        return EXIT_FAULT
    print(
        f"completed {train_cfg.n_steps} steps (seed {seed}) -> {out_dir}",
        file=sys.stderr,
    )
    return EXIT_OK


def _write_aggregate(out_dir: Path, seed_dirs: list[Path], mode: str) -> None:
    """Per-step mean and standard deviation across the seed ensemble."""
    tables = []
    header = None
    for d in seed_dirs:
        with open(d / "metrics.csv", newline="") as fh:
            reader = csv.reader(fh)
            rows = list(reader)
        header = rows[0]
        tables.append(np.array([[float(v) for v in r] for r in rows[1:]]))
    stacked = np.stack(tables)  # (seeds, rows, cols)
    agg_header = ["step"]
    for col in header[1:]:
        agg_header += [f"{col}_mean", f"{col}_std"]
    with open(out_dir / "aggregate.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(agg_header)
        for i in range(stacked.shape[1]):
            vals = [_fmt(int(stacked[0, i, 0]))]
            for j in range(1, stacked.shape[2]):
                col = stacked[:, i, j]
                vals += [_fmt(float(col.mean())), _fmt(float(col.std()))]
            writer.writerow(vals)


def cmd_train(args) -> int:
    cfg = load_run_config(args.config, profile=args.profile, seed=args.seed)
    out_dir = _resolve_out_dir(cfg, args.out)

    if args.resume:
        doc = load_checkpoint(args.resume)
        if doc["config_hash"] != cfg.hash():
            raise ConfigError(
                "checkpoint was produced by a different configuration "
                f"(hash {doc['config_hash'][:12]} != {cfg.hash()[:12]})"
            )
        state = state_from_dict(doc["state"])
        seed = int(cfg.training_dict["seed"])
        return _run_single(cfg, out_dir, seed, args.profile, resume_state=state)

    if args.seeds is not None:
        if args.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        base = int(cfg.training_dict["seed"])
        exit_code = EXIT_OK
        seed_dirs = []
        for seed in range(base, base + args.seeds):
            sub = out_dir / f"seed_{seed}"
            seed_cfg = load_run_config(args.config, profile=args.profile, seed=seed)
            code = _run_single(seed_cfg, sub, seed, args.profile)
            exit_code = max(exit_code, code)
            seed_dirs.append(sub)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_aggregate(out_dir, seed_dirs, cfg.mode)
        return exit_code

    return _run_single(cfg, out_dir, int(cfg.training_dict["seed"]), args.profile)


def cmd_analytic(args) -> int:
    cfg_doc = json.loads(Path(args.config).read_text())
    problem = dict(cfg_doc.get("problem", {}))
    kind = problem.pop("kind", None)
    sigma = problem.pop("sigma", None)
    if kind == "lq":
        model = LQConfig(sigma_vol=sigma, **problem)
        if args.kind == "mfg":
            sol = analytic_mod.solve_mfg(model)
        elif args.kind == "mfc":
            sol = analytic_mod.solve_mfc(model)
        else:
            raise ConfigError("--kind mfcg requires an mfcg problem")
    elif kind == "mfcg":
        if args.kind != "mfcg":
            raise ConfigError(f"--kind {args.kind} requires an lq problem")
        model = MFCGConfig(sigma_vol=sigma, **problem)
        sol = analytic_mod.solve_mfcg(model)
    else:
        raise ConfigError(f"problem.kind must be 'lq' or 'mfcg', got {kind!r}")
    print(json.dumps(_analytic_dict(sol), indent=1))
    return EXIT_OK


def cmd_export_hist(args) -> int:
    if args.bins < 1:
        raise ConfigError("--bins must be >= 1")
    lo, hi = args.range
    if not lo < hi:
        raise ConfigError("--range LO HI requires LO < HI")
    doc = load_checkpoint(args.checkpoint)
    cfg = RunConfig(
        problem_dict=doc["config"]["problem"],
        training_dict=doc["config"]["training"],
        output=doc["config"]["output"],
    )
    st = state_from_dict(doc["state"])
    train_cfg = cfg.train_config()
    samples = langevin_sample(
        st.score, st.samples, train_cfg.langevin_eps, train_cfg.langevin_iters, st.rng
    )
    counts, edges = np.histogram(samples.particles, bins=args.bins, range=(lo, hi))
    centers = 0.5 * (edges[:-1] + edges[1:])
    sol = cfg.solve()
    sd = math.sqrt(sol.variance)
    density = np.exp(-0.5 * ((centers - sol.mean) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
    mu, _ = policy_params_batch(st.actor, centers)
    out = {
        "bins": int(args.bins),
        "lo": lo,
        "hi": hi,
        "k": samples.k,
        "step": doc["step"],
        "edges": edges.tolist(),
        "centers": centers.tolist(),
        "counts": counts.tolist(),
        "density_analytic": density.tolist(),
        "control_learned": mu.tolist(),
        "control_analytic": [analytic_mod.optimal_control(sol, float(x)) for x in centers],
        "analytic": _analytic_dict(sol),
    }
    out_path = Path(args.out) if args.out else Path(args.checkpoint).parent / "hist.json"
    out_path.write_text(json.dumps(out, indent=1))
    print(f"wrote {out_path}", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfac",
        description="Mean-field actor-critic solver with linear-quadratic benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run a training loop from a config file")
    train.add_argument("--config", required=True)
    train.add_argument("--profile", default=None, help="named training profile (e.g. desk, paper)")
    train.add_argument("--seed", type=int, default=None, help="override the config seed")
    train.add_argument("--seeds", type=int, default=None, help="run an ensemble of N consecutive seeds")
    train.add_argument("--out", default=None, help="output directory override")
    train.add_argument("--resume", default=None, help="checkpoint to resume from")
    train.set_defaults(func=cmd_train)

    analytic = sub.add_parser("analytic", help="print the closed-form solution as JSON")
    analytic.add_argument("--config", required=True)
    analytic.add_argument("--kind", required=True, choices=("mfg", "mfc", "mfcg"))
    analytic.set_defaults(func=cmd_analytic)

    hist = sub.add_parser("export-hist", help="dump histogram data from a checkpoint")
    hist.add_argument("--checkpoint", required=True)
    hist.add_argument("--bins", type=int, required=True)
    hist.add_argument("--range", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    hist.add_argument("--out", default=None)
    hist.set_defaults(func=cmd_export_hist)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MfacError as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
