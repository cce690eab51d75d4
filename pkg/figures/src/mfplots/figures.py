"""The three figure layouts: control+histogram, mean-error curve, value function.

All renderers are deterministic given identical inputs (fixed figure geometry,
no timestamps in the image metadata) and draw analytic overlays straight from
the input files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaError, load_error_curve, load_hist, load_summary

KINDS = ("control_hist", "mean_error", "value_fn")


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict
    out: str
    x_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}")


def _save(fig, out: str) -> None:
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=120, metadata={"Software": None})
    plt.close(fig)


def _control_hist(spec: FigureSpec) -> None:
    doc = load_hist(spec.inputs["hist"])
    centers = np.asarray(doc["centers"])
    width = (doc["hi"] - doc["lo"]) / doc["bins"]
    density = np.asarray(doc["counts"]) / (doc["k"] * width)

    fig, ax_ctrl = plt.subplots(figsize=(6.4, 4.2))
    ax_dens = ax_ctrl.twinx()
    ax_dens.bar(
        centers, density, width=width, color="tab:blue", alpha=0.35,
        label="learned distribution",
    )
    ax_dens.plot(
        centers, doc["density_analytic"], color="tab:orange",
        label="analytic density",
    )
    ax_ctrl.plot(
        centers, doc["control_learned"], "--", color="tab:blue",
        label="learned control",
    )
    ax_ctrl.plot(
        centers, doc["control_analytic"], color="tab:green",
        label="analytic control",
    )
    ax_ctrl.set_xlabel("state x")
    ax_ctrl.set_ylabel("control a(x)")
    ax_dens.set_ylabel("probability density")
    if spec.x_range:
        ax_ctrl.set_xlim(*spec.x_range)
    lines, labels = ax_ctrl.get_legend_handles_labels()
    lines2, labels2 = ax_dens.get_legend_handles_labels()
    ax_ctrl.legend(lines + lines2, labels + labels2, loc="upper right", fontsize=8)
    _save(fig, spec.out)


def _mean_error(spec: FigureSpec) -> None:
    curve = load_error_curve(spec.inputs["metrics"])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(curve["step"], curve["error"], color="tab:blue", label="|mean error|")
    if curve["band"] is not None:
        ax.fill_between(
            curve["step"],
            np.maximum(curve["error"] - curve["band"], 0.0),
            curve["error"] + curve["band"],
            color="tab:blue",
            alpha=0.2,
            label="seed spread (1 std)",
        )
    ax.set_xlabel("training step")
    ax.set_ylabel("absolute mean error")
    ax.legend(fontsize=8)
    if spec.x_range:
        ax.set_xlim(*spec.x_range)
    _save(fig, spec.out)


def _value_fn(spec: FigureSpec) -> None:
    doc = load_summary(spec.inputs["summary"])
    probe = doc["value_probe"]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(probe["xs"], probe["analytic"], color="tab:orange", label="analytic value")
    ax.plot(
        probe["xs"], probe["learned_neg_critic"], "--", color="tab:blue",
        label="learned value (negated critic)",
    )
    ax.set_xlabel("state x")
    ax.set_ylabel("value")
    ax.legend(fontsize=8)
    if spec.x_range:
        ax.set_xlim(*spec.x_range)
    _save(fig, spec.out)


_RENDERERS = {
    "control_hist": _control_hist,
    "mean_error": _mean_error,
    "value_fn": _value_fn,
}


def plot(spec: FigureSpec) -> str:
    """Render the figure described by spec; returns the output path."""
    _RENDERERS[spec.kind](spec)
    return spec.out
