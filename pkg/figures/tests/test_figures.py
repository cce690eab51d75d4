"""Figure tests on synthetic fixture files matching the solver's contracts."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import pytest

from mfplots.cli import main
from mfplots.figures import FigureSpec, plot
from mfplots.io import SchemaError, load_error_curve, load_hist, load_summary


def make_hist(path: Path, mean=0.8, shift=0.0) -> Path:
    bins, lo, hi, k = 50, 0.2, 1.4, 1000
    width = (hi - lo) / bins
    centers = [lo + (i + 0.5) * width for i in range(bins)]
    sd = math.sqrt(0.0547)
    density = [
        math.exp(-0.5 * ((c - mean - shift) / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
        for c in centers
    ]
    counts = [round(d * k * width) for d in density]
    doc = {
        "bins": bins,
        "lo": lo,
        "hi": hi,
        "k": k,
        "step": 200000,
        "edges": [lo + i * width for i in range(bins + 1)],
        "centers": centers,
        "counts": counts,
        "density_analytic": density,
        "control_learned": [-0.8 * (c - mean) + 0.01 for c in centers],
        "control_analytic": [-0.82 * (c - mean) for c in centers],
        "analytic": {"kind": "mfg", "mean": mean, "variance": 0.0547},
    }
    path.write_text(json.dumps(doc))
    return path


def make_metrics(path: Path, aggregate=False) -> Path:
    if aggregate:
        header = ["step", "sample_mean_mean", "sample_mean_std",
                  "abs_mean_error_mean", "abs_mean_error_std"]
        rows = [[1000 * (i + 1), 0.5, 0.05, 0.4 / (i + 1), 0.02] for i in range(20)]
    else:
        header = ["step", "sample_mean", "sample_var", "abs_mean_error",
                  "td_err_avg", "score_loss_avg", "probe_mu_0"]
        rows = [[1000 * (i + 1), 0.5, 0.1, 0.4 / (i + 1), 0.01, -0.3, 0.0] for i in range(20)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def make_summary(path: Path, analytic_offset=0.0) -> Path:
    xs = [i / 10 for i in range(-10, 31)]
    doc = {
        "status": "completed",
        "mode": "mfg",
        "seed": 0,
        "analytic": {"kind": "mfg", "mean": 0.8, "variance": 0.0547,
                     "gamma2": 0.41, "gamma1": -0.66, "gamma0": 1.0},
        "final": {"step": 200000, "sample_mean": 0.78},
        "value_probe": {
            "xs": xs,
            "learned_neg_critic": [0.41 * x * x - 0.66 * x + 1.0 + 0.03 for x in xs],
            "analytic": [0.41 * x * x - 0.66 * x + 1.0 + analytic_offset for x in xs],
        },
    }
    path.write_text(json.dumps(doc))
    return path


# ------------------------------------------------------------------ rendering


def test_control_hist_renders(tmp_path):
    hist = make_hist(tmp_path / "hist.json")
    out = tmp_path / "fig.png"
    plot(FigureSpec(kind="control_hist", inputs={"hist": str(hist)}, out=str(out)))
    assert out.exists() and out.stat().st_size > 5000


def test_mean_error_single_run_renders(tmp_path):
    metrics = make_metrics(tmp_path / "metrics.csv")
    out = tmp_path / "err.png"
    plot(FigureSpec(kind="mean_error", inputs={"metrics": str(metrics)}, out=str(out)))
    assert out.exists() and out.stat().st_size > 5000


def test_mean_error_aggregate_renders_band(tmp_path):
    agg = make_metrics(tmp_path / "aggregate.csv", aggregate=True)
    curve = load_error_curve(agg)
    assert curve["band"] is not None
    out = tmp_path / "band.png"
    plot(FigureSpec(kind="mean_error", inputs={"metrics": str(agg)}, out=str(out)))
    assert out.exists()


def test_value_fn_renders(tmp_path):
    summary = make_summary(tmp_path / "summary.json")
    out = tmp_path / "value.png"
    plot(FigureSpec(kind="value_fn", inputs={"summary": str(summary)}, out=str(out)))
    assert out.exists() and out.stat().st_size > 5000


def test_rendering_is_deterministic(tmp_path):
    hist = make_hist(tmp_path / "hist.json")
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    plot(FigureSpec(kind="control_hist", inputs={"hist": str(hist)}, out=str(a)))
    plot(FigureSpec(kind="control_hist", inputs={"hist": str(hist)}, out=str(b)))
    assert a.read_bytes() == b.read_bytes()


def test_no_domain_math_recomputation_tampered_summary_changes_curve(tmp_path):
    # tampering with the analytic array must move the drawn curve: the plot
    # reads the numbers, it never recomputes them
    clean = make_summary(tmp_path / "clean.json")
    tampered = make_summary(tmp_path / "tampered.json", analytic_offset=0.5)
    out_a, out_b = tmp_path / "clean.png", tmp_path / "tampered.png"
    plot(FigureSpec(kind="value_fn", inputs={"summary": str(clean)}, out=str(out_a)))
    plot(FigureSpec(kind="value_fn", inputs={"summary": str(tampered)}, out=str(out_b)))
    assert out_a.read_bytes() != out_b.read_bytes()


# ---------------------------------------------------------------- schema drift


def test_hist_schema_drift_fails_loudly(tmp_path):
    hist = make_hist(tmp_path / "hist.json")
    doc = json.loads(hist.read_text())
    del doc["control_learned"]
    hist.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="control_learned"):
        load_hist(hist)


def test_hist_length_mismatch_fails(tmp_path):
    hist = make_hist(tmp_path / "hist.json")
    doc = json.loads(hist.read_text())
    doc["counts"] = doc["counts"][:-1]
    hist.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="counts"):
        load_hist(hist)


def test_metrics_schema_drift_fails(tmp_path):
    metrics = make_metrics(tmp_path / "metrics.csv")
    rows = list(csv.reader(open(metrics)))
    rows[0][3] = "renamed_column"
    with open(metrics, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    with pytest.raises(SchemaError, match="abs_mean_error"):
        load_error_curve(metrics)


def test_summary_schema_drift_fails(tmp_path):
    summary = make_summary(tmp_path / "summary.json")
    doc = json.loads(summary.read_text())
    del doc["value_probe"]["analytic"]
    summary.write_text(json.dumps(doc))
    with pytest.raises(SchemaError, match="analytic"):
        load_summary(summary)


# ------------------------------------------------------------------------ cli


def test_cli_all_three_kinds(tmp_path):
    hist = make_hist(tmp_path / "hist.json")
    metrics = make_metrics(tmp_path / "metrics.csv")
    summary = make_summary(tmp_path / "summary.json")
    assert main(["control-hist", "--hist", str(hist), "--out", str(tmp_path / "1.png")]) == 0
    assert main(["mean-error", "--metrics", str(metrics), "--out", str(tmp_path / "2.png")]) == 0
    assert main(["value-fn", "--summary", str(summary), "--out", str(tmp_path / "3.png")]) == 0
    for name in ("1.png", "2.png", "3.png"):
        assert (tmp_path / name).exists()


def test_cli_schema_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert main(["control-hist", "--hist", str(bad), "--out", str(tmp_path / "x.png")]) == 2
