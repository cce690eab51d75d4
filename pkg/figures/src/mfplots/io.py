"""Schema-validated loaders for the solver's output files.

Every loader checks the exact fields it consumes and fails loudly with a
SchemaError naming what is missing, so silent drift between the solver's
writers and these readers is impossible.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """An input file does not match the expected schema."""


HIST_KEYS = (
    "bins",
    "lo",
    "hi",
    "k",
    "centers",
    "counts",
    "density_analytic",
    "control_learned",
    "control_analytic",
)

SUMMARY_KEYS = ("status", "mode", "analytic", "value_probe")
VALUE_PROBE_KEYS = ("xs", "learned_neg_critic", "analytic")
MEAN_ERROR_COLUMN = "abs_mean_error"


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SchemaError(msg)


def load_hist(path: str | Path) -> dict:
    doc = _load_json(path)
    missing = [k for k in HIST_KEYS if k not in doc]
    _require(not missing, f"histogram file {path} is missing keys {missing}")
    n = len(doc["centers"])
    for key in ("counts", "density_analytic", "control_learned", "control_analytic"):
        _require(
            len(doc[key]) == n,
            f"histogram file {path}: {key} length {len(doc[key])} != centers length {n}",
        )
    return doc


def load_summary(path: str | Path) -> dict:
    doc = _load_json(path)
    missing = [k for k in SUMMARY_KEYS if k not in doc]
    _require(not missing, f"summary file {path} is missing keys {missing}")
    probe = doc["value_probe"]
    missing = [k for k in VALUE_PROBE_KEYS if k not in probe]
    _require(not missing, f"summary file {path}: value_probe is missing {missing}")
    n = len(probe["xs"])
    _require(
        len(probe["learned_neg_critic"]) == n and len(probe["analytic"]) == n,
        f"summary file {path}: value_probe arrays have mismatched lengths",
    )
    return doc


def _load_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc


def load_error_curve(path: str | Path) -> dict:
    """Mean-error trace from either a single-run metrics.csv or aggregate.csv.

    Returns {"step", "error", "band"} where band is the cross-seed standard
    deviation (None for single runs).
    """
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    _require(len(rows) >= 2, f"metrics file {path} has no data rows")
    header, data = rows[0], rows[1:]
    _require(header[0] == "step", f"metrics file {path}: first column must be 'step'")

    def col(name: str) -> np.ndarray:
        idx = header.index(name)
        return np.array([float(r[idx]) for r in data])

    steps = col("step")
    if MEAN_ERROR_COLUMN in header:
        return {"step": steps, "error": col(MEAN_ERROR_COLUMN), "band": None}
    agg = f"{MEAN_ERROR_COLUMN}_mean"
    if agg in header:
        return {"step": steps, "error": col(agg), "band": col(f"{MEAN_ERROR_COLUMN}_std")}
    raise SchemaError(
        f"metrics file {path} has neither {MEAN_ERROR_COLUMN!r} nor {agg!r} columns"
    )
