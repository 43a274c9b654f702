"""Evaluation metrics: MSE, MAE and percentage of bad pixels."""

from dataclasses import dataclass

import numpy as np


def _pair(pred, truth):
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(truth, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return p, t


def mse(pred, truth):
    """Mean squared error, in squared target units."""
    p, t = _pair(pred, truth)
    return float(np.mean((p - t) ** 2))


def mae(pred, truth):
    """Mean absolute error, in target units."""
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def pbp(pred, truth, delta):
    """Percentage of pixels with |error| strictly greater than delta.

    An error of exactly delta counts as good.  Returned in percent, to match
    how such tables are usually reported.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t) > delta) * 100.0)


@dataclass
class EvalReport:
    """All three metrics for one prediction, with the PBP threshold used."""

    mse: float
    mae: float
    pbp: float
    delta: float


def evaluate(pred, truth, delta=1.0):
    return EvalReport(mse(pred, truth), mae(pred, truth), pbp(pred, truth, delta), delta)


def aggregate(reports):
    """Mean and population std of each metric over a set of reports."""
    if not reports:
        raise ValueError("cannot aggregate an empty report list")
    out = {}
    for name in ("mse", "mae", "pbp"):
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        out[name] = (float(values.mean()), float(values.std()))
    return out


def format_aggregate_table(per_method, delta):
    """Text table of per-method aggregates, metrics as rows.

    per_method maps a column label to a list of EvalReports; cells read
    "mean (std)" like the usual benchmark tables.
    """
    methods = list(per_method)
    stats = {m: aggregate(per_method[m]) for m in methods}
    rows = [("MSE", "mse"), ("MAE", "mae"), (f"PBP(delta={delta:g})%", "pbp")]
    label_w = max(len(r[0]) for r in rows)
    cells = {
        m: {k: f"{stats[m][k][0]:.4g} ({stats[m][k][1]:.4g})" for _, k in rows}
        for m in methods
    }
    col_w = {m: max(len(m), max(len(cells[m][k]) for _, k in rows)) for m in methods}
    lines = [" " * label_w + "  " + "  ".join(m.rjust(col_w[m]) for m in methods)]
    for label, key in rows:
        lines.append(
            label.ljust(label_w)
            + "  "
            + "  ".join(cells[m][key].rjust(col_w[m]) for m in methods)
        )
    return "\n".join(lines)
