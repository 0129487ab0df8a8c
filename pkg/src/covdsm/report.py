"""Delimited outputs and matplotlib figure rendering for run reports."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import best_value_curve, success_ratio_curves

CURVE_COLUMNS = [
    "k",
    "unique_evals",
    "best_f",
    "delta",
    "delta_min",
    "cov_ratio",
    "search_ratio",
    "poll_ratio",
    "fail_ratio",
]

AGGREGATE_COLUMNS = ["run", "method", "seed", "final_f", "unique_evals", "final_set", "termination"]


def _fmt(v) -> str:
    # repr of a float round-trips (17 significant digits)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def curve_rows(iterations) -> list[dict]:
    ratios = success_ratio_curves(iterations)
    rows = []
    for i, rec in enumerate(iterations):
        rows.append(
            {
                "k": rec.k,
                "unique_evals": rec.unique_evals,
                "best_f": rec.best_f,
                "delta": rec.delta if rec.delta is not None else "",
                "delta_min": rec.delta_min_radius if rec.delta_min_radius is not None else "",
                "cov_ratio": float(ratios["covering"][i]),
                "search_ratio": float(ratios["search"][i]),
                "poll_ratio": float(ratios["poll"][i]),
                "fail_ratio": float(ratios["fail"][i]),
            }
        )
    return rows


def write_curves_csv(path, iterations) -> None:
    rows = curve_rows(iterations)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in CURVE_COLUMNS])


def write_aggregate_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in AGGREGATE_COLUMNS])


def write_beta_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "numerator", "denominator", "ratio", "n"])
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in ("trial", "numerator", "denominator", "ratio", "n")])


def _value_axis(ax, values) -> None:
    finite = [v for v in values if np.isfinite(v)]
    if finite and min(finite) > 0:
        ax.set_yscale("log")


def render_convergence_figure(path, labeled_curves: dict[str, list[tuple[int, float]]], title: str) -> None:
    """Best-value-so-far against unique evaluations, one line per labeled run."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    all_vals = []
    for label, curve in labeled_curves.items():
        evals = [c[0] for c in curve]
        vals = [c[1] for c in curve]
        all_vals.extend(vals)
        ax.plot(evals, vals, label=label, lw=1.2)
    _value_axis(ax, all_vals)
    ax.set_xlabel("unique objective evaluations")
    ax.set_ylabel("best value found")
    ax.set_title(title)
    if len(labeled_curves) <= 12:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_ratio_figure(path, iterations, title: str) -> None:
    """The four cumulative step-outcome ratio curves of one run."""
    ratios = success_ratio_curves(iterations)
    ks = [rec.k for rec in iterations]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for name, style in (("covering", "-"), ("search", "--"), ("poll", "-."), ("fail", ":")):
        ax.plot(ks, ratios[name], style, label=f"{name} ratio")
    ax.set_xlabel("iteration")
    ax.set_ylabel("ratio over iterations so far")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def render_run_report(outdir, iterations, label: str) -> list[Path]:
    """Render the standard figure pair for a single run; returns the paths."""
    outdir = Path(outdir)
    conv = outdir / "convergence.png"
    rat = outdir / "step_ratios.png"
    render_convergence_figure(conv, {label: best_value_curve(iterations)}, label)
    render_ratio_figure(rat, iterations, label)
    return [conv, rat]
