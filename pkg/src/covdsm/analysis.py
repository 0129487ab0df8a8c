"""Post-run diagnostics: refined points, covering density, step ratios, curves."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import INF, as_point
from .history import History
from .oracles import _min_dists, grid_directions


@dataclass
class RefinedCandidate:
    point: np.ndarray
    cluster_radius: float
    iterations: list[int]


@dataclass
class RefinedPointReport:
    """Numerical stand-ins for the refined points of a run.

    Candidates are representatives of chronological clusters of incumbents at
    failed iterations whose poll radius had dropped below the threshold; the
    asymptotic notion has no finite-time criterion, so the thresholds used
    are carried along for auditability.
    """

    delta_threshold: float
    cluster_radius: float
    candidates: list[RefinedCandidate] = field(default_factory=list)


def detect_refined_points(
    iterations, delta_threshold: float = 1e-5, cluster_radius: float = 1e-2
) -> RefinedPointReport:
    """Cluster incumbents of failed, small-radius iterations; last point wins."""
    report = RefinedPointReport(delta_threshold=delta_threshold, cluster_radius=cluster_radius)
    for rec in iterations:
        if rec.success or rec.delta is None or rec.delta > delta_threshold:
            continue
        placed = False
        for cand in report.candidates:
            if float(np.linalg.norm(rec.x - cand.point)) <= cluster_radius:
                cand.point = rec.x
                cand.iterations.append(rec.k)
                placed = True
                break
        if not placed:
            report.candidates.append(
                RefinedCandidate(point=rec.x, cluster_radius=cluster_radius, iterations=[rec.k])
            )
    return report


def fill_distance(history, center, r: float, grid_spacing: float) -> float:
    """Empirical covering radius of the history inside cl(B_r(center)).

    Maximum, over a probe grid of the given spacing, of the distance to the
    nearest evaluated point; 0 means the probes themselves were all hit.
    """
    if grid_spacing <= 0 or grid_spacing > r:
        raise ValueError("probe spacing must lie in (0, r]")
    pts = history.points_array() if isinstance(history, History) else np.asarray(history, dtype=np.float64)
    if pts.size == 0:
        return INF
    if pts.ndim == 1:
        pts = pts.reshape(1, -1)
    center = as_point(center)
    k = max(1, round(r / grid_spacing))
    probes = grid_directions(r, k, center.shape[0]) + center
    return float(_min_dists(probes, pts).max())


def history_points_up_to(history: History, k: int) -> np.ndarray:
    """Points of all records with iteration index <= k, insertion order."""
    keep = [i for i, rec in enumerate(history.records) if rec.iteration <= k]
    return history.points_array()[keep]


def success_ratio_curves(iterations) -> dict[str, np.ndarray]:
    """Cumulative per-iteration ratios of step successes and failures.

    At every index the four series sum to one: each iteration is either a
    covering, search, or poll success, or a failure.
    """
    if not iterations:
        raise ValueError("empty trace")
    m = len(iterations)
    counts = {"covering": 0, "search": 0, "poll": 0, "fail": 0}
    out = {key: np.empty(m) for key in counts}
    for i, rec in enumerate(iterations):
        key = rec.success_step if rec.success else "fail"
        counts[key] += 1
        for name in counts:
            out[name][i] = counts[name] / (i + 1)
    return out


def best_value_curve(iterations) -> list[tuple[int, float]]:
    """Pairs (unique evaluations so far, smallest value found so far)."""
    return [(rec.unique_evals, rec.best_f) for rec in iterations]
