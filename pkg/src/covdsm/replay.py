"""Exact replay of the two-trap revealing-baseline construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import fill_distance
from .oracles import revealing_index
from .problems import example41
from .solver import RunResult, example41_config, run

ONES = np.ones(2)
TOL = 1e-12


@dataclass
class ReplayCheck:
    name: str
    ok: bool
    detail: str


def predicted_incumbent(q: int) -> np.ndarray:
    return ((-1.0) ** (q - 1)) * (1.0 + 2.0 ** (-(q - 1))) * ONES


def run_example41_replay(q_max: int = 10) -> tuple[RunResult, list[ReplayCheck]]:
    """Run the constructed instance and check its closed-form trajectory.

    For every phase index q: the incumbent and radii match the closed forms,
    the three-iteration success/fail pattern holds, the sequence-index count
    equals 2q, and no evaluated point ever falls strictly inside the open
    unit square (the region both traps fail to cover).
    """
    config = example41_config()
    config.k_max = 3 * q_max + 3
    result = run(example41(), config)
    recs = result.iterations
    checks: list[ReplayCheck] = []

    def check(name, ok, detail=""):
        checks.append(ReplayCheck(name=name, ok=bool(ok), detail=detail))

    for q in range(q_max + 1):
        k = 3 * q
        want_x = predicted_incumbent(q)
        got_x = recs[k].x
        check(
            f"x^{{{k}}}",
            float(np.max(np.abs(got_x - want_x))) <= TOL,
            f"got {got_x.tolist()}, want {want_x.tolist()}",
        )
        check(f"delta^{{{k}}}", abs(recs[k].delta - 4.0 ** (-q)) <= TOL, f"got {recs[k].delta}")
        check(
            f"delta^{{{k + 2}}}",
            abs(recs[k + 2].delta - 0.5 * 4.0 ** (-q)) <= TOL,
            f"got {recs[k + 2].delta}",
        )
        check(
            f"pattern q={q}",
            recs[k].success
            and recs[k].success_step == "search"
            and not recs[k + 1].success
            and not recs[k + 2].success,
            f"steps: {recs[k].success_step}, {recs[k + 1].success}, {recs[k + 2].success}",
        )
        ell = revealing_index([recs[j].delta_min_radius for j in range(k + 1)])
        check(f"ell({k})", ell == 2 * q, f"got {ell}, want {2 * q}")

    inside = [
        rec.point.tolist()
        for rec in result.history.records
        if abs(rec.point[0]) < 1.0 and abs(rec.point[1]) < 1.0
    ]
    check("open unit square untouched", not inside, f"offending points: {inside[:5]}")
    return result, checks


def replay_fill_distance(result: RunResult, probe_spacing: float = 1.0 / 40.0) -> float:
    """Covering radius of the history inside the ball around the (1,1) trap."""
    return fill_distance(result.history, ONES, r=1.0, grid_spacing=probe_spacing)
