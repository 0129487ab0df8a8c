"""Acceptance suite: every criterion checked at its stated tolerance.

Each test prints one PASS/FAIL line (run pytest with -s to see them inline;
they also appear in captured output on failure).
"""

from __future__ import annotations

import statistics
import time

import numpy as np
import pytest

from covdsm.analysis import detect_refined_points, fill_distance, history_points_up_to
from covdsm.oracles import OracleSpec, distance_transform_sq_int, verify_beta
from covdsm.problems import get_problem, problem_names
from covdsm.replay import replay_fill_distance, run_example41_replay
from covdsm.solver import SolverConfig, benchmark_config, prop73_config, run


def report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {num} ({name}): {detail}"


# -- shared benchmark runs (timed; budgets asserted by their criteria) --------


@pytest.fixture(scope="module")
def ptest1_bench():
    t0 = time.perf_counter()
    prob = get_problem("ptest1")
    runs = {
        method: [run(prob, benchmark_config(method == "cdsm", seed=s)) for s in range(10)]
        for method in ("cdsm", "dsm")
    }
    return runs, time.perf_counter() - t0


@pytest.fixture(scope="module")
def ptest2_bench():
    t0 = time.perf_counter()
    prob = get_problem("ptest2")
    runs = {
        method: [run(prob, benchmark_config(method == "cdsm", seed=s)) for s in range(10)]
        for method in ("cdsm", "dsm")
    }
    return runs, time.perf_counter() - t0


# -- criterion 1: exact replay of the two-trap construction -------------------


def test_criterion_1_example41_replay():
    t0 = time.perf_counter()
    result, checks = run_example41_replay(q_max=10)
    elapsed = time.perf_counter() - t0
    failures = [c for c in checks if not c.ok]
    fd = replay_fill_distance(result)
    ok = not failures and fd > 0.1 and elapsed < 1.0
    detail = (
        f"{len(checks)} closed-form checks, {len(failures)} mismatches; "
        f"fill distance near the trap {fd:.3f}; {elapsed:.2f} s"
    )
    if failures:
        detail += f"; first mismatch: {failures[0].name} {failures[0].detail}"
    report(1, "two-trap replay", ok, detail)


# -- criterion 2: oracle distance-ratio certification --------------------------


def test_criterion_2_oracle_beta_certification():
    t0 = time.perf_counter()
    ref = OracleSpec(kind="exact-grid", r=1.0, spacing=1.0 / 200.0)
    trunc = OracleSpec(kind="truncated", r=1.0, inner=ref, delta_r=1.0)
    alpha = OracleSpec(kind="alpha-sampled", r=1.0, alpha=0.5, budget=256)

    rows = {}
    for name, spec in (("exact-grid", ref), ("truncated", trunc), ("alpha", alpha)):
        rows[name] = []
        for n in (2, 3):
            _, part = verify_beta(spec, 100, n, seed=1000 + n)
            rows[name].extend(part)
    elapsed = time.perf_counter() - t0

    exact_ok = all(r["ratio"] == 1.0 for r in rows["exact-grid"])
    trunc_min = min(r["ratio"] for r in rows["truncated"])
    trunc_ok = trunc_min >= 1.0 / 3.0 - 0.02
    alpha_hits = sum(1 for r in rows["alpha"] if r["ratio"] >= 0.5)
    alpha_ok = alpha_hits >= 195
    ok = exact_ok and trunc_ok and alpha_ok and elapsed < 30.0
    report(
        2,
        "oracle beta certification",
        ok,
        f"exact-grid all ratios == 1.0: {exact_ok}; truncated min {trunc_min:.4f} >= {1/3 - 0.02:.4f}; "
        f"alpha {alpha_hits}/200 trials >= 0.5; {elapsed:.1f} s < 30 s",
    )


# -- criterion 3: distance-transform equivalence -------------------------------


def test_criterion_3_distance_transform_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    mismatches = 0
    for trial in range(50):
        density = rng.uniform(0.005, 0.3)
        occ = rng.random((64, 64)) < density
        if not occ.any():
            occ[rng.integers(64), rng.integers(64)] = True
        got = distance_transform_sq_int(occ)
        # independent pairwise reference on squared integer distances
        src = np.argwhere(occ)
        ii, jj = np.meshgrid(np.arange(64), np.arange(64), indexing="ij")
        cells = np.stack([ii.ravel(), jj.ravel()], axis=1)
        d2 = (cells[:, None, 0] - src[None, :, 0]) ** 2 + (cells[:, None, 1] - src[None, :, 1]) ** 2
        want = d2.min(axis=1).reshape(64, 64)
        if not np.array_equal(got, want):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 10.0
    report(3, "distance transform equivalence", ok, f"{mismatches}/50 grids differ; {elapsed:.1f} s < 10 s")


# -- criterion 4: first benchmark problem --------------------------------------


def test_criterion_4_ptest1_benchmark(ptest1_bench):
    runs, elapsed = ptest1_bench
    finals = {m: [r.final_f for r in rs] for m, rs in runs.items()}
    evals = {m: [r.unique_evaluations for r in rs] for m, rs in runs.items()}
    all_converged = all(f <= 1e-6 for fs in finals.values() for f in fs)
    med_c = statistics.median(evals["cdsm"])
    med_d = statistics.median(evals["dsm"])
    ratio = med_c / med_d
    ok = all_converged and ratio <= 1.5 and elapsed < 60.0
    report(
        4,
        "first benchmark, matched seeds",
        ok,
        f"worst final f: covering {max(finals['cdsm']):.2g}, plain {max(finals['dsm']):.2g} (<= 1e-6); "
        f"median evals {med_c} vs {med_d}, ratio {ratio:.2f} <= 1.5; {elapsed:.1f} s < 60 s",
    )


# -- criterion 5: second benchmark problem --------------------------------------


def test_criterion_5_ptest2_benchmark(ptest2_bench):
    runs, elapsed = ptest2_bench
    cd_good = sum(1 for r in runs["cdsm"] if r.final_set == 2 and r.final_f <= 0.05)
    dsm_stuck = sum(1 for r in runs["dsm"] if r.final_set == 1 and r.final_f >= 0.9)
    ok = cd_good >= 9 and dsm_stuck >= 1 and elapsed < 120.0
    report(
        5,
        "second benchmark, slab discovery",
        ok,
        f"covering runs in the low set with f <= 0.05: {cd_good}/10 (>= 9); "
        f"plain runs stuck in the start set with f >= 0.9: {dsm_stuck}/10 (>= 1); {elapsed:.1f} s < 120 s",
    )


# -- criterion 6: empirical covering density -----------------------------------


def test_criterion_6_covering_density(ptest1_bench):
    runs, _ = ptest1_bench
    res = runs["cdsm"][0]
    rep = detect_refined_points(res.iterations)
    assert rep.candidates, "no refined-point candidate detected"
    xstar = rep.candidates[-1].point
    r = res.config.r
    fds = []
    for checkpoint in (30, 100, 300):
        pts = history_points_up_to(res.history, checkpoint)
        fds.append(fill_distance(pts, xstar, r, r / 40.0))
    nonincreasing = all(b <= a for a, b in zip(fds, fds[1:]))
    final_ok = fds[-1] <= 0.25 * r
    ok = nonincreasing and final_ok
    report(
        6,
        "covering density at checkpoints",
        ok,
        f"fill distances {[round(v, 4) for v in fds]} nonincreasing: {nonincreasing}; "
        f"final {fds[-1]:.4f} <= {0.25 * r:.4f}",
    )


# -- criterion 7: thin-ray counterexample --------------------------------------


def test_criterion_7_thin_ray_counterexample():
    t0 = time.perf_counter()
    res = run(get_problem("prop73"), prop73_config())
    elapsed = time.perf_counter() - t0
    origin = np.zeros(2).tobytes()
    stayed = all(rec.x.tobytes() == origin and rec.x_next.tobytes() == origin for rec in res.iterations)
    ok = stayed and len(res.iterations) == 100 and elapsed < 1.0
    report(
        7,
        "thin-ray counterexample stays at origin",
        ok,
        f"{len(res.iterations)} iterations, origin kept bit-exactly: {stayed}; {elapsed:.2f} s < 1 s",
    )


# -- criterion 8: solver invariant suite ----------------------------------------


def _invariant_config(variant: str, seed: int) -> SolverConfig:
    return SolverConfig(
        variant=variant,
        r=0.1,
        delta0=1.0,
        tau=0.5,
        covering=OracleSpec(kind="exact-grid", r=0.1, spacing=0.004),
        search="momentum",
        poll="orthogonal",
        delta_min=1e-9,
        k_max=40,
        seed=seed,
    )


def test_criterion_8_invariant_suite():
    t0 = time.perf_counter()
    problems = problem_names()
    issues = []
    total = 0
    for name in problems:
        prob = get_problem(name)
        for variant in ("mesh-based", "sufficient-decrease"):
            for seed in range(5):
                cfg = _invariant_config(variant, seed)
                res = run(prob, cfg)
                total += 1
                label = f"{name}/{variant}/seed{seed}"
                fs = [rec.f_x for rec in res.iterations]
                if not all(b <= a for a, b in zip(fs, fs[1:])):
                    issues.append(f"{label}: objective increased")
                dmins = [rec.delta_min_radius for rec in res.iterations]
                if not all(b <= a for a, b in zip(dmins, dmins[1:])):
                    issues.append(f"{label}: smallest radius increased")
                for rec in res.iterations:
                    if rec.success and not rec.f_next < rec.f_x - rec.margin:
                        issues.append(f"{label}: margin violated at k={rec.k}")
                    if not rec.success and rec.x_next.tobytes() != rec.x.tobytes():
                        issues.append(f"{label}: failed iteration moved at k={rec.k}")
                if variant == "mesh-based":
                    mesh = cfg.mesh_spec()
                    for rec in res.iterations:
                        cell = min(rec.delta_min_radius, rec.delta_min_radius**2 / cfg.delta0)
                        for out in rec.outcomes:
                            for p in out.points:
                                off = (p - rec.x) / cell
                                if np.max(np.abs(off - np.round(off))) * cell >= 1e-12:
                                    issues.append(f"{label}: off-mesh trial at k={rec.k}")
                repeat = run(prob, _invariant_config(variant, seed))
                if repeat.trace_jsonl() != res.trace_jsonl():
                    issues.append(f"{label}: trace not byte-identical on repeat")
    elapsed = time.perf_counter() - t0
    ok = not issues and elapsed < 60.0
    detail = f"{total} runs x 2 repetitions, {len(issues)} violations; {elapsed:.1f} s < 60 s"
    if issues:
        detail += f"; first: {issues[0]}"
    report(8, "solver invariant suite", ok, detail)
