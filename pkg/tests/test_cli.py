from __future__ import annotations

import csv
import json

from covdsm.cli import EXIT_ASSERTION, EXIT_CONFIG, EXIT_OK, load_preset, main
from covdsm.solver import benchmark_config, example41_config, prop73_config


def quick_config_file(tmp_path, **overrides):
    cfg = benchmark_config(True, seed=0)
    cfg.k_max = 25
    raw = cfg.to_dict()
    raw.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(raw))
    return path


def test_presets_match_library_configs():
    assert load_preset("appendixA2-cdsm")["config"] == benchmark_config(True).to_dict()
    assert load_preset("appendixA2-dsm")["config"] == benchmark_config(False).to_dict()
    assert load_preset("example41-rdsm")["config"] == example41_config().to_dict()
    assert load_preset("prop73-generic")["config"] == prop73_config().to_dict()


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "artifacts"
    code = main(
        ["run", "--problem", "ptest1", "--config", str(quick_config_file(tmp_path)), "--out", str(out)]
    )
    assert code == EXIT_OK
    for name in ("trace.jsonl", "summary.json", "curves.csv", "history.jsonl", "manifest.json",
                 "convergence.png", "step_ratios.png"):
        assert (out / name).exists(), name
    summary = json.loads((out / "summary.json").read_text())
    assert summary["problem"] == "ptest1"


def test_run_is_byte_deterministic(tmp_path):
    cfgfile = quick_config_file(tmp_path)
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", "--problem", "ptest1", "--config", str(cfgfile), "--out", str(out1)])
    main(["run", "--problem", "ptest1", "--config", str(cfgfile), "--out", str(out2)])
    assert (out1 / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()
    assert (out1 / "curves.csv").read_bytes() == (out2 / "curves.csv").read_bytes()


def test_manifest_roundtrip_reproduces_trace(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["run", "--problem", "ptest1", "--config", str(quick_config_file(tmp_path)), "--out", str(out1)])
    code = main(["run", "--config", str(out1 / "manifest.json"), "--out", str(out2)])
    assert code == EXIT_OK
    assert (out1 / "trace.jsonl").read_bytes() == (out2 / "trace.jsonl").read_bytes()


def test_run_infeasible_start_exits_2(tmp_path):
    cfgfile = quick_config_file(tmp_path, x0=[-5.0, 0.0])
    code = main(["run", "--problem", "ptest2", "--config", str(cfgfile), "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_run_without_config_exits_2(tmp_path):
    assert main(["run", "--problem", "ptest1", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_curves_csv_roundtrips_losslessly(tmp_path):
    out = tmp_path / "artifacts"
    main(["run", "--problem", "ptest1", "--config", str(quick_config_file(tmp_path)), "--out", str(out)])
    with open(out / "curves.csv") as fh:
        rows = list(csv.DictReader(fh))
    trace = [json.loads(line) for line in (out / "trace.jsonl").read_text().splitlines()]
    assert len(rows) == len(trace)
    for row, rec in zip(rows, trace):
        assert float(row["best_f"]) == rec["best_f"]
        assert float(row["delta"]) == rec["delta"]
        assert int(row["unique_evals"]) == rec["unique_evals"]


def test_bench_single_replication(tmp_path):
    out = tmp_path / "bench"
    cfg = benchmark_config(True)
    code = main(["bench", "--problem", "ptest1", "--reps", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "summary-cdsm-0.json").exists()
    assert (out / "summary-dsm-0.json").exists()
    assert (out / "convergence.png").exists()
    with open(out / "aggregate.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert set(rows[0]) == {"run", "method", "seed", "final_f", "unique_evals", "final_set", "termination"}
    assert {r["method"] for r in rows} == {"cdsm", "dsm"}
    assert all(r["final_set"] in ("1", "2") for r in rows)
    summary = json.loads((out / "summary-cdsm-0.json").read_text())
    assert cfg.to_dict() == summary["config"]
    # aggregate floats parse back to the summary values exactly
    crow = next(r for r in rows if r["method"] == "cdsm")
    assert float(crow["final_f"]) == summary["final_f"]
    assert int(crow["unique_evals"]) == summary["unique_evaluations"]


def test_bench_respects_thread_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("COVDSM_THREADS", "2")
    out = tmp_path / "bench-mp"
    code = main(["bench", "--problem", "smooth_norm2", "--reps", "1", "--out", str(out)])
    assert code == EXIT_OK
    assert (out / "aggregate.csv").exists()


def test_verify_oracle_reference_grid(tmp_path):
    out = tmp_path / "beta"
    code = main(["verify-oracle", "--oracle", "exact-grid-ref", "--trials", "6", "--seed", "1", "--out", str(out)])
    assert code == EXIT_OK
    with open(out / "beta_report.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 6
    assert all(float(r["ratio"]) == 1.0 for r in rows)


def test_verify_oracle_truncated_passes():
    assert main(["verify-oracle", "--oracle", "truncated", "--trials", "6", "--seed", "1"]) == EXIT_OK


def test_verify_oracle_broken_spec_exits_3(tmp_path):
    # two samples cannot reliably reach 99% of the grid maximum
    spec = {"kind": "alpha-sampled", "r": 1.0, "alpha": 0.99, "budget": 2, "sampler": "uniform"}
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(spec))
    assert main(["verify-oracle", "--oracle", str(path), "--trials", "10", "--seed", "0"]) == EXIT_ASSERTION


def test_verify_oracle_unknown_name_exits_2():
    assert main(["verify-oracle", "--oracle", "does-not-exist"]) == EXIT_CONFIG


def test_replay_example41_passes(tmp_path, capsys):
    code = main(["replay-example41", "--out", str(tmp_path / "replay")])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "fill distance" in printed
    assert (tmp_path / "replay" / "trace.jsonl").exists()


def test_preset_run_example41(tmp_path):
    code = main(["run", "--preset", "example41-rdsm", "--out", str(tmp_path / "r")])
    assert code == EXIT_OK
    summary = json.loads((tmp_path / "r" / "summary.json").read_text())
    assert summary["problem"] == "example41"
