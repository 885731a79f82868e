"""Acceptance criteria 1-10, each run from a shipped config with its runtime budget."""

import time
from pathlib import Path

import pytest

from sqlab.cli import build_report, dumps
from sqlab.config import load_config
from sqlab.scenarios import run_scenario, schema_for

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def run_config(name, **override):
    cfg = load_config(CONFIGS / f"{name}.ini", schema_for)
    cfg.params.update(override)
    start = time.perf_counter()
    result = run_scenario(cfg)
    return cfg, result, time.perf_counter() - start


def record(log, key, result, runtime, budget, required=None):
    checks = result.checks if required is None else [c for c in result.checks if c.name in required]
    failing = [c.name for c in checks if not c.passed]
    ok = not failing and runtime < budget and (required is None or len(checks) == len(required))
    detail = f"{len(checks) - len(failing)}/{len(checks)} checks, {runtime:.1f} s (budget {budget:.0f} s)"
    if failing:
        detail += "; failing: " + ", ".join(failing)
    log[key] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
    for c in checks:
        print(f"    {'ok  ' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    return ok


def test_criterion_01_wick_suite(acceptance_log):
    _, res, t = run_config("wick-suite")
    assert record(acceptance_log, "01 hermite/wick", res, t, 10)


def test_criterion_02_spectral_suite(acceptance_log):
    _, res, t = run_config("basis-check")
    assert record(acceptance_log, "02 spectral", res, t, 30)


def test_criterion_03_free_stationarity(acceptance_log):
    _, res, t = run_config("stationarity-free")
    assert record(acceptance_log, "03 free stationarity", res, t, 120, {"free:all_modes_3sigma", "free:lowest_mode_5pct"})


def test_criterion_04_gibbs_stationarity(acceptance_log):
    _, res, t = run_config("stationarity-gibbs")
    assert record(acceptance_log, "04 gibbs stationarity", res, t, 300, {"gibbs:mode2:1", "gibbs:wick:2"})


def test_criterion_05_integration_by_parts(acceptance_log):
    _, res, t = run_config("invariance-suite")
    ibp = {c.name for c in res.checks if c.name.startswith("ibp:")}
    assert len([n for n in ibp if n.startswith("ibp:free:")]) >= 5
    assert len([n for n in ibp if n.startswith("ibp:gibbs:")]) >= 5
    assert record(acceptance_log, "05 integration by parts", res, t, 120)


def test_criterion_06_first_counterexample(acceptance_log):
    _, res, t = run_config("counterexample-1")
    assert res.payload["gap"] > 0
    assert record(acceptance_log, "06 first counterexample", res, t, 120)


def test_criterion_07_second_counterexample(acceptance_log):
    _, res, t = run_config("counterexample-2")
    assert record(acceptance_log, "07 second counterexample", res, t, 60)


def test_criterion_08_generator_agreement(acceptance_log):
    _, res, t = run_config("generator-agreement")
    assert record(acceptance_log, "08 generator agreement", res, t, 60)


def test_criterion_09_ergodicity(acceptance_log):
    _, res, t = run_config("ergodicity")
    assert record(acceptance_log, "09 ergodicity", res, t, 120)


# reduced sizes: determinism does not depend on the sample counts
SMALL = {
    "basis-check": {},
    "wick-suite": {"n_mc": 2000},
    "sq-simulate": {"horizon": 4.0},
    "stationarity-free": {"horizon": 2.0, "burn_in": 0.5, "n_replicas": 8},
    "stationarity-gibbs": {"horizon": 1.0, "burn_in": 0.2, "n_replicas": 4, "n_reference": 2000},
    "ergodicity": {"horizon": 8.0, "n_replicas": 16, "n_outer": 4, "n_inner": 4},
    "invariance-suite": {"n_samples": 2000, "n_generator": 2000},
    "counterexample-1": {"n_mc": 2000, "n_residual": 2000},
    "counterexample-2": {"n_mc": 2000, "n_residual": 2000},
    "generator-agreement": {"truncations": [16, 32]},
}


def test_criterion_10_determinism(acceptance_log):
    start = time.perf_counter()
    mismatched = []
    for name, override in SMALL.items():
        payloads = []
        for _ in range(2):
            cfg, res, _ = run_config(name, **override)
            payloads.append(dumps(build_report(cfg, res)).encode())
        if payloads[0] != payloads[1]:
            mismatched.append(name)
    t = time.perf_counter() - start
    ok = not mismatched
    detail = f"{len(SMALL) - len(mismatched)}/{len(SMALL)} configs byte-identical, {t:.1f} s"
    if mismatched:
        detail += "; differing: " + ", ".join(mismatched)
    acceptance_log["10 determinism"] = (ok, detail)
    print(f"{'PASS' if ok else 'FAIL'} criterion 10 determinism: {detail}")
    assert ok
