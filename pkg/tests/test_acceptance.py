"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N: PASS|FAIL ...`` line; the lines are printed
in the pytest terminal summary and by ``python tests/test_acceptance.py``.
"""
import hashlib
import os
import subprocess
import sys
import time

import pytest

from tcdmap import validation

LINES = []

pytestmark = pytest.mark.acceptance


def record(number, title, passed, detail):
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}  {detail}"
    LINES.append(line)
    print(line)
    return passed


def test_criterion_1_stochasticity():
    c = validation.check_stochasticity()
    ok = c.passed and c.seconds < 10
    assert record(1, "stochasticity", ok, f"max row-sum error {c.value:.2e} < 1e-10, {c.seconds:.1f}s < 10s")


def test_criterion_2_distance_preservation():
    c = validation.check_distance_preservation()
    ok = c.passed and c.seconds < 30
    assert record(2, "distance preservation", ok,
                  f"max relative error {c.value:.2e} < 1e-8, {c.seconds:.1f}s < 30s")


def test_criterion_3_unit_operator_norm():
    c = validation.check_unit_norm()
    d = c.details
    assert record(3, "unit operator norm", c.passed,
                  f"|s0-1| {c.value:.2e} < 1e-8, u0 {d['u0_error']:.2e} v0 {d['v0_error']:.2e} < 1e-6")


def test_criterion_4_static_reduction():
    c = validation.check_static_reduction()
    assert record(4, "one-step reduction to static map", c.passed, f"max distance gap {c.value:.2e} < 1e-8")


def test_criterion_5_matrix_free():
    a = validation.check_matrix_free()
    b = validation.check_stationary()
    assert record(5, "matrix-free apply and stationary", a.passed and b.passed,
                  f"apply rel {a.value:.2e} < 1e-12, stationary l1 {b.value:.2e} < 1e-8")


@pytest.mark.slow
def test_criterion_6_heat_convergence():
    t0 = time.perf_counter()
    c = validation.check_heat_convergence()
    z = validation.check_heat_mode_zero()
    elapsed = time.perf_counter() - t0
    errs = ", ".join(f"{e:.3e}" for e in c.details["errors"])
    ok = c.passed and z.passed and elapsed < 300
    assert record(6, "heat flow convergence", ok,
                  f"errors [{errs}] decreasing={c.details['strictly_decreasing']} final < "
                  f"{c.threshold:g}; k=0 error {z.value:.1e} < 1e-10; {elapsed:.0f}s < 300s")


def test_criterion_7_expansions():
    c = validation.check_expansions()
    d = c.details
    ok = c.passed and c.seconds < 60
    assert record(7, "expansion slopes", ok,
                  f"short-time {d['short_time_slope']:.3f} >= 1.9, product {d['product_slope']:.3f} >= 0.9")


@pytest.mark.slow
def test_criterion_8_barbell():
    c = validation.check_barbell()
    d = c.details
    ok = c.passed and c.seconds < 300
    assert record(8, "barbell class recovery", ok,
                  f"tc purity {d['tc_purity']:.4f} >= 0.95, concat purity {d['concat_purity']:.4f} < tc, "
                  f"{c.seconds:.0f}s < 300s")


def _run_cli(args, threads=None, cwd=None):
    env = dict(os.environ)
    if threads is not None:
        for var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
            env[var] = str(threads)
    proc = subprocess.run([sys.executable, "-m", "tcdmap", *args], env=env, cwd=cwd,
                          capture_output=True, text=True)
    return proc.returncode


def _csv_digests(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for name in files:
            if name.endswith(".csv"):
                path = os.path.join(dirpath, name)
                with open(path, "rb") as fh:
                    out[os.path.relpath(path, root)] = hashlib.sha256(fh.read()).hexdigest()
    return out


def _acceptance_runs(root, threads):
    data = os.path.join(root, "barbell")
    codes = [
        _run_cli(["generate", "barbell", "--n", "2000", "--m", "9", "--seed", "0", "--out", data], threads),
        _run_cli(["embed", data, "--method", "tc", "--t", "9", "--rank", "3", "--epsilon",
                  str(validation.BARBELL_EPSILON), "--out", os.path.join(root, "tc")], threads),
        _run_cli(["embed", data, "--method", "concat", "--t", "9", "--rank", "3", "--epsilon",
                  str(4 * validation.BARBELL_EPSILON), "--out", os.path.join(root, "concat")], threads),
        _run_cli(["validate", "heat", "--out", os.path.join(root, "heat")], threads),
    ]
    return codes, _csv_digests(root)


@pytest.mark.slow
def test_criterion_9_determinism(tmp_path):
    runs = {}
    for label, threads in (("default", None), ("default-repeat", None), ("1-thread", 1), ("4-threads", 4)):
        codes, digests = _acceptance_runs(str(tmp_path / label), threads)
        assert codes == [0, 0, 0, 0], f"{label}: exit codes {codes}"
        runs[label] = digests
    reference = runs["default"]
    same = all(d == reference for d in runs.values())
    assert record(9, "determinism", same and len(reference) >= 14,
                  f"{len(reference)} CSV files byte-identical across {len(runs)} runs "
                  "(repeat, 1 and 4 BLAS threads)" if same else "CSV outputs differ between runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
