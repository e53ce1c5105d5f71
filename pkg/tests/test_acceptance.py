"""Acceptance suite: one test and one printed PASS/FAIL line per criterion.

Tolerances and runtime budgets are pinned here. Monte Carlo criteria run
the shipped configs through the same runners as the CLI.
"""
import dataclasses
import math
import time
from pathlib import Path

import numpy as np
import pytest

from wnlocal import chaos
from wnlocal.cli import run
from wnlocal.config import load_config, parse_config
from wnlocal.experiments import RUNNERS
from wnlocal.hermite import hermite_bound_ratio, hermite_functions, hermite_quadrature_matrix
from wnlocal.kernels import KernelFamily, covariance_via_parseval
from wnlocal.localtime import BinSpec, estimate_weighted_localtime, ibp_residual
from wnlocal.simulate import sample_paths, uniform_grid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SQRT_2_PI = math.sqrt(2 / math.pi)


def _report(capsys, n, ok, detail, elapsed, budget):
    ok_time = elapsed <= budget
    status = "PASS" if ok and ok_time else "FAIL"
    with capsys.disabled():
        print(f"\ncriterion {n:2d}: {status}  {detail}  [{elapsed:.1f}s / {budget:g}s]")
    assert ok, detail
    assert ok_time, f"runtime {elapsed:.1f}s over budget {budget:g}s"


def _levels_row(outcome, level):
    t = outcome.tables["levels"]
    cols = dict(zip(t.header, t.columns))
    i = int(np.flatnonzero(cols["level"] == level)[0])
    return {k: float(v[i]) for k, v in cols.items()}


def test_1_hermite_orthonormality(capsys):
    t0 = time.perf_counter()
    Q, x = hermite_quadrature_matrix(60, 200)
    err = float(np.max(np.abs(Q @ hermite_functions(60, x).T - np.eye(61))))
    _report(capsys, 1, err <= 1e-8, f"max |<e_j,e_k> - delta_jk| = {err:.2e} (tol 1e-8)",
            time.perf_counter() - t0, 5)


def test_2_hermite_bound(capsys):
    t0 = time.perf_counter()
    b = hermite_bound_ratio(kmax=200, xmax=50.0, gamma=0.4)
    ratio = math.exp(min(b.log_ratio, 700.0))
    _report(capsys, 2, b.log_ratio <= math.log(10.0),
            f"sup ratio = {ratio:.3g} at k={b.k}, x={b.x:.3g} with gamma=0.4 (tol 10)",
            time.perf_counter() - t0, 10)


def test_3_parseval_identity(capsys):
    t0 = time.perf_counter()
    g = np.linspace(0.1, 1.0, 5)
    worst_bm = max(abs(covariance_via_parseval(0.5, t, s).value - min(t, s)) for t in g for s in g)
    worst_rel = 0.0
    for H in (0.25, 0.75):
        k = KernelFamily.fbm(H)
        for t in g:
            for s in g:
                c = float(k.covariance(t, s))
                worst_rel = max(worst_rel, abs(covariance_via_parseval(H, t, s).value - c) / abs(c))
    ok = worst_bm <= 1e-3 and worst_rel <= 1e-3
    _report(capsys, 3, ok, f"H=1/2 max abs err {worst_bm:.2e}; fBm max rel err {worst_rel:.2e} (tol 1e-3)",
            time.perf_counter() - t0, 30)


def test_4_tanaka_expectation(capsys):
    t0 = time.perf_counter()
    ks = [KernelFamily.bm(), KernelFamily.fbm(0.3), KernelFamily.fbm(0.7), KernelFamily.vgamma(0.5)]
    worst = max(abs(chaos.folded_normal_mean(float(k.variance(1.0)), c) - abs(c)
                    - chaos.expected_weighted_localtime(k, c, 1.0)) for k in ks for c in (0.0, 0.5, 1.0))
    _report(capsys, 4, worst <= 1e-6, f"max residual {worst:.2e} (tol 1e-6)", time.perf_counter() - t0, 5)


@pytest.mark.slow
def test_5_expected_localtime(capsys):
    details, ok, longest = [], True, 0.0
    for name in ("localtime_bm.toml", "localtime_fbm_weighted.toml"):
        cfg = load_config(CONFIGS / name)
        t0 = time.perf_counter()
        out = RUNNERS["localtime"](cfg)
        longest = max(longest, time.perf_counter() - t0)
        row = _levels_row(out, 0.0)
        rel = abs(row["estimate"] - SQRT_2_PI) / SQRT_2_PI
        ok = ok and rel <= 0.05
        details.append(f"{cfg.kernel.label()} {cfg.params['weighting']}: {row['estimate']:.4f} "
                       f"({100 * rel:.1f}% off)")
    _report(capsys, 5, ok, "; ".join(details) + " (tol 5%)", longest, 120)


@pytest.mark.slow
def test_6_occupation(capsys):
    cfg = load_config(CONFIGS / "occupation_fbm.toml")
    t0 = time.perf_counter()
    out = RUNNERS["occupation"](cfg)
    worst = max(c.value for c in out.checks if "residual" in c.name and "decreases" not in c.name)
    dec = all(c.passed for c in out.checks if "decreases" in c.name)
    _report(capsys, 6, out.passed, f"piecewise-constant max residual {worst:.1e} (tol 1e-12); "
            f"x^2 residual decreasing in both weightings: {dec}", time.perf_counter() - t0, 60)


@pytest.mark.slow
def test_7_ito_quadratic(capsys):
    base = load_config(CONFIGS / "ito_quadratic_fbm.toml")
    t0 = time.perf_counter()
    details, ok = [], True
    for k in (KernelFamily.bm(), KernelFamily.fbm(0.7)):
        out = RUNNERS["ito-quadratic"](dataclasses.replace(base, kernel=k))
        rel = out.tables["ito"].columns[3]
        ok = ok and out.passed
        details.append(f"{k.label()}: " + ", ".join(f"{r:.4f}" for r in rel))
    _report(capsys, 7, ok, "relative L2 errors over 2^8..2^12 -> " + "; ".join(details) + " (final tol 0.02)",
            time.perf_counter() - t0, 180)


@pytest.mark.slow
def test_8_chaos_second_moment(capsys):
    cfg = load_config(CONFIGS / "chaos_variance_fbm.toml")
    t0 = time.perf_counter()
    out = RUNNERS["chaos-variance"](cfg)
    o = out.outputs
    rel = abs(o["series"] - o["monte_carlo"]) / o["monte_carlo"]
    _report(capsys, 8, rel <= 0.10,
            f"series(K=30) {o['series']:.4f} vs Monte Carlo {o['monte_carlo']:.4f} +- {o['monte_carlo_stderr']:.4f}"
            f" (rel {rel:.3f}, tol 0.10); direct {o['direct']:.4f}, binned exact {o['binned_exact']:.4f}",
            time.perf_counter() - t0, 300)


@pytest.mark.slow
def test_9_vgamma_bounds(capsys):
    cfg = load_config(CONFIGS / "kernel_verify_vgamma.toml")
    t0 = time.perf_counter()
    out = RUNNERS["kernel-verify"](cfg)
    names = ", ".join(f"{c.name}: {'ok' if c.passed else 'FAIL'}" for c in out.checks)
    _report(capsys, 9, out.passed, names, time.perf_counter() - t0, 120)


@pytest.mark.slow
def test_10_integration_by_parts(capsys):
    t0 = time.perf_counter()
    g = uniform_grid(1.0, 4096)
    bm = sample_paths(KernelFamily.bm(), g, 1000, seed=31)
    r_bm = ibp_residual(bm, 0.3, bins=BinSpec(0.04))
    k = KernelFamily.fbm(0.7)
    e = sample_paths(k, g, 1000, seed=32)
    r = ibp_residual(e, 0.3, bins=BinSpec(0.04))
    EL = chaos.expected_weighted_localtime(k, 0.3, 1.0)
    ok = r_bm == 0.0 and r <= 0.02 * EL
    _report(capsys, 10, ok, f"bm residual {r_bm:.1e} (exact 0); fbm(0.7) residual {r:.2e} = "
            f"{r / EL:.1e} of E[L_1(0.3)] (tol 0.02)", time.perf_counter() - t0, 120)


def _small(cfg):
    # shrink a shipped config for the rerun comparison; determinism does not depend on size
    if cfg.experiment == "ito-quadratic":
        return dataclasses.replace(cfg, n_paths=64, grid=dataclasses.replace(cfg.grid, n_steps=256),
                                   params={**cfg.params, "exponents": [6, 7, 8]})
    if cfg.experiment == "kernel-verify":
        return dataclasses.replace(cfg, n_paths=min(cfg.n_paths, 200))
    grid = cfg.grid if cfg.grid.times is not None else dataclasses.replace(cfg.grid, n_steps=256)
    return dataclasses.replace(cfg, n_paths=min(cfg.n_paths, 150), grid=grid)


@pytest.mark.slow
def test_11_determinism(tmp_path, monkeypatch, capsys):
    t0 = time.perf_counter()
    files = sorted(CONFIGS.glob("*.toml"))
    mismatches, n_csv = [], 0
    for f in files:
        cfg = _small(load_config(f))
        digests = []
        for tag, threads in (("a", "1"), ("b", "1"), ("c", "4")):
            monkeypatch.setenv("WNLOCAL_THREADS", threads)
            out = tmp_path / f"{f.stem}_{tag}"
            run(cfg, out)
            digests.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        n_csv += len(digests[0])
        if not (digests[0] == digests[1] == digests[2]):
            mismatches.append(f.stem)
    _report(capsys, 11, not mismatches and n_csv > 0,
            f"{len(files)} experiments, {n_csv} CSVs, byte-identical across reruns and 1 vs 4 workers"
            + (f"; mismatches: {mismatches}" if mismatches else ""), time.perf_counter() - t0, 600)
