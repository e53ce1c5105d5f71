import json

import numpy as np
import pytest

from wnlocal.errors import ArgumentError
from wnlocal.kernels import KernelFamily
from wnlocal.localtime import (
    BinSpec,
    LocalTimeField,
    bin_index,
    estimate_localtime,
    estimate_weighted_localtime,
    ibp_residual,
    occupation_residual,
)
from wnlocal.simulate import sample_paths, uniform_grid


@pytest.fixture(scope="module")
def fbm_paths():
    return sample_paths(KernelFamily.fbm(0.7), uniform_grid(1.0, 512), 64, seed=9)


@pytest.fixture(scope="module")
def bm_paths():
    return sample_paths(KernelFamily.bm(), uniform_grid(1.0, 512), 64, seed=10)


def test_bin_edges_anchor_the_level():
    edges = BinSpec(0.1, level=0.25).edges(np.array([-0.3, 0.9]), 1.0)
    centers = 0.5 * (edges[1:] + edges[:-1])
    assert np.any(np.isclose(centers, 0.25, atol=1e-15))
    assert edges[0] <= -0.3 and edges[-1] >= 0.9
    assert np.allclose(np.diff(edges), 0.1)
    assert bin_index(np.array([edges[0] - 1e-9, edges[-1] + 1e-9]), edges).tolist() == [-1, -1]


def test_conservation(fbm_paths):
    f = estimate_localtime(fbm_paths, BinSpec(0.05))
    # sum of bins times width is the elapsed time, exactly (up to summation order)
    assert np.allclose(f.mass(), 1.0, rtol=0, atol=1e-12)
    mid = f.values[:, :, 256].sum(axis=1) * f.binwidth
    assert np.allclose(mid, f.times[256], atol=1e-12)
    g = estimate_weighted_localtime(fbm_paths, BinSpec(0.05))
    assert np.allclose(g.mass(), 1.0, atol=1e-12)  # R_1 - R_0


def test_bm_weighted_equals_unweighted(bm_paths):
    a = estimate_localtime(bm_paths, BinSpec(0.05), record_times="final")
    b = estimate_weighted_localtime(bm_paths, BinSpec(0.05), record_times="final")
    assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-12)


def test_nonnegative_and_monotone(fbm_paths):
    f = estimate_localtime(fbm_paths, BinSpec(0.1))
    assert np.all(f.values >= 0)
    assert np.all(np.diff(f.values, axis=2) >= -1e-15)
    assert np.all(f.values[:, :, 0] == 0)


def test_far_level_is_zero(fbm_paths):
    f = estimate_localtime(fbm_paths, BinSpec(0.1), record_times="final")
    assert np.all(f.at_level(50.0) == 0.0)
    with pytest.raises(ArgumentError):
        f.bin_of(50.0)


def test_record_times(fbm_paths):
    full = estimate_localtime(fbm_paths, BinSpec(0.1))
    part = estimate_localtime(fbm_paths, BinSpec(0.1), record_times=[0.5, 1.0])
    assert np.array_equal(part.values[:, :, -1], full.values[:, :, -1])
    assert np.array_equal(part.values[:, :, 0], full.values[:, :, 256])
    final = estimate_localtime(fbm_paths, BinSpec(0.1), record_times="final")
    assert np.allclose(final.values[:, :, 0], full.values[:, :, -1], atol=1e-13)
    with pytest.raises(ArgumentError):
        estimate_localtime(fbm_paths, BinSpec(0.1), record_times=[0.3337])


def test_occupation_piecewise_constant(fbm_paths):
    # phi constant on bins: the identity holds exactly
    f = estimate_localtime(fbm_paths, BinSpec(0.1), record_times="final")
    phi = lambda x: np.floor((np.asarray(x) - f.edges[0]) / f.binwidth) ** 2
    for p in range(5):
        assert occupation_residual(fbm_paths.paths[p], phi, f, path_index=p) < 1e-12
    one = lambda x: np.ones_like(np.asarray(x, dtype=float))
    assert occupation_residual(fbm_paths.paths[0], one, f) < 1e-14
    with pytest.raises(ArgumentError):
        occupation_residual(fbm_paths.paths[0], one, f, weighting="dR")


def test_occupation_smooth_converges(fbm_paths):
    res = []
    for w in (0.2, 0.1, 0.05, 0.025):
        f = estimate_localtime(fbm_paths, BinSpec(w), record_times="final")
        res.append(np.mean([occupation_residual(fbm_paths.paths[p], np.square, f, path_index=p)
                            for p in range(fbm_paths.n_paths)]))
    assert all(x > y for x, y in zip(res, res[1:]))


def test_ibp_bm_vanishes(bm_paths):
    assert ibp_residual(bm_paths, 0.0, bins=BinSpec(0.05)) == pytest.approx(0.0, abs=1e-12)


def test_ibp_fbm_small(fbm_paths):
    r = ibp_residual(fbm_paths, 0.3, bins=BinSpec(0.05))
    f = estimate_weighted_localtime(fbm_paths, BinSpec(0.05, level=0.3), record_times="final")
    assert r <= 1e-3 * max(f.at_level(0.3).mean(), 1e-3) + 1e-4


def test_csv_round_trip(tmp_path, fbm_paths):
    f = estimate_localtime(fbm_paths, BinSpec(0.2), record_times=[0.5, 1.0])
    f.to_csv(tmp_path / "lt.csv")
    head = (tmp_path / "lt.csv").read_text().splitlines()[0]
    assert head == "level,time,value"
    side = json.loads((tmp_path / "lt.json").read_text())
    assert side["weighting"] == "lebesgue"
    back = LocalTimeField.from_csv(tmp_path / "lt.csv")
    assert np.array_equal(back.mean(), f.mean())
    assert np.array_equal(back.edges, f.edges)


def test_rejects_bad_input(fbm_paths):
    with pytest.raises(ArgumentError):
        estimate_localtime(fbm_paths, BinSpec(-1.0))
    with pytest.raises(ArgumentError):
        estimate_localtime(fbm_paths, "wide")
