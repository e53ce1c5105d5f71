import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from wnlocal.chaos import expected_localtime, expected_weighted_localtime, folded_normal_mean, heat_kernel
from wnlocal.hermite import hermite_functions, sobolev_norm, hermite_coeffs
from wnlocal.kernels import HurstFunction, KernelFamily, gram_matrix
from wnlocal.localtime import BinSpec, bin_index, estimate_localtime
from wnlocal.simulate import sample_paths, uniform_grid

hurst = st.floats(0.05, 0.95)
times = st.floats(0.01, 1.0)
kernels = st.one_of(
    st.just(KernelFamily.bm()),
    st.just(KernelFamily.bridge()),
    hurst.map(KernelFamily.fbm),
    st.floats(0.05, 0.95).map(KernelFamily.vgamma),
    st.tuples(hurst, hurst).map(lambda h: KernelFamily.mbm(HurstFunction.linear(*h))),
)


@given(st.integers(0, 60), st.floats(-30, 30))
def test_hermite_parity(k, x):
    e = hermite_functions(k, np.array([x, -x]))
    assert math.isclose(e[k, 1], (-1) ** k * e[k, 0], rel_tol=1e-12, abs_tol=1e-300)


@given(kernels, times, times)
def test_covariance_symmetric_and_bounded(k, t, s):
    c = float(k.covariance(t, s))
    assert math.isclose(c, float(k.covariance(s, t)), rel_tol=1e-12, abs_tol=1e-15)
    assert c * c <= float(k.variance(t)) * float(k.variance(s)) * (1 + 1e-10) + 1e-15


@given(kernels, st.lists(times, min_size=2, max_size=12, unique=True))
def test_gram_psd(k, ts):
    G = gram_matrix(k, np.sort(ts))
    lam = np.linalg.eigvalsh(G)
    assert lam[0] >= -1e-9 * max(np.trace(G), 1e-12)


@given(hurst, st.floats(-3, 3))
def test_expected_localtime_symmetric(H, a):
    k = KernelFamily.fbm(H)
    assert math.isclose(expected_localtime(k, a, 1.0), expected_localtime(k, -a, 1.0), rel_tol=1e-9,
                        abs_tol=1e-14)


@settings(max_examples=20)
@given(st.one_of(hurst.map(KernelFamily.fbm), st.floats(0.05, 0.95).map(KernelFamily.vgamma)),
       st.floats(-2, 2))
def test_tanaka_expectation_identity(k, c):
    R = float(k.variance(1.0))
    assert abs(folded_normal_mean(R, c) - abs(c) - expected_weighted_localtime(k, c, 1.0)) < 1e-6


@given(st.floats(0.01, 5), st.floats(-5, 5))
def test_heat_kernel_positive_and_even(t, x):
    assert heat_kernel(t, x) > 0 or x * x / t > 1400
    assert heat_kernel(t, x) == heat_kernel(t, -x)


@settings(max_examples=15)
@given(hurst, st.integers(0, 2**31 - 1), st.floats(0.02, 0.5), st.floats(-1, 1))
def test_localtime_conservation(H, seed, w, level):
    e = sample_paths(KernelFamily.fbm(H), uniform_grid(1.0, 64), 3, seed=seed)
    f = estimate_localtime(e, BinSpec(w, level=level), record_times="final")
    assert np.allclose(f.mass(), 1.0, atol=1e-12)
    assert np.all(f.values >= 0)


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.floats(0.01, 2), st.floats(-1, 1))
def test_bin_index_consistent(xs, w, level):
    x = np.array(xs)
    edges = BinSpec(w, level=level).edges(x, 1.0)
    j = bin_index(x, edges)
    assert np.all(j >= 0)
    assert np.all(edges[j] <= x + 1e-12) and np.all(x <= edges[j + 1] + 1e-12)


@settings(max_examples=15)
@given(st.floats(0.0, 3.0), st.floats(0.0, 2.0))
def test_sobolev_monotone_in_p(p, dp):
    c = hermite_coeffs(lambda x: np.exp(-x * x / 2) / (1 + x * x), 40)
    assert sobolev_norm(c, p).value <= sobolev_norm(c, p + dp).value * (1 + 1e-12)
