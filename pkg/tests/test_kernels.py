import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import gamma as gamma_fn

from wnlocal.errors import ArgumentError, CapabilityError
from wnlocal.hermite import hermite_eval, hermite_functions
from wnlocal.kernels import (
    HurstFunction,
    KernelFamily,
    c_constant,
    covariance_via_parseval,
    dR_measure,
    gram_matrix,
    kernel_derivative_norm,
    kernel_from_dict,
    kernel_hermite_pairing,
    mh_multiplier,
)

REFERENCE = [KernelFamily.bm(), KernelFamily.bridge(), KernelFamily.fbm(0.3), KernelFamily.fbm(0.75),
             KernelFamily.mbm(HurstFunction.linear(0.3, 0.7)), KernelFamily.vgamma(0.5)]


def test_variance_examples():
    assert KernelFamily.fbm(0.75).variance(1.0) == 1.0
    assert KernelFamily.bridge().variance(0.5) == 0.25
    for k in REFERENCE:
        assert k.variance(0.0) == 0.0


def test_domain_errors():
    with pytest.raises(ArgumentError):
        KernelFamily.bridge().variance(1.5)
    with pytest.raises(ArgumentError):
        KernelFamily.vgamma(0.5).covariance(-0.1, 0.2)
    with pytest.raises(ArgumentError):
        KernelFamily.fbm(1.2)


def test_covariance_examples():
    assert KernelFamily.fbm(0.5).covariance(0.3, 0.8) == pytest.approx(0.3)
    assert KernelFamily.bm().covariance(-0.4, 0.7) == 0.0
    assert KernelFamily.bm().covariance(-0.4, -0.7) == pytest.approx(0.4)
    f = KernelFamily.fbm(0.25)
    assert abs(f.covariance(1.0, 1.0) - f.covariance(1.0, 0.999999)) < 1e-3


def test_mbm_with_constant_h_is_fbm():
    m = KernelFamily.mbm(HurstFunction.constant(0.6))
    f = KernelFamily.fbm(0.6)
    t = np.linspace(-1, 2, 13)
    assert np.allclose(m.covariance(t[:, None], t[None, :]), f.covariance(t[:, None], t[None, :]),
                       rtol=0, atol=1e-15)


def test_vgamma_covariance_against_quadrature():
    k = KernelFamily.vgamma(0.5)
    b = -0.25
    for t, s in [(0.9, 0.3), (0.5, 0.5), (1.0, 0.05)]:
        lo, hi = min(t, s), max(t, s)
        ref = 0.5 * integrate.quad(lambda u: (hi - u) ** b * (lo - u) ** b, 0, lo, limit=200)[0]
        assert k.covariance(t, s) == pytest.approx(ref, rel=1e-8)


def test_c_constant():
    assert c_constant(0.5) == pytest.approx(math.sqrt(2 * math.pi))
    for x in (0.25, 0.75):
        assert c_constant(x) == pytest.approx(math.sqrt(2 * math.pi / (gamma_fn(2 * x + 1) * math.sin(math.pi * x))))
    assert np.all(c_constant(np.linspace(0.05, 0.95, 19)) > 0)
    with pytest.raises(ArgumentError):
        c_constant(1.0)


def test_mh_multiplier():
    assert mh_multiplier(0.5, 3.7) == pytest.approx(1.0)
    assert mh_multiplier(0.75, 2.0) == pytest.approx(math.sqrt(2 * math.pi) / c_constant(0.75) * 2**-0.25)
    with pytest.raises(ArgumentError):
        mh_multiplier(0.3, 0.0)


def test_mh_small_frequency_integrable():
    # |m_H|^2 |1 - e^{-it xi}|^2 / xi^2 ~ t^2 xi^{1-2H} near 0, integrable for H < 1
    H, t = 0.25, 1.0
    f = lambda xi: mh_multiplier(H, xi) ** 2 * 2 * (1 - math.cos(t * xi)) / xi**2
    val, err = integrate.quad(f, 0, 1e-3)
    assert math.isfinite(val) and val < 1e-3


def test_parseval_examples():
    assert covariance_via_parseval(0.5, 0.4, 0.9).value == pytest.approx(0.4, abs=1e-3)
    f = KernelFamily.fbm(0.75)
    assert covariance_via_parseval(0.75, 0.5, 1.0).value == pytest.approx(f.covariance(0.5, 1.0), abs=1e-3)
    assert abs(covariance_via_parseval(0.3, 0.0, 0.7).value) < 1e-12
    with pytest.raises(ArgumentError):
        covariance_via_parseval(0.5, 0.2, 0.3, xi_min=1.0, xi_max=0.5)


def test_parseval_tail_bound_reported():
    r = covariance_via_parseval(0.25, 0.3, 0.8)
    f = KernelFamily.fbm(0.25)
    assert r.tail_bound > 0
    assert abs(r.value - f.covariance(0.3, 0.8)) < 10 * r.tail_bound + 1e-6


def _spatial_fbm_pairing(H, t, K):
    # M_H 1_[0,t] in the time domain: const * (sign(x)|x|^b - sign(x-t)|x-t|^b), b = H - 1/2,
    # normalized so that its L^2 norm is t^H
    b = H - 0.5
    h = lambda x: np.sign(x) * abs(x) ** b - np.sign(x - t) * abs(x - t) ** b
    pieces = ((-np.inf, -1), (-1, 0), (0, t), (t, t + 1), (t + 1, np.inf))
    q = lambda f: sum(integrate.quad(f, a, c, limit=400, epsabs=1e-13)[0] for a, c in pieces)
    c = math.sqrt(t ** (2 * H) / q(lambda x: h(x) ** 2))
    return np.array([c * q(lambda x: h(x) * hermite_eval(k, x)) for k in range(K + 1)])


@pytest.mark.parametrize("H", [0.3, 0.75])
def test_fbm_pairing_matches_time_domain_kernel(H):
    ref = _spatial_fbm_pairing(H, 0.6, 6)
    got = kernel_hermite_pairing(KernelFamily.fbm(H), 0.6, 6)
    assert np.max(np.abs(got - ref)) < 1e-8


def test_fbm_half_pairing_equals_bm():
    for der in (False, True):
        a = kernel_hermite_pairing(KernelFamily.fbm(0.5), 0.7, 20, derivative=der)
        b = kernel_hermite_pairing(KernelFamily.bm(), 0.7, 20, derivative=der)
        assert np.max(np.abs(a - b)) < 1e-10


def test_vgamma_pairing_against_quadrature():
    alpha, t = 0.5, 0.8
    got = kernel_hermite_pairing(KernelFamily.vgamma(alpha), t, 5)
    for k in range(6):
        ref = integrate.quad(lambda v: math.sqrt(alpha) * hermite_eval(k, t - v), 0, t,
                             weight="alg", wvar=(0.5 * (alpha - 1), 0))[0]
        assert got[k] == pytest.approx(ref, abs=1e-10)


def test_pairings_approach_variance_from_below():
    for k in (KernelFamily.fbm(0.7), KernelFamily.vgamma(0.5), KernelFamily.bridge()):
        norms = [float(np.sum(kernel_hermite_pairing(k, 0.6, K) ** 2)) for K in (25, 100, 400)]
        assert np.all(np.diff(norms) > 0)
        assert norms[-1] <= k.variance(0.6) * (1 + 1e-9)


def test_derivative_capabilities():
    with pytest.raises(CapabilityError):
        kernel_hermite_pairing(KernelFamily.vgamma(0.5), 0.5, 4, derivative=True)
    with pytest.raises(CapabilityError):
        kernel_derivative_norm(KernelFamily.bridge(), 0.5, 1, 16)


def test_derivative_norm_bm():
    vals = [kernel_derivative_norm(KernelFamily.bm(), 0.5, 1, K).value for K in (64, 128, 256, 512)]
    ref = math.sqrt(np.sum((2 * np.arange(513) + 2.0) ** -2 * hermite_functions(512, 0.5) ** 2))
    assert vals[-1] == pytest.approx(ref, rel=1e-12)
    assert np.all(np.diff(vals) >= 0)


def test_derivative_norm_q0_diverges_for_bm():
    vals = [kernel_derivative_norm(KernelFamily.bm(), 0.5, 0, K).value for K in (64, 256, 1024)]
    assert vals[1] > 1.3 * vals[0] and vals[2] > 1.3 * vals[1]


def test_derivative_norm_fbm_stable():
    a = kernel_derivative_norm(KernelFamily.fbm(0.7), 0.5, 2, 128).value
    b = kernel_derivative_norm(KernelFamily.fbm(0.7), 0.5, 2, 256).value
    assert math.isfinite(a) and abs(a - b) / b < 0.01


def test_dR_measure():
    g = np.linspace(0, 1, 101)
    m = dR_measure(KernelFamily.fbm(0.7), g)
    assert np.allclose(m.increments, g[1:] ** 1.4 - g[:-1] ** 1.4)
    assert np.all(m.increments > 0)
    bm = dR_measure(KernelFamily.bm(), g)
    assert np.allclose(bm.increments, np.diff(g))
    br = dR_measure(KernelFamily.bridge(), np.linspace(0, 1, 2001))
    mid = np.searchsorted(br.grid, 0.5)
    assert np.all(br.increments[: mid - 1] > 0) and np.all(br.increments[mid + 1:] < 0)
    assert br.total_variation == pytest.approx(0.5, abs=1e-6)
    assert br.total_variation >= abs(br.total)
    with pytest.raises(ArgumentError):
        dR_measure(KernelFamily.bm(), [0.0, 0.5, 0.4])


@pytest.mark.parametrize("k", REFERENCE, ids=lambda k: k.label())
def test_gram_psd(k):
    lo = 0.0 if k.name in ("bridge", "vgamma") else -1.0
    g = np.linspace(lo, 1.0, 256)
    C = gram_matrix(k, g)
    assert np.allclose(C, C.T)
    assert np.linalg.eigvalsh(C)[0] >= -1e-8 * np.trace(C)


def test_increment_variance_closed_forms():
    t = np.linspace(0.05, 1, 7)
    for k in (KernelFamily.bm(), KernelFamily.fbm(0.35), KernelFamily.bridge()):
        for s in (0.0, 0.3, 0.97):
            generic = k.variance(t) + k.variance(s) - 2 * k.covariance(t, s)
            assert np.allclose(k.increment_variance(t, s), generic, atol=1e-14)


def test_vgamma_increment_bounds_closed_form():
    k = KernelFamily.vgamma(0.5)
    g = np.linspace(0.1, 1, 10)
    T, S = np.meshgrid(g, g)
    off = T != S
    D = k.increment_variance(T[off], S[off])
    lag = k.variance(np.abs(T[off] - S[off]))
    assert np.all(lag <= D) and np.all(D <= 2 * lag)


def test_serialization_round_trip():
    for k in REFERENCE:
        assert kernel_from_dict(k.to_dict()) == k


def test_hurst_function_range_enforced():
    with pytest.raises(ArgumentError):
        HurstFunction.linear(0.005, 0.5)
    with pytest.raises(ArgumentError):
        HurstFunction("cubic", (1.0,))
