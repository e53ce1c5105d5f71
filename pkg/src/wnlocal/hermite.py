"""Hermite functions, Gauss-Hermite projections and the |.|_p norms.

The n-th Hermite function is

    e_n(x) = (-1)^n pi^{-1/4} (2^n n!)^{-1/2} e^{x^2/2} d^n/dx^n e^{-x^2},

an orthonormal basis of L^2(R) whose eigenvalues under A = -d^2/dx^2 + x^2 + 1
are 2n + 2. Evaluation uses the three-term recurrence on a mantissa/exponent
pair so that neither e^{-x^2/2} underflow nor mantissa growth for large |x|
breaks it.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.special import roots_hermite

from .errors import ArgumentError, NumericError

_LOG_PI_QUARTER = 0.25 * np.log(np.pi)
_RESCALE = 1e150


def _recurrence(K, x, log_seed, want_log=False):
    """Run the normalized recurrence from e_0 = exp(log_seed) up to index K.

    Returns an array of shape (K+1,) + x.shape with the values, or a pair
    (sign, log|value|) when ``want_log`` is set.
    """
    x = np.asarray(x, dtype=float)
    log_scale = np.array(log_seed, dtype=float, copy=True) * np.ones_like(x)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    shape = (K + 1,) + x.shape
    if want_log:
        sign = np.empty(shape)
        logabs = np.empty(shape)
    else:
        out = np.empty(shape)

    def store(k):
        if want_log:
            sign[k] = np.sign(cur)
            with np.errstate(divide="ignore"):
                logabs[k] = np.log(np.abs(cur)) + log_scale
        else:
            with np.errstate(under="ignore"):
                out[k] = cur * np.exp(log_scale)

    store(0)
    for k in range(K):
        nxt = np.sqrt(2.0 / (k + 1)) * x * cur - np.sqrt(k / (k + 1.0)) * prev
        prev, cur = cur, nxt
        big = np.abs(cur) > _RESCALE
        if big.any():
            s = np.where(big, np.abs(cur), 1.0)
            cur = cur / s
            prev = prev / s
            log_scale = log_scale + np.log(s)
        store(k + 1)
    if want_log:
        return sign, logabs
    return out


def _check_index(k):
    if int(k) != k or k < 0:
        raise ArgumentError(f"Hermite index must be a non-negative integer, got {k!r}")
    return int(k)


def hermite_functions(K, x):
    """All of e_0(x), ..., e_K(x), stacked along the first axis."""
    K = _check_index(K)
    x = np.asarray(x, dtype=float)
    return _recurrence(K, x, -0.5 * x**2 - _LOG_PI_QUARTER)


def log_hermite_functions(K, x):
    """Sign and log-magnitude of e_0(x), ..., e_K(x)."""
    K = _check_index(K)
    x = np.asarray(x, dtype=float)
    return _recurrence(K, x, -0.5 * x**2 - _LOG_PI_QUARTER, want_log=True)


def hermite_eval(k, x):
    """e_k(x); ``x`` may be an array."""
    k = _check_index(k)
    vals = hermite_functions(k, x)[k]
    return vals if np.ndim(vals) else float(vals)


def hermite_derivative(k, x):
    """e_k'(x) = sqrt(k/2) e_{k-1}(x) - sqrt((k+1)/2) e_{k+1}(x)."""
    k = _check_index(k)
    e = hermite_functions(k + 1, x)
    d = -np.sqrt((k + 1) / 2.0) * e[k + 1]
    if k > 0:
        d = d + np.sqrt(k / 2.0) * e[k - 1]
    return d if np.ndim(d) else float(d)


@lru_cache(maxsize=64)
def gauss_hermite(order):
    """Nodes and log-weights of the physicists' Gauss-Hermite rule (weight e^{-x^2})."""
    x, w = roots_hermite(int(order))
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    x.setflags(write=False)
    logw.setflags(write=False)
    return x, logw


def hermite_quadrature_matrix(K, order):
    """Matrix Q with Q @ f(nodes) ~ (<f, e_k>)_{k<=K}, plus the nodes."""
    x, logw = gauss_hermite(order)
    # w_i e^{x_i^2} e_k(x_i): fold the weight into the recurrence seed.
    Q = _recurrence(K, x, logw + 0.5 * x**2 - _LOG_PI_QUARTER)
    return Q, x


@dataclass(frozen=True)
class HermiteCoeffs:
    """Truncated expansion coefficients c_k = <f, e_k>, k = 0..K."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0 or not np.all(np.isfinite(c)):
            raise NumericError("Hermite coefficients must be a non-empty finite sequence")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def K(self):
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def synthesize(self, x):
        """Evaluate sum_k c_k e_k(x)."""
        return np.tensordot(self.coeffs, hermite_functions(self.K, x), axes=1)

    def l2_norm(self):
        return float(np.sqrt(np.sum(self.coeffs**2)))

    @classmethod
    def unit(cls, j, K):
        c = np.zeros(K + 1)
        c[j] = 1.0
        return cls(c)


def hermite_coeffs(f: Callable, K: int, order: Optional[int] = None) -> HermiteCoeffs:
    """Project ``f`` on e_0..e_K with Gauss-Hermite quadrature.

    ``order`` defaults to 2K + 32. ``f`` must accept a numpy array.
    """
    K = _check_index(K)
    order = 2 * K + 32 if order is None else int(order)
    Q, x = hermite_quadrature_matrix(K, order)
    fx = np.asarray(f(x), dtype=float)
    with np.errstate(invalid="ignore", over="ignore"):
        c = Q @ fx
    bad = np.flatnonzero(~np.isfinite(c))
    if bad.size:
        raise NumericError(f"non-finite quadrature result for Hermite index k={bad[0]}")
    return HermiteCoeffs(c)


def delta_coeffs(t, K):
    """Coefficients of the point evaluation delta_t: <delta_t, e_k> = e_k(t)."""
    return HermiteCoeffs(hermite_functions(K, float(t)))


class SobolevNorm(NamedTuple):
    value: float
    # For p < 0: (2K+4)^{2p} * sum c_k^2, a bound on what a tail of equal
    # energy would add to value**2. None for p >= 0.
    tail_weight: Optional[float]


def sobolev_norm(c, p: int) -> SobolevNorm:
    """|f|_p = sqrt(sum_k (2k+2)^{2p} c_k^2) over the stored truncation.

    For p < 0 the value is a lower bound on the untruncated norm.
    """
    coeffs = c.coeffs if isinstance(c, HermiteCoeffs) else np.asarray(c, dtype=float)
    if not np.all(np.isfinite(coeffs)):
        raise NumericError("non-finite coefficients")
    k = np.arange(coeffs.size)
    value = float(np.sqrt(np.sum((2.0 * k + 2.0) ** (2 * p) * coeffs**2)))
    tail = None
    if p < 0:
        tail = float((2.0 * coeffs.size + 2.0) ** (2 * p) * np.sum(coeffs**2))
    return SobolevNorm(value, tail)


class BoundCheck(NamedTuple):
    log_ratio: float
    k: int
    x: float

    @property
    def ratio(self):
        return float(np.exp(min(self.log_ratio, 700.0)))


def hermite_bound_ratio(kmax=200, xmax=50.0, gamma=0.4, n_x=50001):
    """Sup over k <= kmax and |x| <= xmax of |e_k(x)| divided by the envelope

        (k+1)^{-1/12} on |x| <= 2 sqrt(k+1),   e^{-gamma x^2} beyond,

    evaluated in log space. Parity makes x >= 0 sufficient.
    """
    x = np.linspace(0.0, xmax, n_x)
    _, logabs = log_hermite_functions(kmax, x)
    best = BoundCheck(-np.inf, 0, 0.0)
    for k in range(kmax + 1):
        inner = x <= 2.0 * np.sqrt(k + 1.0)
        log_env = np.where(inner, -np.log(k + 1.0) / 12.0, -gamma * x**2)
        r = logabs[k] - log_env
        i = int(np.argmax(r))
        if r[i] > best.log_ratio:
            best = BoundCheck(float(r[i]), k, float(x[i]))
    return best
