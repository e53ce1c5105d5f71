"""Reference kernel families g_t and their covariance structure.

Families: Brownian motion ``bm``, Brownian bridge ``bridge`` on [0, 1],
fractional Brownian motion ``fbm`` (Hurst H), normalized multifractional
Brownian motion ``mbm`` (Hurst function h) and the moving-average process
``vgamma`` with gamma^2(t) = t^alpha, i.e. G_t = int_0^t eps(t-u) dW_u with
eps(u) = sqrt(alpha) u^{(alpha-1)/2} and R_t = t^alpha.

The fBm kernel is g_t = M_H(1_[0,t]) with the Fourier multiplier
(sqrt(2 pi)/c_H) |xi|^{1/2-H}; Fourier transforms follow
f^(xi) = int e^{-i x xi} f(x) dx.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import hyp2f1, roots_jacobi

from .errors import ArgumentError, CapabilityError, NumericError
from .hermite import HermiteCoeffs, SobolevNorm, hermite_functions, sobolev_norm

FAMILIES = ("bm", "bridge", "fbm", "mbm", "vgamma")


# --------------------------------------------------------------------------
# Hurst functions


@dataclass(frozen=True)
class HurstFunction:
    """A deterministic Hurst function t -> h(t).

    kinds: ``constant`` (value), ``linear`` (h0, h1 over [t0, t1], clamped
    outside), ``sine`` (mean, amplitude, period). ``holder`` is declared
    metadata and is never checked.
    """

    kind: str
    params: Tuple[float, ...]
    eps: float = 0.01
    holder: Optional[float] = None

    def __post_init__(self):
        n_params = {"constant": 1, "linear": 4, "sine": 3}
        if self.kind not in n_params:
            raise ArgumentError(f"unknown Hurst function kind {self.kind!r}")
        if len(self.params) != n_params[self.kind]:
            raise ArgumentError(
                f"Hurst function {self.kind!r} takes {n_params[self.kind]} parameters"
            )
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if not 0 < self.eps < 0.5:
            raise ArgumentError("eps must lie in (0, 1/2)")
        lo, hi = self.bounds()
        if lo <= self.eps or hi >= 1 - self.eps:
            raise ArgumentError(
                f"Hurst function range [{lo:.4g}, {hi:.4g}] leaves ({self.eps}, {1 - self.eps})"
            )

    @classmethod
    def constant(cls, H, **kw):
        return cls("constant", (H,), **kw)

    @classmethod
    def linear(cls, h0, h1, t0=0.0, t1=1.0, **kw):
        return cls("linear", (h0, h1, t0, t1), **kw)

    @classmethod
    def sine(cls, mean, amplitude, period=1.0, **kw):
        return cls("sine", (mean, amplitude, period), **kw)

    def bounds(self):
        p = self.params
        if self.kind == "constant":
            return p[0], p[0]
        if self.kind == "linear":
            return min(p[0], p[1]), max(p[0], p[1])
        return p[0] - abs(p[1]), p[0] + abs(p[1])

    @property
    def is_constant(self):
        lo, hi = self.bounds()
        return lo == hi

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "constant":
            out = np.full_like(t, p[0])
        elif self.kind == "linear":
            h0, h1, t0, t1 = p
            u = np.clip((t - t0) / (t1 - t0), 0.0, 1.0)
            out = h0 + (h1 - h0) * u
        else:
            out = p[0] + p[1] * np.sin(2 * np.pi * t / p[2])
        return out if out.ndim else float(out)

    def to_dict(self):
        d = {"kind": self.kind, "params": list(self.params), "eps": self.eps}
        if self.holder is not None:
            d["holder"] = self.holder
        return d


# --------------------------------------------------------------------------
# constants and the M_H multiplier


def c_constant(x):
    """c_x = (2 pi / (Gamma(2x+1) sin(pi x)))^{1/2} for x in (0, 1)."""
    x = np.asarray(x, dtype=float)
    if np.any((x <= 0) | (x >= 1)):
        raise ArgumentError("c_x is defined for x in (0, 1)")
    out = np.sqrt(2 * np.pi / (gamma_fn(2 * x + 1) * np.sin(np.pi * x)))
    return out if out.ndim else float(out)


def mh_multiplier(H, xi):
    """Fourier symbol of M_H: sqrt(2 pi)/c_H |xi|^{1/2-H}."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi == 0):
        raise ArgumentError("the M_H multiplier is singular at xi = 0")
    out = np.sqrt(2 * np.pi) / c_constant(H) * np.abs(xi) ** (0.5 - H)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# kernel families


@dataclass(frozen=True)
class KernelFamily:
    """Descriptor of a centered Gaussian process G_t = <., g_t>."""

    name: str
    H: Optional[float] = None
    h: Optional[HurstFunction] = None
    alpha: Optional[float] = None
    domain: Tuple[float, float] = field(default=None)

    def __post_init__(self):
        if self.name not in FAMILIES:
            raise ArgumentError(f"unknown kernel family {self.name!r}")
        if self.name == "fbm":
            if self.H is None or not 0 < self.H < 1:
                raise ArgumentError("fbm needs a Hurst exponent H in (0, 1)")
        if self.name == "mbm" and not isinstance(self.h, HurstFunction):
            raise ArgumentError("mbm needs a HurstFunction h")
        if self.name == "vgamma":
            if self.alpha is None or not 0 < self.alpha < 1:
                raise ArgumentError("vgamma needs alpha in (0, 1)")
        default = {"bridge": (0.0, 1.0), "vgamma": (0.0, np.inf)}.get(
            self.name, (-np.inf, np.inf)
        )
        dom = default if self.domain is None else tuple(float(d) for d in self.domain)
        if not dom[0] < dom[1] or dom[0] < default[0] or dom[1] > default[1]:
            raise ArgumentError(f"domain {dom} is not inside {default} for {self.name}")
        object.__setattr__(self, "domain", dom)

    # -- constructors
    @classmethod
    def bm(cls, domain=None):
        return cls("bm", domain=domain)

    @classmethod
    def bridge(cls, domain=None):
        return cls("bridge", domain=domain)

    @classmethod
    def fbm(cls, H, domain=None):
        return cls("fbm", H=float(H), domain=domain)

    @classmethod
    def mbm(cls, h, domain=None):
        return cls("mbm", h=h, domain=domain)

    @classmethod
    def vgamma(cls, alpha, domain=None):
        return cls("vgamma", alpha=float(alpha), domain=domain)

    def label(self):
        if self.name == "fbm":
            return f"fbm(H={self.H:g})"
        if self.name == "vgamma":
            return f"vgamma(alpha={self.alpha:g})"
        if self.name == "mbm":
            return f"mbm({self.h.kind}{self.h.params})"
        return self.name

    def to_dict(self):
        d = {"name": self.name}
        if self.H is not None:
            d["H"] = self.H
        if self.h is not None:
            d["h"] = self.h.to_dict()
        if self.alpha is not None:
            d["alpha"] = self.alpha
        d["domain"] = [_json_float(x) for x in self.domain]
        return d

    # -- checks
    def _check(self, t):
        t = np.asarray(t, dtype=float)
        lo, hi = self.domain
        if np.any(~np.isfinite(t)) or np.any((t < lo) | (t > hi)):
            raise ArgumentError(f"time outside the domain [{lo}, {hi}] of {self.label()}")
        return t

    # -- second-order structure
    def variance(self, t):
        t = self._check(t)
        if self.name == "bm":
            out = np.abs(t)
        elif self.name == "bridge":
            out = t * (1 - t)
        elif self.name == "fbm":
            out = np.abs(t) ** (2 * self.H)
        elif self.name == "mbm":
            out = np.abs(t) ** (2 * np.asarray(self.h(t)))
        else:
            out = t**self.alpha
        return out if out.ndim else float(out)

    def covariance(self, t, s):
        t = self._check(t)
        s = self._check(s)
        t, s = np.broadcast_arrays(t, s)
        if self.name == "bm":
            out = _fbm_cov(t, s, 0.5)
        elif self.name == "bridge":
            out = np.minimum(t, s) - t * s
        elif self.name == "fbm":
            out = _fbm_cov(t, s, self.H)
        elif self.name == "mbm":
            ht = np.asarray(self.h(t))
            hs = np.asarray(self.h(s))
            hts = 0.5 * (ht + hs)
            norm = c_constant(hts) ** 2 / (c_constant(ht) * c_constant(hs))
            out = norm * _fbm_cov(t, s, hts)
        else:
            out = _vgamma_cov(t, s, self.alpha)
        return out if out.ndim else float(out)

    def d_variance(self, t):
        """R'_t."""
        t = self._check(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.name == "bm":
                out = np.sign(t) + (t == 0)
            elif self.name == "bridge":
                out = 1 - 2 * t
            elif self.name == "fbm":
                H = self.H
                out = 2 * H * np.abs(t) ** (2 * H - 1) * np.sign(t)
                out = np.where(t == 0, 0.0 if H > 0.5 else (1.0 if H == 0.5 else np.inf), out)
            elif self.name == "vgamma":
                out = self.alpha * t ** (self.alpha - 1)
            elif self.h.is_constant:
                return KernelFamily.fbm(self.h.params[0], self.domain).d_variance(t)
            else:
                raise CapabilityError("R' for mbm with non-constant h is not implemented")
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    def d2_variance(self, t):
        """R''_t."""
        t = self._check(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.name == "bm":
                out = np.zeros_like(t)
            elif self.name == "bridge":
                out = np.full_like(t, -2.0)
            elif self.name == "fbm":
                H = self.H
                out = 2 * H * (2 * H - 1) * np.abs(t) ** (2 * H - 2)
                if H == 0.5:
                    out = np.zeros_like(t)
            elif self.name == "vgamma":
                a = self.alpha
                out = a * (a - 1) * t ** (a - 2)
            elif self.h.is_constant:
                return KernelFamily.fbm(self.h.params[0], self.domain).d2_variance(t)
            else:
                raise CapabilityError("R'' for mbm with non-constant h is not implemented")
        out = np.asarray(out, dtype=float)
        return out if out.ndim else float(out)

    @property
    def variance_increasing(self):
        """Whether t -> R_t is non-decreasing on the non-negative part of the domain."""
        if self.name in ("bm", "fbm", "vgamma"):
            return True
        if self.name == "mbm":
            return self.h.is_constant
        return False

    def regularity(self):
        """H-type regularity index: the exponent of R_{|t-s|}-like increments."""
        if self.name in ("bm", "bridge"):
            return 0.5
        if self.name == "fbm":
            return self.H
        if self.name == "vgamma":
            return self.alpha / 2
        lo = max(self.domain[0], 0.0)
        hi = min(self.domain[1], lo + 1.0)
        return float(np.min(self.h(np.linspace(lo, hi, 1001))))

    def increment_variance(self, t, s):
        """Delta(t, s) = E[(G_t - G_s)^2] = R_t + R_s - 2 R_{t,s}.

        Closed forms avoid the cancellation near the diagonal where they exist.
        """
        if self.name in ("bm", "fbm", "bridge"):
            t = self._check(t)
            s = self._check(s)
            d = np.abs(t - s)
            if self.name == "bm":
                out = d
            elif self.name == "fbm":
                out = d ** (2 * self.H)
            else:
                out = d * (1 - d)
            return out if np.ndim(out) else float(out)
        return self.variance(t) + self.variance(s) - 2 * self.covariance(t, s)


def _json_float(x):
    return x if np.isfinite(x) else ("inf" if x > 0 else "-inf")


def _fbm_cov(t, s, H):
    two_h = 2 * np.asarray(H)
    return 0.5 * (np.abs(t) ** two_h + np.abs(s) ** two_h - np.abs(t - s) ** two_h)


def _vgamma_cov(t, s, alpha):
    # For 0 <= s <= t: alpha int_0^s (t-u)^b (s-u)^b du with b = (alpha-1)/2;
    # after a Pfaff transformation this is
    # alpha s^{b+1} t^b / (b+1) * 2F1(-b, 1; b+2; s/t).
    lo = np.minimum(t, s)
    hi = np.maximum(t, s)
    b = 0.5 * (alpha - 1)
    out = np.zeros(np.broadcast(lo, hi).shape)
    pos = lo > 0
    if np.any(pos):
        l, u = lo[pos], hi[pos]
        out[pos] = alpha * l ** (b + 1) * u**b / (b + 1) * hyp2f1(-b, 1.0, b + 2, l / u)
    return out


def kernel_from_dict(d):
    """Inverse of KernelFamily.to_dict (loose: missing domain means default)."""
    d = dict(d)
    name = d.pop("name")
    h = d.pop("h", None)
    if h is not None and not isinstance(h, HurstFunction):
        h = HurstFunction(h["kind"], tuple(h["params"]), eps=h.get("eps", 0.01), holder=h.get("holder"))
    dom = d.pop("domain", None)
    if dom is not None:
        dom = tuple(float(x) for x in dom)
    return KernelFamily(name, h=h, domain=dom, **d)


def variance(k: KernelFamily, t):
    return k.variance(t)


def covariance(k: KernelFamily, t, s):
    return k.covariance(t, s)


def gram_matrix(k: KernelFamily, grid):
    grid = np.asarray(grid, dtype=float)
    return k.covariance(grid[:, None], grid[None, :])


# --------------------------------------------------------------------------
# Parseval (frequency-domain) covariance


class ParsevalResult(NamedTuple):
    value: float
    tail_bound: float


@lru_cache(maxsize=8)
def _gauss_legendre(n):
    return np.polynomial.legendre.leggauss(n)


def _panel_rule(edges, n):
    x, w = _gauss_legendre(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * (x + 1) + a).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return nodes, weights


def covariance_via_parseval(H, t, s, H2=None, xi_min=1e-6, xi_max=1e4, nodes=16):
    """<M_H 1_[0,t], M_H2 1_[0,s]> computed in the frequency domain.

    Evaluates (1/2pi) int m_H m_H2 (1-e^{-it xi})(1-e^{is xi})/xi^2 d xi over
    xi_min <= |xi| <= xi_max with composite Gauss-Legendre panels (log-spaced
    near 0, uniform beyond), adds the non-oscillating part of the tail above
    xi_max in closed form and reports a bound on what remains.
    """
    if not 0 < xi_min < xi_max:
        raise ArgumentError("need 0 < xi_min < xi_max")
    H2 = H if H2 is None else H2
    t, s = float(t), float(s)
    hbar = 0.5 * (H + H2)
    pref = 2.0 / (c_constant(H) * c_constant(H2))
    freqs = [abs(t), abs(s), abs(t - s)]
    fmax = max(freqs)
    if fmax == 0.0:
        return ParsevalResult(0.0, 0.0)

    def bracket(xi):
        # 1 - cos(t xi) - cos(s xi) + cos((t-s) xi), cancellation-free near 0
        return 2 * (np.sin(0.5 * t * xi) ** 2 + np.sin(0.5 * s * xi) ** 2
                    - np.sin(0.5 * (t - s) * xi) ** 2)

    split = min(max(10.0 / fmax, xi_min * 10), xi_max)
    log_edges = np.geomspace(xi_min, split, 80)
    width = min(np.pi / (2 * fmax), 1.0)
    n_lin = max(int(np.ceil((xi_max - split) / width)), 1)
    lin_edges = np.linspace(split, xi_max, n_lin + 1)
    x1, w1 = _panel_rule(log_edges, nodes)
    x2, w2 = _panel_rule(lin_edges, nodes)
    xi = np.concatenate([x1, x2])
    w = np.concatenate([w1, w2])
    value = np.sum(w * xi ** (-1 - 2 * hbar) * bracket(xi))

    # tail above xi_max: zero-frequency cosines are constants
    const = 1.0 + sum(sign for sign, f in zip((-1, -1, 1), freqs) if f == 0.0)
    value += const * xi_max ** (-2 * hbar) / (2 * hbar)
    osc = sum(2 * xi_max ** (-1 - 2 * hbar) / f for f in freqs if f > 0)
    # below xi_min the bracket is t s xi^2 - (t^4 + s^4 - (t-s)^4) xi^4 / 24 + ...
    value += t * s * xi_min ** (2 - 2 * hbar) / (2 - 2 * hbar)
    quartic = (t**4 + s**4 + (t - s) ** 4) / 24.0
    low = quartic * xi_min ** (4 - 2 * hbar) / (4 - 2 * hbar)
    return ParsevalResult(float(pref * value), float(pref * (osc + low)))


# --------------------------------------------------------------------------
# Hermite pairings <g_t, e_k> and |g'_t|_{-q}


def _power_weight_rule(L, beta, freq, n_first=24, n_panel=20):
    """Nodes and weights for int_0^L xi^beta f(xi) d xi (beta > -1)."""
    h = min(0.5, L)
    xj, wj = roots_jacobi(n_first, 0.0, beta)
    first_x = 0.5 * h * (xj + 1)
    first_w = (0.5 * h) ** (beta + 1) * wj
    width = min(0.5, np.pi / (4 * max(abs(freq), 1e-12)))
    n = max(int(np.ceil((L - h) / width)), 1)
    x2, w2 = _panel_rule(np.linspace(h, L, n + 1), n_panel)
    return np.concatenate([first_x, x2]), np.concatenate([first_w, w2 * x2**beta])


def _fourier_pairing(H, t, K, derivative):
    # <g_t, e_k> for g_t = M_H 1_[0,t] through ê_k = sqrt(2pi) (-i)^k e_k:
    #   even k: (-1)^{k/2}     (2/c_H) int_0^inf xi^{1/2-H} C(xi) e_k(xi) d xi
    #   odd k:  (-1)^{(k-1)/2} (2/c_H) int_0^inf xi^{1/2-H} S(xi) e_k(xi) d xi
    # with (C, S) = (cos t xi, sin t xi) for g'_t and
    # (sin(t xi)/xi, (1 - cos t xi)/xi) for g_t.
    L = np.sqrt(2 * K + 1) + 14.0
    xi, w = _power_weight_rule(L, 0.5 - H, t)
    if derivative:
        C, S = np.cos(t * xi), np.sin(t * xi)
    else:
        C = t * np.sinc(t * xi / np.pi)
        S = t * np.sin(0.5 * t * xi) * np.sinc(0.5 * t * xi / np.pi)
    E = hermite_functions(K, xi)
    k = np.arange(K + 1)
    even = k % 2 == 0
    integral = np.where(even, E @ (w * C), E @ (w * S))
    sign = np.where(even, (-1.0) ** (k // 2), (-1.0) ** ((k - 1) // 2))
    return 2.0 / c_constant(H) * sign * integral


def _indicator_pairing(t, K):
    # int_0^t e_k(u) du (signed for t < 0)
    if t == 0:
        return np.zeros(K + 1)
    lo, hi = sorted((0.0, t))
    n = max(int(np.ceil((hi - lo) / 0.25)), 1)
    x, w = _panel_rule(np.linspace(lo, hi, n + 1), 20)
    return np.sign(t) * (hermite_functions(K, x) @ w)


def _vgamma_pairing(alpha, t, K):
    # int_0^t sqrt(alpha) (t-u)^b e_k(u) du = sqrt(alpha) int_0^t v^b e_k(t-v) dv
    if t == 0:
        return np.zeros(K + 1)
    b = 0.5 * (alpha - 1)
    v, w = _power_weight_rule(t, b, 1.0)
    return np.sqrt(alpha) * (hermite_functions(K, t - v) @ w)


def kernel_hermite_pairing(k: KernelFamily, t, K, derivative=False):
    """The vector (<g_t, e_j>)_{j<=K}, or (<g'_t, e_j>) with ``derivative``."""
    t = float(k._check(t))
    if k.name == "bm":
        return hermite_functions(K, t) if derivative else _indicator_pairing(t, K)
    if k.name == "bridge":
        one = _indicator_pairing(1.0, K)
        if derivative:
            return hermite_functions(K, t) - one
        return _indicator_pairing(t, K) - t * one
    if k.name == "fbm":
        return _fourier_pairing(k.H, t, K, derivative)
    if k.name == "mbm":
        if derivative and not k.h.is_constant:
            raise CapabilityError("g'_t for mbm with non-constant h is not implemented")
        return _fourier_pairing(float(k.h(t)), t, K, derivative)
    if derivative:
        raise CapabilityError("g'_t for vgamma carries eps(0+) = inf and has no Hermite expansion")
    return _vgamma_pairing(k.alpha, t, K)


def kernel_derivative_norm(k: KernelFamily, t, q: int, K: int) -> SobolevNorm:
    """Truncated |g'_t|_{-q} through the Hermite coefficients of g'_t."""
    if k.name not in ("bm", "fbm") and not (k.name == "mbm" and k.h.is_constant):
        raise CapabilityError(f"|g'_t|_{{-q}} is implemented for bm and fbm, not {k.label()}")
    coeffs = kernel_hermite_pairing(k, t, K, derivative=True)
    if not np.all(np.isfinite(coeffs)):
        raise NumericError("non-finite Hermite coefficient of g'_t")
    return sobolev_norm(HermiteCoeffs(coeffs), -int(q))


# --------------------------------------------------------------------------
# the measure dR


@dataclass(frozen=True)
class SignedMeasureOnGrid:
    """Increments of t -> R_t over the cells of a grid."""

    grid: np.ndarray
    increments: np.ndarray

    @property
    def total_variation(self):
        return float(np.sum(np.abs(self.increments)))

    @property
    def total(self):
        return float(np.sum(self.increments))


def _strict_grid(grid):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ArgumentError("time grid must be strictly increasing with at least two points")
    return grid


def dR_measure(k: KernelFamily, grid) -> SignedMeasureOnGrid:
    grid = _strict_grid(grid)
    R = np.asarray(k.variance(grid))
    return SignedMeasureOnGrid(grid, np.diff(R))
