"""Wick products, Wick-Riemann sums and the Ito / Tanaka harnesses.

For a functional F(G_t) and an increment G_{t'} - G_t of the same process,
S-transform calculus gives

    F(G_t) <> (G_{t'} - G_t) = F(G_t) (G_{t'} - G_t) - F'(G_t) (R_{t,t'} - R_t),

so forward sums of the right-hand side discretize the Wick-Ito integral.
"""
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .chaos import expected_weighted_localtime, folded_normal_mean
from .errors import ArgumentError, CapabilityError
from .hermite import HermiteCoeffs
from .kernels import KernelFamily
from .localtime import BinSpec, estimate_weighted_localtime
from .simulate import PathEnsemble, path_rng

CERTIFIED_REGULARITY = 0.5


# --------------------------------------------------------------------------
# first chaos


def wick_pair_first_chaos(X, Y, inner=None):
    """<., f> <> <., g> = XY - <f, g>, per sample."""
    if inner is None:
        raise ArgumentError("the Wick pair needs the inner product <f, g>")
    return np.asarray(X, dtype=float) * np.asarray(Y, dtype=float) - float(inner)


def wick_pair_function(inner):
    """(x, y) -> xy - <f, g>, for S-transforms by Gaussian quadrature."""
    return lambda x, y: x * y - inner


@dataclass
class FirstChaosSample:
    """Joint samples of <w, f> and <w, g> from the coordinates Z_k = <w, e_k>."""

    Z: np.ndarray  # (n, K+1)
    f: HermiteCoeffs
    g: HermiteCoeffs

    @property
    def X(self):
        return self.Z @ self.f.coeffs

    @property
    def Y(self):
        return self.Z @ self.g.coeffs

    @property
    def inner(self):
        return float(np.dot(self.f.coeffs, self.g.coeffs))


def first_chaos_samples(f, g, n, seed) -> FirstChaosSample:
    """Sample the white-noise coordinates seen by f and g (truncated to a common K)."""
    f = f if isinstance(f, HermiteCoeffs) else HermiteCoeffs(f)
    g = g if isinstance(g, HermiteCoeffs) else HermiteCoeffs(g)
    K = max(f.K, g.K)
    pad = lambda c: HermiteCoeffs(np.pad(c.coeffs, (0, K - c.K)))
    Z = np.empty((n, K + 1))
    for i in range(n):
        Z[i] = path_rng(seed, i).standard_normal(K + 1)
    return FirstChaosSample(Z, pad(f), pad(g))


def empirical_s_transform(values, Z, eta):
    """Monte Carlo S(Phi)(eta) = E[Phi exp(<w, eta> - |eta|^2/2)] and its standard error."""
    eta = np.asarray(eta.coeffs if isinstance(eta, HermiteCoeffs) else eta, dtype=float)
    eta = np.pad(eta, (0, max(Z.shape[1] - eta.size, 0)))[: Z.shape[1]]
    tilt = np.exp(Z @ eta - 0.5 * float(eta @ eta))
    w = np.asarray(values) * tilt
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(w.size))


# --------------------------------------------------------------------------
# level functions with derivatives


@dataclass(frozen=True)
class LevelFunction:
    """F together with F'; Wick-Riemann sums need both."""

    f: Callable
    df: Optional[Callable]
    name: str = "F"

    def __call__(self, x):
        return self.f(x)


def constant(value=1.0):
    return LevelFunction(lambda x: np.full_like(np.asarray(x, dtype=float), value),
                         lambda x: np.zeros_like(np.asarray(x, dtype=float)), f"const({value:g})")


def identity():
    return LevelFunction(lambda x: np.asarray(x, dtype=float), lambda x: np.ones_like(np.asarray(x, dtype=float)),
                         "x")


def sign_ramp(delta, c=0.0):
    """Ramp of half-width delta: sign_delta(x) = clip((x - c)/delta, -1, 1)."""
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    return LevelFunction(
        lambda x: np.clip((np.asarray(x) - c) / delta, -1.0, 1.0),
        lambda x: (np.abs(np.asarray(x) - c) <= delta) / delta,
        f"sign_ramp(delta={delta:g}, c={c:g})",
    )


def ramp_primitive(delta, c=0.0):
    """phi with phi' = sign_delta and phi = |x - c| outside the ramp."""
    def phi(x):
        y = np.abs(np.asarray(x, dtype=float) - c)
        return np.where(y < delta, 0.5 * y * y / delta + 0.5 * delta, y)
    return phi


# --------------------------------------------------------------------------
# Wick-Riemann integration


@dataclass
class WickIntegralReport:
    """Per-path forward Wick-Riemann sums over a grid."""

    values: np.ndarray
    forward: np.ndarray  # sum F(G_i) dG_i
    corrections: np.ndarray  # sum F'(G_i) (R_{t_i, t_{i+1}} - R_{t_i})
    n_steps: int
    T: float
    delta: Optional[float] = None
    function: str = "F"
    kernel: Optional[dict] = None
    seed: Optional[int] = None
    warnings: list = field(default_factory=list)

    @property
    def mean(self):
        return float(self.values.mean())

    @property
    def stderr(self):
        return float(self.values.std(ddof=1) / math.sqrt(self.values.size)) if self.values.size > 1 else math.nan

    def summary(self):
        return {
            "mean": self.mean, "stderr": self.stderr, "n_paths": int(self.values.size),
            "n_steps": self.n_steps, "T": self.T, "delta": self.delta, "function": self.function,
            "kernel": self.kernel, "seed": self.seed,
            "mean_correction": float(self.corrections.mean()), "warnings": list(self.warnings),
        }


def _truncate(e: PathEnsemble, T):
    if T is None or abs(T - e.T) <= 1e-12:
        return e
    n = int(np.searchsorted(e.grid, T))
    if n >= e.grid.size or abs(e.grid[n] - T) > 1e-12:
        raise ArgumentError("T must be a grid time")
    return PathEnsemble(e.grid[: n + 1], e.paths[:, : n + 1], e.seed, e.kernel, e.first_index, e.meta)


def wick_riemann_integral(F, e: PathEnsemble, T=None, dF=None, delta=None) -> WickIntegralReport:
    """sum_i F(G_i) (G_{i+1} - G_i) - F'(G_i) (R_{t_i, t_{i+1}} - R_{t_i}) per path."""
    if dF is None:
        dF = getattr(F, "df", None)
    if dF is None:
        raise CapabilityError("the Wick correction needs F'; pass dF or a LevelFunction")
    e = _truncate(e, T)
    k = e.kernel
    notes = []
    if k.regularity() < CERTIFIED_REGULARITY:
        msg = (f"{k.label()} has regularity {k.regularity():.3g} < 1/2; forward Wick-Riemann sums "
               "are not certified for it")
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    t = e.grid
    shift = np.asarray(k.covariance(t[:-1], t[1:])) - np.asarray(k.variance(t[:-1]))
    G = e.paths
    left = G[:, :-1]
    forward = np.sum(np.asarray(F(left)) * np.diff(G, axis=1), axis=1)
    corr = np.asarray(dF(left)) @ shift
    return WickIntegralReport(forward - corr, forward, corr, t.size - 1, float(t[-1]), delta,
                              getattr(F, "name", "F"), k.to_dict(), e.seed, notes)


def ito_quadratic_error(e: PathEnsemble, T=None):
    """L^2 distance between 2 int G d<>G + R_T and G_T^2, absolute and relative to |G_T^2|_{L^2}."""
    rep = wick_riemann_integral(identity(), e, T)
    e = _truncate(e, T)
    GT = e.paths[:, -1]
    R_T = float(e.kernel.variance(e.T))
    err = 2 * rep.values + R_T - GT**2
    l2 = float(np.sqrt(np.mean(err**2)))
    ref = math.sqrt(3.0) * R_T  # |G_T^2|_{L^2} = sqrt(3) R_T
    return {"l2_error": l2, "relative": l2 / ref, "mean_error": float(err.mean()),
            "stderr": float(err.std(ddof=1) / math.sqrt(err.size)), "n_steps": rep.n_steps}


# --------------------------------------------------------------------------
# Tanaka


def tanaka_check_expectation(k: KernelFamily, c, T):
    """|E|N(0, R_T) - c| - |c| - E[L_T(c)]|."""
    lhs = folded_normal_mean(float(k.variance(T)), c)
    return abs(lhs - abs(c) - expected_weighted_localtime(k, c, T))


@dataclass
class TanakaPathReport:
    integral: WickIntegralReport
    localtime: np.ndarray
    residuals: np.ndarray
    c: float
    delta: float
    binwidth: float

    @property
    def mean(self):
        return float(self.residuals.mean())

    @property
    def stderr(self):
        return float(self.residuals.std(ddof=1) / math.sqrt(self.residuals.size))

    @property
    def l2(self):
        return float(np.sqrt(np.mean(self.residuals**2)))

    def mollification_offset(self, G0, GT):
        """Mean residual predicted by smoothing alone: the ramp primitive differs from |x - c|."""
        phi = ramp_primitive(self.delta, self.c)
        return float(np.mean(np.abs(GT - self.c) - phi(GT)) + np.mean(phi(G0) - np.abs(G0 - self.c)))

    def summary(self):
        return {"c": self.c, "delta": self.delta, "binwidth": self.binwidth, "mean": self.mean,
                "stderr": self.stderr, "l2": self.l2, "integral": self.integral.summary()}


def tanaka_check_path(k: KernelFamily, c, T, e: PathEnsemble, delta=None, binwidth=None) -> TanakaPathReport:
    """Residuals |G_T - c| - |c| - int sign_delta(G - c) d<>G - L_T(c) per path.

    The weighted local time is read from the bin [c - delta, c + delta]
    unless ``binwidth`` overrides it, so the bin matches sign_delta' = 1/delta
    on the ramp.
    """
    if k.regularity() < CERTIFIED_REGULARITY:
        raise CapabilityError(
            f"{k.label()} has regularity {k.regularity():.3g} < 1/2: forward sums of sign(G - c) are "
            "not known to approximate the Wick-Ito integral there"
        )
    if e.kernel != k:
        raise ArgumentError("ensemble was sampled from a different kernel")
    e = _truncate(e, T)
    R_T = float(k.variance(e.T))
    delta = 0.05 * math.sqrt(R_T) if delta is None else float(delta)
    if not delta > 0:
        raise ArgumentError("delta must be positive")
    width = 2 * delta if binwidth is None else float(binwidth)
    rep = wick_riemann_integral(sign_ramp(delta, c), e, delta=delta)
    field_ = estimate_weighted_localtime(e, BinSpec(width, level=float(c)), record_times="final")
    L = field_.at_level(c)
    G = e.paths
    res = np.abs(G[:, -1] - c) - np.abs(G[:, 0] - c) - rep.values - L
    return TanakaPathReport(rep, L, res, float(c), delta, width)
