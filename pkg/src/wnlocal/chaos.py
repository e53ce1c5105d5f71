"""Generalized functionals F(G_t): chaos coefficients and S-transforms.

For R_t > 0 a tempered distribution F gives

    F(G_t) = (2 pi R_t)^{-1/2} sum_k <F, xi_{t,k}> / (k! R_t^k) I_k(g_t^{(x)k}),
    xi_{t,k}(x) = pi^{1/4} (k!)^{1/2} R_t^{k/2} exp(-x^2/(4 R_t)) e_k(x/sqrt(2 R_t)),

and S(F(G_t))(eta) = <F, gamma(R_t, . - <g_t, eta>)> with gamma the heat kernel.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Optional, Union

import numpy as np
from scipy import integrate
from scipy.special import beta as beta_fn, betainc, gammaln

from .errors import ArgumentError, CapabilityError, IntegrabilityError, NumericError
from .hermite import (
    HermiteCoeffs,
    gauss_hermite,
    hermite_functions,
    hermite_quadrature_matrix,
    log_hermite_functions,
)
from .kernels import KernelFamily, dR_measure, kernel_hermite_pairing

ZERO_VARIANCE = 1e-12


def heat_kernel(t, x):
    """gamma(t, x) = (2 pi t)^{-1/2} exp(-x^2/(2t)), and 0 when t = 0."""
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(t < 0):
        raise ArgumentError("heat kernel needs t >= 0")
    t, x = np.broadcast_arrays(t, x)
    out = np.zeros(t.shape)
    pos = t > 0
    out[pos] = np.exp(-x[pos] ** 2 / (2 * t[pos])) / np.sqrt(2 * np.pi * t[pos])
    return out if out.ndim else float(out)


def xi_tk(R, k, x):
    """xi_{t,k}(x) for variance R = R_t, evaluated in log space."""
    if R <= 0:
        raise ArgumentError("xi_{t,k} needs R_t > 0; points of Z_R are the caller's business")
    if k < 0:
        raise ArgumentError("k must be non-negative")
    x = np.asarray(x, dtype=float)
    sign, logabs = log_hermite_functions(k, x / np.sqrt(2 * R))
    log_val = (0.25 * np.log(np.pi) + 0.5 * gammaln(k + 1) + 0.5 * k * np.log(R)
               - x**2 / (4 * R) + logabs[k])
    with np.errstate(under="ignore"):
        out = sign[k] * np.exp(log_val)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Dirac:
    """The point mass delta_a, paired analytically (never by quadrature)."""

    a: float


@dataclass(frozen=True)
class LevelTable:
    """F tabulated on a level grid; linear in between, zero outside."""

    levels: np.ndarray
    values: np.ndarray

    def __call__(self, x):
        return np.interp(x, self.levels, self.values, left=0.0, right=0.0)

    @property
    def support(self):
        return float(self.levels[0]), float(self.levels[-1])


@dataclass(frozen=True)
class ChaosCoeffs:
    """c_k with F(G_t) = sum_k c_k I_k(g_t^{(x)k}), k = 0..K."""

    R: float
    coeffs: np.ndarray
    t: Optional[float] = None

    @property
    def K(self):
        return self.coeffs.size - 1

    def second_moment(self):
        """E[F(G_t)^2] = sum_k k! R^k c_k^2 of the truncation."""
        k = np.arange(self.coeffs.size)
        logs = gammaln(k + 1) + k * np.log(self.R)
        return float(np.sum(self.coeffs**2 * np.exp(logs)))

    def evaluate(self, x):
        """sum_k c_k R^{k/2} He_k(x / sqrt(R)), since I_k(g^{(x)k}) = R^{k/2} He_k(G/sqrt(R))."""
        y = np.asarray(x, dtype=float) / np.sqrt(self.R)
        he_prev, he = np.zeros_like(y), np.ones_like(y)
        total = self.coeffs[0] * he
        for k in range(1, self.coeffs.size):
            he_prev, he = he, y * he - (k - 1) * he_prev
            total = total + self.coeffs[k] * self.R ** (k / 2) * he
        return total


def chaos_coeffs(F, R, K, t=None, order=None) -> ChaosCoeffs:
    """Chaos coefficients of F(G_t) given R = R_t > 0.

    ``F`` is a Dirac or a callable; callables are integrated by Gauss-Hermite
    in y = x / sqrt(2R), where xi_{t,k} carries the factor e^{-y^2/2} e_k(y).
    """
    if R <= 0:
        raise ArgumentError("chaos coefficients need R_t > 0")
    k = np.arange(K + 1)
    log_norm = -0.5 * (gammaln(k + 1) + k * np.log(R))
    if isinstance(F, Dirac):
        y = F.a / np.sqrt(2 * R)
        sign, logabs = log_hermite_functions(K, y)
        log_c = 0.25 * np.log(np.pi) - F.a**2 / (4 * R) - 0.5 * np.log(2 * np.pi * R) + logabs + log_norm
        c = sign * np.exp(log_c)
    else:
        # c_k = pi^{-1/4} (k! R^k)^{-1/2} int F(sqrt(2R) y) e^{-y^2/2} e_k(y) dy
        order = 2 * K + 64 if order is None else order
        Q, y = hermite_quadrature_matrix(K, order)
        # Q carries w e^{y^2} e_k(y); the extra e^{-y^2/2} is folded in below
        vals = np.asarray(F(np.sqrt(2 * R) * y), dtype=float) * np.exp(-0.5 * y**2)
        c = np.pi**-0.25 * np.exp(log_norm) * (Q @ vals)
    if not np.all(np.isfinite(c)):
        raise NumericError("non-finite chaos coefficient")
    return ChaosCoeffs(float(R), c, t)


class TestFunction:
    """A Schwartz test function eta = sum_k c_k e_k, truncated."""

    __test__ = False  # keep pytest from collecting the class

    def __init__(self, coeffs):
        self.coeffs = coeffs if isinstance(coeffs, HermiteCoeffs) else HermiteCoeffs(coeffs)
        self._cache = {}

    @classmethod
    def random(cls, K, rng, scale=0.5, decay=1.0):
        k = np.arange(K + 1)
        return cls(scale * rng.standard_normal(K + 1) / (1.0 + k) ** decay)

    @classmethod
    def zero(cls, K=0):
        return cls(np.zeros(K + 1))

    @property
    def K(self):
        return self.coeffs.K

    def norm0(self):
        return self.coeffs.l2_norm()

    def __call__(self, x):
        return self.coeffs.synthesize(x)

    def pairing(self, k: KernelFamily, t):
        """<g_t, eta> through the Hermite coefficients of g_t."""
        key = (k, float(t))
        if key not in self._cache:
            g = kernel_hermite_pairing(k, t, self.K)
            self._cache[key] = float(np.dot(g, self.coeffs.coeffs))
        return self._cache[key]


def s_transform_delta(k: KernelFamily, a, s, eta: TestFunction):
    """S(delta_a(G_s))(eta) = gamma(R_s, a - <g_s, eta>)."""
    R = float(k.variance(s))
    if R <= 0:
        raise ArgumentError("delta_a(G_s) is undefined where R_s = 0")
    m = eta.pairing(k, s)
    return heat_kernel(R, np.asarray(a, dtype=float) - m)


def _gauss_integral(F, mean, var, points=None):
    sd = math.sqrt(var)
    lo, hi = mean - 40 * sd, mean + 40 * sd
    inner = sorted(p for p in (points or ()) if lo < p < hi)

    def part(f):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(lambda x: f(x) * math.exp(-(x - mean) ** 2 / (2 * var)),
                                        lo, hi, points=inner or None, limit=400,
                                        epsabs=1e-13, epsrel=1e-11)
            except integrate.IntegrationWarning as exc:
                raise NumericError(f"Gaussian integral did not converge: {exc}") from None
        if not math.isfinite(val):
            raise NumericError("divergent integrand in S-transform")
        return val / math.sqrt(2 * math.pi * var)

    probe = F(mean)
    if np.iscomplexobj(probe):
        return complex(part(lambda x: float(np.real(F(x)))), part(lambda x: float(np.imag(F(x)))))
    return part(lambda x: float(F(x)))


def s_transform_functional(F, k: KernelFamily, t, eta: TestFunction, points=None):
    """S(F(G_t))(eta) = int F(x) gamma(R_t, x - <g_t, eta>) dx.

    ``F`` may be a Dirac, a LevelTable (zero outside its support; a warning is
    issued) or any callable, possibly complex valued. ``points`` lists
    breakpoints of F for the adaptive quadrature.
    """
    R = float(k.variance(t))
    if R <= 0:
        raise ArgumentError("F(G_t) is undefined where R_t = 0")
    m = eta.pairing(k, t)
    if isinstance(F, Dirac):
        return heat_kernel(R, F.a - m)
    if isinstance(F, LevelTable):
        lo, hi = F.support
        warnings.warn(f"tabulated F is extended by zero outside [{lo:g}, {hi:g}]", stacklevel=2)
        points = list(points or ()) + [lo, hi]
    return _gauss_integral(F, m, R, points)


def s_transform_gaussian(F: Callable, cov, shifts, order=40):
    """E[F(X + shifts)] for X ~ N(0, cov) by tensor Gauss-Hermite.

    This is S(F(<., f_1>, ..., <., f_d>))(eta) when cov = (<f_i, f_j>) and
    shifts = (<f_i, eta>); exact for polynomial F of degree < 2*order.
    """
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    d = cov.shape[0]
    if d > 4:
        raise ArgumentError("tensor quadrature is limited to d <= 4")
    L = np.linalg.cholesky(cov + 1e-300 * np.eye(d)) if d else cov
    y, logw = gauss_hermite(order)
    grids = np.meshgrid(*([y] * d), indexing="ij")
    Y = np.stack([g.ravel() for g in grids])  # (d, order^d)
    W = np.exp(sum(np.meshgrid(*([logw] * d), indexing="ij"))).ravel() / np.pi ** (d / 2)
    X = np.sqrt(2.0) * (L @ Y) + np.asarray(shifts, dtype=float)[:, None]
    return float(np.sum(W * F(*X)))


# --------------------------------------------------------------------------
# expected local times


def folded_normal_mean(var, c):
    """E|N(0, var) - c|."""
    if var <= 0:
        return abs(c)
    sd = math.sqrt(var)
    return sd * math.sqrt(2 / math.pi) * math.exp(-c * c / (2 * var)) + c * math.erf(c / (sd * math.sqrt(2)))


def _zero_exponent(k, s0, direction, T):
    # R_{s0 + direction*h} ~ h^p near a zero of R; estimate p
    h1, h2 = 1e-9 * T, 2e-9 * T
    r1 = float(k.variance(s0 + direction * h1))
    r2 = float(k.variance(s0 + direction * h2))
    if r1 <= 0 or r2 <= 0:
        return np.inf
    return math.log(r2 / r1) / math.log(2.0)


def _check_integrable(k, a, T, weighted):
    if abs(a) > 0:
        return
    for s0, direction in ((0.0, 1.0), (T, -1.0)):
        if float(k.variance(s0)) >= ZERO_VARIANCE:
            continue
        p = _zero_exponent(k, s0, direction, T)
        # ds: R^{-1/2} ~ h^{-p/2} needs p < 2; dR_s: R^{-1/2} R' ~ h^{p/2-1} is fine for p > 0
        if (not weighted and p >= 2) or (weighted and p <= 0):
            raise IntegrabilityError(
                f"R^(-1/2) is not integrable near s={s0:g} (R ~ h^{p:.3g}); E[local time at 0] diverges"
            )


def _split_quad(f, lo, hi, T):
    # int_lo^hi f with s = lo + (L/2) u^2 near lo and s = hi - (L/2) u^2 near hi
    half = 0.5 * (hi - lo)

    # when an edge sits next to an excluded zero, the integrand changes on the scale of
    # that zero's distance; log-spaced breakpoints let the adaptive rule see it
    def breaks(d):
        if d <= 0:
            return None
        top = 0.5 * half
        if d >= top:
            return None
        n = int(min(48, max(2, math.ceil(math.log10(top / d)))))
        h = np.geomspace(d, top, n + 1)[1:]
        return list(np.sqrt(h / half))

    def run(g, pts):
        out = integrate.quad(g, 0.0, 1.0, points=pts, limit=1000, epsabs=1e-14, epsrel=1e-12,
                             full_output=1)
        val, err = out[0], out[1]
        # roundoff near a variance zero is acceptable when the error estimate is small
        if len(out) > 3 and not ("oundoff" in out[3] and err <= 1e-9 * max(1.0, abs(val))):
            raise IntegrabilityError(f"time integral did not converge: {out[3]}")
        return val

    left = run(lambda u: f(lo + half * u * u) * 2 * half * u, breaks(lo))
    right = run(lambda u: f(hi - half * u * u) * 2 * half * u, breaks(T - hi))
    return left + right


class ExcludedMass(NamedTuple):
    """The time set {R_s < theta} next to endpoint zeros and what it carries."""

    measure: float  # Lebesgue measure of the excluded time set
    contribution: float  # integrand mass restored over it
    exponents: tuple  # local exponent p of R ~ h^p at each excluded endpoint


def _theta_edge(k, s0, direction, T, theta):
    # distance h from s0 at which R reaches theta; bisection in log h, R grows away from the zero
    lo, hi = 1e-300 * T, 0.5 * T
    if float(k.variance(s0 + direction * hi)) < theta:
        raise NumericError(f"R_s < theta on all of [{min(s0, T / 2):g}, {max(s0, T / 2):g}]")
    if float(k.variance(s0 + direction * lo)) >= theta:
        return 0.0
    while hi / lo - 1 > 1e-13:
        mid = math.sqrt(lo) * math.sqrt(hi)
        if float(k.variance(s0 + direction * mid)) < theta:
            lo = mid
        else:
            hi = mid
    return hi


def _active_interval(k, T, theta):
    lo = _theta_edge(k, 0.0, 1.0, T, theta) if float(k.variance(0.0)) < theta else 0.0
    hi = T - (_theta_edge(k, T, -1.0, T, theta) if float(k.variance(T)) < theta else 0.0)
    return lo, hi


def _unit_quad(g):
    return integrate.quad(g, 0.0, 1.0, limit=200, epsabs=1e-15, epsrel=1e-12)[0]


def excluded_mass(k: KernelFamily, a, T, theta=ZERO_VARIANCE, weighted=False) -> ExcludedMass:
    """Measure of {R_s < theta} at the endpoints and the integrand mass over it.

    Near an endpoint zero R is modelled as theta (h / h_theta)^p, so the
    unweighted mass is h_theta int_0^1 gamma(theta v^p, a) dv. With weights
    dR_s the mass is +-int_0^theta gamma(r, a) dr, exact for monotone R, with
    the minus sign at a zero in T.
    """
    measure, mass, exps = 0.0, 0.0, []
    for s0, direction in ((0.0, 1.0), (T, -1.0)):
        if float(k.variance(s0)) >= theta:
            continue
        h = _theta_edge(k, s0, direction, T, theta)
        p = _zero_exponent(k, s0, direction, T)
        measure += h
        exps.append(p)
        if weighted:
            # r = theta w^2 removes the r^{-1/2} singularity; dR_s < 0 when R falls to a zero at T
            mass += direction * _unit_quad(lambda w: 2 * theta * w * heat_kernel(theta * w * w, a))
        elif math.isfinite(p) and p < 2:
            # v = w^m with m (1 - p/2) = 1 makes the integrand bounded
            m = 1.0 / (1.0 - 0.5 * p)
            mass += h * _unit_quad(lambda w: m * w ** (m - 1) * heat_kernel(theta * w ** (m * p), a)
                                   if w > 0 else 0.0)
    return ExcludedMass(measure, mass, tuple(exps))


def expected_localtime(k: KernelFamily, a, T, theta=ZERO_VARIANCE):
    """E[l_T(a)] = int_0^T gamma(R_s, a) ds.

    Times with R_s < theta are left out of the quadrature and their share is
    restored by ``excluded_mass``.
    """
    if T <= 0:
        raise ArgumentError("T must be positive")
    k._check(T)
    _check_integrable(k, a, T, weighted=False)

    def f(s):
        return heat_kernel(float(k.variance(s)), a)

    lo, hi = _active_interval(k, T, theta)
    return _split_quad(f, lo, hi, T) + excluded_mass(k, a, T, theta).contribution


def expected_weighted_localtime(k: KernelFamily, a, T, theta=ZERO_VARIANCE, n_cells=2**16):
    """E[L_T(a)] = int_0^T gamma(R_s, a) dR_s.

    Uses R'_s when the family provides it, otherwise a midpoint
    Riemann-Stieltjes sum over dR_measure on ``n_cells`` cells.
    """
    if T <= 0:
        raise ArgumentError("T must be positive")
    k._check(T)
    _check_integrable(k, a, T, weighted=True)
    try:
        k.d_variance(0.5 * T)
    except CapabilityError:
        grid = np.linspace(0.0, T, n_cells + 1)
        mu = dR_measure(k, grid)
        R_mid = np.asarray(k.variance(0.5 * (grid[1:] + grid[:-1])))
        g = np.where(R_mid < theta, 0.0, heat_kernel(np.maximum(R_mid, 0.0), a))
        return float(np.sum(g * mu.increments))

    def f(s):
        return heat_kernel(float(k.variance(s)), a) * float(k.d_variance(s))

    lo, hi = _active_interval(k, T, theta)
    return _split_quad(f, lo, hi, T) + excluded_mass(k, a, T, theta, weighted=True).contribution


def zero_set_measure(k: KernelFamily, T, theta=ZERO_VARIANCE, n=2**16):
    """Lebesgue measure of {s in [0, T]: R_s < theta}, estimated on a grid."""
    s = np.linspace(0.0, T, n + 1)
    return float(np.mean(np.asarray(k.variance(s)) < theta) * T)


# --------------------------------------------------------------------------
# second moment of the local time


class SeriesResult(NamedTuple):
    value: float
    terms: np.ndarray
    last_term: float
    converging: bool
    warnings: List[str]


def _graded_rule(T, n_panels, nodes, both_ends):
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = np.linspace(0.0, 1.0, n_panels + 1)
    if both_ends:
        edges = T * 0.5 * (1 - np.cos(np.pi * u))
    else:
        edges = T * u**2
    a, b = edges[:-1, None], edges[1:, None]
    return (0.5 * (b - a) * (x + 1) + a).ravel(), (0.5 * (b - a) * w).ravel()


def localtime_variance_series(k: KernelFamily, a, T, K, n_panels=160, nodes=8,
                              theta=ZERO_VARIANCE) -> SeriesResult:
    """E[l_T(a)^2] from the chaos expansion, truncated at order K.

    Term k is k! iint phi_k(s) phi_k(u) R_{s,u}^k ds du with
    phi_k(s) = xi_{s,k}(a) / (sqrt(2 pi R_s) k! R_s^k); it is evaluated as
    iint psi_k(s) psi_k(u) rho(s,u)^k with rho the correlation and
    psi_k(s) = pi^{1/4} exp(-a^2/(4R_s)) e_k(a/sqrt(2R_s)) / sqrt(2 pi R_s),
    which involves no factorials.
    """
    if T <= 0 or K < 0:
        raise ArgumentError("need T > 0 and K >= 0")
    s, w = _graded_rule(T, n_panels, nodes, both_ends=not k.variance_increasing)
    R = np.asarray(k.variance(s))
    live = R >= theta
    s, w, R = s[live], w[live], R[live]
    C = k.covariance(s[:, None], s[None, :])
    rho = np.clip(C / np.sqrt(R[:, None] * R[None, :]), -1.0, 1.0)
    E = hermite_functions(K, a / np.sqrt(2 * R))
    pre = np.pi**0.25 * np.exp(-a * a / (4 * R)) / np.sqrt(2 * np.pi * R)
    terms = np.empty(K + 1)
    rk = np.ones_like(rho)
    for j in range(K + 1):
        psi = pre * E[j] * w
        terms[j] = psi @ rk @ psi
        rk = rk * rho
    notes = []
    nz = terms[np.abs(terms) > 1e-300]
    converging = True
    if K >= 4:
        # odd/even orders can vanish by symmetry, so compare like with like
        tail = np.abs(terms[-4:])
        converging = bool(tail[2] <= tail[0] and tail[3] <= tail[1])
        if not converging:
            notes.append("chaos series not yet decreasing at the truncation order")
    last = float(nz[-1]) if nz.size else 0.0
    return SeriesResult(float(np.sum(terms)), terms, last, converging, notes)


def _beta_graded(n_panels, nodes, m):
    # nodes/weights on [0, 1] after the map v -> I_v(m, m), which flattens
    # endpoint singularities like t^{-1+1/m} at both ends
    x, w = np.polynomial.legendre.leggauss(nodes)
    e = np.linspace(0.0, 1.0, n_panels + 1)
    lo, hi = e[:-1, None], e[1:, None]
    v = (0.5 * (hi - lo) * (x + 1) + lo).ravel()
    wv = (0.5 * (hi - lo) * w).ravel()
    jac = (v * (1 - v)) ** (m - 1) / beta_fn(m, m)
    return betainc(m, m, v), wv * jac


def localtime_second_moment_direct(k: KernelFamily, a, T, n_panels=24, nodes=16,
                                   grading=4, theta=ZERO_VARIANCE):
    """E[l_T(a)^2] = iint p_{s,u}(a, a) ds du, p the bivariate normal density.

    Independent of the chaos expansion; it sums all orders at once. The
    region u < s is mapped to the unit square with graded coordinates in s
    and in u/s, and a tensor Gauss-Legendre rule is applied.
    """
    c, wc = _beta_graded(n_panels, nodes, grading)
    s = T * c
    ws = T * wc
    Rs = np.asarray(k.variance(s))
    total = 0.0
    for frac, wf in zip(c, wc):
        u = s * frac
        Ru = np.asarray(k.variance(u))
        D = np.asarray(k.increment_variance(s, u))
        # R_s R_u - R_{s,u}^2 without cancellation near the diagonal
        rs, ru = np.sqrt(Rs), np.sqrt(Ru)
        det = 0.25 * (D - (Rs - Ru) ** 2 / np.maximum(rs + ru, 1e-300) ** 2) * ((rs + ru) ** 2 - D)
        ok = (Rs >= theta) & (Ru >= theta) & (det > 0)
        dens = np.zeros_like(s)
        dens[ok] = np.exp(-0.5 * a * a * D[ok] / det[ok]) / (2 * np.pi * np.sqrt(det[ok]))
        total += wf * np.sum(ws * s * dens)
    if not math.isfinite(total):
        raise NumericError("second-moment integral is not finite")
    return 2.0 * float(total)


def localtime_second_moment_binned(k: KernelFamily, a, T, width, n_panels=24, nodes=16,
                                   bin_nodes=8, theta=ZERO_VARIANCE):
    """Exact E[l_w^2] for the bin estimator l_w = (1/w) int_0^T 1{|G_s - a| < w/2} ds.

    The bivariate density of the direct formula is replaced by its average
    over the square bin x bin; as w -> 0 this tends to E[l_T(a)^2]. It
    isolates the bin-width bias of the histogram estimator from time
    discretization and Monte Carlo error.
    """
    if not width > 0:
        raise ArgumentError("bin width must be positive")
    c, wc = _beta_graded(n_panels, nodes, 4)
    s = T * c
    ws = T * wc
    xg, wg = np.polynomial.legendre.leggauss(bin_nodes)
    X = a + 0.5 * width * xg
    WX = 0.5 * wg
    Rs = np.asarray(k.variance(s))
    total = 0.0
    for frac, wf in zip(c, wc):
        u = s * frac
        Ru = np.asarray(k.variance(u))
        D = np.asarray(k.increment_variance(s, u))
        rs, ru = np.sqrt(Rs), np.sqrt(Ru)
        det = 0.25 * (D - (Rs - Ru) ** 2 / np.maximum(rs + ru, 1e-300) ** 2) * ((rs + ru) ** 2 - D)
        ok = (Rs >= theta) & (Ru >= theta) & (det > 0)
        dens = np.zeros_like(s)
        for x, wx in zip(X, WX):
            for y, wy in zip(X, WX):
                d = x - y
                # (x, y) Sigma^{-1} (x, y)^T det, arranged to avoid cancellation
                q = np.maximum(d * d * Ru + d * (Ru - Rs) * y + D * x * y, 0.0)
                dens[ok] += wx * wy * np.exp(-0.5 * q[ok] / det[ok]) / (2 * np.pi * np.sqrt(det[ok]))
        total += wf * np.sum(ws * s * dens)
    return 2.0 * float(total)
