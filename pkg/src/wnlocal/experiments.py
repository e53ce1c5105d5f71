"""Named experiments behind the command line.

Each runner takes a validated ExperimentConfig and returns an Outcome with
pass/fail checks, tables for CSV export and extra report fields. Nothing here
writes files.
"""
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import chaos, localtime as lt, wick
from .config import ExperimentConfig
from .errors import ArgumentError, CapabilityError, IntegrabilityError
from .kernels import covariance_via_parseval, gram_matrix
from .simulate import PathEnsemble, make_sampler, uniform_grid

BLOCK = 1000


@dataclass
class Table:
    header: List[str]
    columns: List[np.ndarray]

    def __post_init__(self):
        self.columns = [np.asarray(c) for c in self.columns]
        sizes = {c.size for c in self.columns}
        if len(self.header) != len(self.columns) or len(sizes) > 1:
            raise ArgumentError("table header and columns disagree")

    @property
    def n_rows(self):
        return self.columns[0].size if self.columns else 0


@dataclass
class Check:
    name: str
    value: Any
    tolerance: Any
    passed: bool

    def to_dict(self):
        return {"name": self.name, "value": _plain(self.value), "tolerance": _plain(self.tolerance),
                "pass": bool(self.passed)}


@dataclass
class Outcome:
    checks: List[Check] = field(default_factory=list)
    tables: Dict[str, Table] = field(default_factory=dict)
    outputs: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    ensemble: Optional[PathEnsemble] = None

    def check(self, name, value, tolerance, passed):
        self.checks.append(Check(name, value, tolerance, bool(passed)))

    @property
    def passed(self):
        return all(c.passed for c in self.checks)


def _plain(x):
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def make_grid(cfg: ExperimentConfig):
    if cfg.grid.times is not None:
        return np.asarray(cfg.grid.times, dtype=float)
    return uniform_grid(cfg.grid.T, cfg.grid.n_steps)


def _sampler(cfg, grid):
    return make_sampler(cfg.kernel, grid, refine=int(cfg.params.get("refine", 256)))


def _bins(cfg, level=None):
    return lt.BinSpec(cfg.bins.width, cfg.bins.level if level is None else float(level))


# --------------------------------------------------------------------------


def run_simulate(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    grid = make_grid(cfg)
    if cfg.n_paths * grid.size > 50_000_000:
        raise ArgumentError("simulate writes every path; reduce n_paths or the grid")
    e = _sampler(cfg, grid).sample(cfg.n_paths, cfg.seed)
    out.ensemble = e
    R = np.asarray(cfg.kernel.variance(grid))
    var = e.paths.var(axis=0, ddof=1) if cfg.n_paths > 1 else np.zeros_like(R)
    se = R * math.sqrt(2.0 / max(cfg.n_paths - 1, 1))
    z = np.where(se > 0, np.abs(var - R) / np.where(se > 0, se, 1.0), 0.0)
    out.tables["variance"] = Table(["time", "R", "sample_variance", "z"], [grid, R, var, z])
    zt = cfg.tolerances["variance_z"]
    out.check("max variance z-score", float(z.max()), zt, z.max() <= zt)
    out.outputs["jitter"] = e.meta.get("jitter", 0.0)
    return out


def _accumulate(acc, f: lt.LocalTimeField, level, width):
    # bins are anchored at ``level``, so index j means the same interval in every block
    j0 = int(round((f.edges[0] - level) / width + 0.5))
    vals = f.final()
    new = {"sum": vals.sum(axis=0), "sq": (vals**2).sum(axis=0)}
    if not acc:
        acc.update(new, j0=j0)
        return
    size = acc["sum"].size
    lo = min(acc["j0"], j0)
    hi = max(acc["j0"] + size, j0 + vals.shape[1])
    for key, arr in new.items():
        merged = np.zeros(hi - lo)
        merged[acc["j0"] - lo : acc["j0"] - lo + size] += acc[key]
        merged[j0 - lo : j0 - lo + arr.size] += arr
        acc[key] = merged
    acc["j0"] = lo


def run_localtime(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    grid = make_grid(cfg)
    k = cfg.kernel
    weighting = cfg.params["weighting"]
    estimate = lt.estimate_localtime if weighting == "lebesgue" else lt.estimate_weighted_localtime
    expected = chaos.expected_localtime if weighting == "lebesgue" else chaos.expected_weighted_localtime
    spec = _bins(cfg)
    R_T = float(k.variance(grid[-1]))
    width = spec.width if spec.width is not None else lt.DEFAULT_WIDTH_FACTOR * math.sqrt(R_T)
    spec = lt.BinSpec(width, spec.level)
    acc: Dict[str, Any] = {}
    masses = []
    weights = None
    for e in _sampler(cfg, grid).blocks(cfg.n_paths, cfg.seed, BLOCK):
        f = estimate(e, spec, record_times="final")
        weights = f.cell_weights
        masses.append(f.mass())
        _accumulate(acc, f, spec.level, width)
    n = cfg.n_paths
    mean = acc["sum"] / n
    sq = acc["sq"] / n
    j = acc["j0"] + np.arange(mean.size)
    edges = np.concatenate([spec.level + (j - 0.5) * width, [spec.level + (j[-1] + 0.5) * width]])
    field_ = lt.LocalTimeField(edges, grid[-1:].copy(), mean[None, :, None], weighting, weights, k, cfg.seed,
                               {"reduced": "ensemble mean", "n_paths": n})
    out.tables["field"] = Table(["level", "time", "value"],
                                [field_.centers, np.full(mean.size, grid[-1]), mean])
    # conservation: every path carries T (or R_T - R_0) in total
    target = float(np.sum(weights))
    masses = np.concatenate(masses)
    cons = float(np.max(np.abs(masses - target)))
    out.check("conservation (max over paths)", cons, 1e-12, cons <= 1e-12)

    rows = {"level": [], "estimate": [], "stderr": [], "expected": [], "rel_error": []}
    for a in cfg.params["levels"]:
        b = int(lt.bin_index(a, edges))
        est = float(mean[b]) if b >= 0 else 0.0
        se = float(math.sqrt(max(sq[b] - mean[b] ** 2, 0.0) / max(n - 1, 1))) if b >= 0 else 0.0
        try:
            ex = expected(k, float(a), float(grid[-1]))
        except IntegrabilityError as exc:
            msg = f"level {a}: {exc}; the estimator is reported without a reference value"
            warnings.warn(msg, stacklevel=2)
            out.warnings.append(msg)
            ex = math.nan
        rel = abs(est - ex) / ex if ex > 0 else math.nan
        for key, v in zip(rows, (a, est, se, ex, rel)):
            rows[key].append(v)
        if math.isfinite(rel):
            out.check(f"mean estimate at level {a:g}", rel, cfg.tolerances["rel"], rel <= cfg.tolerances["rel"])
    out.tables["levels"] = Table(list(rows), [np.array(v, dtype=float) for v in rows.values()])

    m = int(cfg.params["curve_points"])
    if m > 0:
        lo, hi = cfg.params["curve_range"]
        a = np.linspace(float(lo), float(hi), m)
        out.tables["expected_curve"] = Table(["level", "value"],
                                             [a, np.array([expected(k, float(x), float(grid[-1])) for x in a])])
    out.outputs["binwidth"] = width
    return out


def run_occupation(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    grid = make_grid(cfg)
    e = _sampler(cfg, grid).sample(cfg.n_paths, cfg.seed)
    R_T = float(cfg.kernel.variance(grid[-1]))
    w0 = cfg.bins.width if cfg.bins.width is not None else lt.DEFAULT_WIDTH_FACTOR * math.sqrt(R_T)
    n_check = min(int(cfg.params["paths_checked"]), e.n_paths)
    tol = cfg.tolerances["exact"]
    widths, kinds, means = [], [], []
    for weighting, est in (("lebesgue", lt.estimate_localtime), ("dR", lt.estimate_weighted_localtime)):
        f = est(e, lt.BinSpec(w0, cfg.bins.level), record_times="final")
        table = np.cos(1.7 * np.arange(f.edges.size - 1)) + 2.0
        pc = lambda x, f=f, table=table: np.where(lt.bin_index(x, f.edges) >= 0,
                                                  table[np.maximum(lt.bin_index(x, f.edges), 0)], 0.0)
        one = lambda x: np.ones_like(np.asarray(x, dtype=float))
        for name, phi in (("piecewise constant", pc), ("constant 1", one)):
            r = max(lt.occupation_residual(e.paths[i], phi, f, i) for i in range(n_check))
            out.check(f"{weighting}: {name} residual", r, tol, r <= tol)
        prev = math.inf
        ok = True
        for level in range(int(cfg.params["refinements"])):
            w = w0 / 2**level
            g = est(e, lt.BinSpec(w, cfg.bins.level), record_times="final")
            r = float(np.mean([lt.occupation_residual(e.paths[i], np.square, g, i) for i in range(e.n_paths)]))
            widths.append(w)
            kinds.append(weighting)
            means.append(r)
            ok = ok and r < prev
            prev = r
        out.check(f"{weighting}: x^2 residual decreases under bin halving", ok, True, ok)
    out.tables["refinement"] = Table(["binwidth", "weighting", "mean_residual"],
                                     [np.array(widths), np.array(kinds), np.array(means)])
    return out


def run_tanaka_expectation(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    k, T = cfg.kernel, float(make_grid(cfg)[-1])
    if not k.variance_increasing:
        msg = f"{k.label()} does not have increasing R; the identity is not expected to hold"
        out.warnings.append(msg)
    R_T = float(k.variance(T))
    cs = np.asarray(cfg.params["levels"], dtype=float)
    lhs = np.array([chaos.folded_normal_mean(R_T, c) for c in cs])
    EL = np.array([chaos.expected_weighted_localtime(k, c, T) for c in cs])
    res = np.abs(lhs - np.abs(cs) - EL)
    tol = cfg.tolerances["residual"]
    for c, r in zip(cs, res):
        out.check(f"residual at c={c:g}", float(r), tol, r <= tol)
    out.tables["tanaka"] = Table(["c", "folded_normal_mean", "abs_c_plus_expected_L", "residual"],
                                 [cs, lhs, np.abs(cs) + EL, res])
    return out


def run_tanaka_path(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    grid = make_grid(cfg)
    e = _sampler(cfg, grid).sample(cfg.n_paths, cfg.seed)
    p = cfg.params
    rep = wick.tanaka_check_path(cfg.kernel, float(p["c"]), float(grid[-1]), e, p["delta"], p["binwidth"])
    offset = rep.mollification_offset(e.paths[:, 0], e.paths[:, -1])
    z = abs(rep.mean - offset) / rep.stderr
    out.check("mean residual vs mollification offset (z)", z, cfg.tolerances["z"], z <= cfg.tolerances["z"])
    out.outputs.update(rep.summary())
    out.outputs["mollification_offset"] = offset
    out.tables["residuals"] = Table(["path", "residual", "wick_integral", "weighted_localtime"],
                                    [np.arange(e.n_paths), rep.residuals, rep.integral.values, rep.localtime])
    return out


def run_ito_quadratic(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    exps = sorted(int(m) for m in cfg.params["exponents"])
    finest = 2 ** exps[-1]
    if cfg.grid.times is not None or cfg.grid.n_steps != finest:
        raise ArgumentError(f"ito-quadratic needs a uniform grid with n_steps = 2^{exps[-1]} = {finest}")
    grid = make_grid(cfg)
    e = _sampler(cfg, grid).sample(cfg.n_paths, cfg.seed)
    rows = []
    for m in exps:
        step = finest // 2**m
        sub = PathEnsemble(e.grid[::step], e.paths[:, ::step], e.seed, e.kernel)
        r = wick.ito_quadratic_error(sub)
        rows.append((m, 2**m, r["l2_error"], r["relative"]))
    rel = np.array([r[3] for r in rows])
    mono = bool(np.all(np.diff(rel) < 0))
    out.check("L2 error decreases monotonically", mono, True, mono)
    tol = cfg.tolerances["final_rel"]
    out.check("final relative L2 error", float(rel[-1]), tol, rel[-1] <= tol)
    cols = list(zip(*rows))
    out.tables["ito"] = Table(["exponent", "n_steps", "l2_error", "relative"], [np.array(c) for c in cols])
    return out


def run_chaos_variance(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    k, T = cfg.kernel, float(make_grid(cfg)[-1])
    a, K = float(cfg.params["level"]), int(cfg.params["K"])
    series = chaos.localtime_variance_series(k, a, T, K)
    out.warnings.extend(series.warnings)
    direct = chaos.localtime_second_moment_direct(k, a, T)
    R_T = float(k.variance(T))
    width = cfg.bins.width if cfg.bins.width is not None else lt.DEFAULT_WIDTH_FACTOR * math.sqrt(R_T)
    binned = chaos.localtime_second_moment_binned(k, a, T, width)
    out.outputs.update({"series": series.value, "last_term": series.last_term, "converging": series.converging,
                        "direct": direct, "binned_exact": binned, "binwidth": width})
    if cfg.n_paths > 0:
        grid = make_grid(cfg)
        vals = []
        for e in _sampler(cfg, grid).blocks(cfg.n_paths, cfg.seed, BLOCK):
            f = lt.estimate_localtime(e, lt.BinSpec(width, a), record_times="final")
            vals.append(f.at_level(a))
        v = np.concatenate(vals) ** 2
        mc, se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))
        rel = abs(series.value - mc) / mc
        out.outputs.update({"monte_carlo": mc, "monte_carlo_stderr": se})
        out.check("series vs Monte Carlo second moment", rel, cfg.tolerances["rel"], rel <= cfg.tolerances["rel"])
    kk = np.arange(K + 1)
    out.tables["series"] = Table(["k", "term", "cumulative"], [kk, series.terms, np.cumsum(series.terms)])
    return out


def run_kernel_verify(cfg: ExperimentConfig) -> Outcome:
    out = Outcome()
    k = cfg.kernel
    times = np.asarray(cfg.params["times"], dtype=float)
    G = gram_matrix(k, times)
    lam = float(np.linalg.eigvalsh(G)[0])
    out.check("Gram matrix positive semidefinite", lam, -1e-8 * float(np.trace(G)),
              lam >= -1e-8 * float(np.trace(G)))
    T1, T2 = np.meshgrid(times, times, indexing="ij")
    t1, t2 = T1.ravel(), T2.ravel()
    H = {"bm": 0.5, "fbm": k.H}.get(k.name)
    if k.name == "mbm" and k.h.is_constant:
        H = k.h.params[0]
    if H is not None:
        closed = np.asarray(k.covariance(t1, t2))
        pars = np.array([covariance_via_parseval(H, t, s).value for t, s in zip(t1, t2)])
        rel = np.abs(pars - closed) / np.abs(closed)
        tol = cfg.tolerances["parseval_rel"]
        out.check("Parseval vs closed-form covariance (max rel)", float(rel.max()), tol, rel.max() <= tol)
        out.tables["parseval"] = Table(["t", "s", "closed_form", "parseval", "rel_error"],
                                       [t1, t2, closed, pars, rel])
    if k.name == "vgamma":
        off = t1 != t2
        t1, t2 = t1[off], t2[off]
        D = np.asarray(k.increment_variance(t1, t2))
        lag = np.asarray(k.variance(np.abs(t1 - t2)))
        exact = bool(np.all((lag <= D * (1 + 1e-12)) & (D <= 2 * lag * (1 + 1e-12))))
        out.check("closed-form R_|t-s| <= Delta <= 2 R_|t-s|", exact, True, exact)
        cols = [t1, t2, lag, D]
        header = ["t", "s", "R_lag", "Delta"]
        if cfg.n_paths > 1:
            grid = np.unique(times)
            e = make_sampler(k, grid, refine=int(cfg.params["refine"])).sample(cfg.n_paths, cfg.seed)
            i1 = np.searchsorted(grid, t1)
            i2 = np.searchsorted(grid, t2)
            d2 = (e.paths[:, i1] - e.paths[:, i2]) ** 2
            est = d2.mean(axis=0)
            se = d2.std(axis=0, ddof=1) / math.sqrt(cfg.n_paths)
            z = cfg.tolerances["z"]
            ok = bool(np.all((est + z * se >= lag) & (est - z * se <= 2 * lag)))
            out.check(f"sampled Delta within bounds up to {z:g} standard errors", ok, True, ok)
            cols += [est, se]
            header += ["Delta_hat", "stderr"]
        out.tables["vgamma_bounds"] = Table(header, cols)
    return out


RUNNERS = {
    "simulate": run_simulate,
    "localtime": run_localtime,
    "occupation": run_occupation,
    "tanaka-expectation": run_tanaka_expectation,
    "tanaka-path": run_tanaka_path,
    "ito-quadratic": run_ito_quadratic,
    "chaos-variance": run_chaos_variance,
    "kernel-verify": run_kernel_verify,
}
