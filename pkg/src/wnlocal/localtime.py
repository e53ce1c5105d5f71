"""Histogram estimators of local times and the occupation / IBP checks.

The level axis is cut into bins of equal width w. The sample G_{t_i}
represents the whole cell [t_i, t_{i+1}) (left endpoint), so

    l(bin, t_j) = sum_{i<j} dt_i 1{G_{t_i} in bin} / w,
    L(bin, t_j) = sum_{i<j} dR_i 1{G_{t_i} in bin} / w.
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ArgumentError, CapabilityError
from .kernels import KernelFamily, dR_measure, kernel_from_dict
from .simulate import PathEnsemble

WEIGHTINGS = ("lebesgue", "dR")
MAX_FIELD_SIZE = 60_000_000
DEFAULT_WIDTH_FACTOR = 0.04


@dataclass(frozen=True)
class BinSpec:
    """Equal-width level bins with ``level`` at a bin center.

    ``width`` defaults to 0.04 sqrt(R_T). The range [lo, hi] is always
    extended to cover the sampled values.
    """

    width: Optional[float] = None
    level: float = 0.0
    lo: Optional[float] = None
    hi: Optional[float] = None

    def edges(self, values, R_T):
        w = self.width
        if w is None:
            if R_T <= 0:
                raise ArgumentError("default bin width needs R_T > 0")
            w = DEFAULT_WIDTH_FACTOR * math.sqrt(R_T)
        if not w > 0:
            raise ArgumentError("bin width must be positive")
        vmin = float(np.min(values)) if np.size(values) else self.level
        vmax = float(np.max(values)) if np.size(values) else self.level
        lo = vmin if self.lo is None else min(self.lo, vmin)
        hi = vmax if self.hi is None else max(self.hi, vmax)
        j_lo = math.floor((lo - self.level) / w + 0.5)
        j_hi = math.floor((hi - self.level) / w + 0.5)
        # rounding must not leave the extreme values outside
        if self.level + (j_lo - 0.5) * w > lo:
            j_lo -= 1
        if self.level + (j_hi + 0.5) * w < hi:
            j_hi += 1
        j = np.arange(j_lo, j_hi + 1)
        return np.concatenate([self.level + (j - 0.5) * w, [self.level + (j_hi + 0.5) * w]])


def _as_spec(bins):
    if bins is None:
        return BinSpec()
    if isinstance(bins, BinSpec):
        return bins
    if isinstance(bins, (int, float)):
        return BinSpec(width=float(bins))
    raise ArgumentError(f"unsupported bin spec {bins!r}")


def bin_index(x, edges):
    """Bin of each value for equal-width ``edges``; -1 outside."""
    w = (edges[-1] - edges[0]) / (edges.size - 1)
    x = np.asarray(x)
    j = np.floor((x - edges[0]) / w).astype(np.int64)
    n = edges.size - 1
    j = np.where((j == n) & (x <= edges[-1]), n - 1, j)  # the right edge itself
    return np.where((j < 0) | (j >= n), -1, j)


@dataclass
class LocalTimeField:
    """Estimated local time per path, level bin and recorded time.

    ``values`` has shape (n_paths, n_bins, n_times); ``times`` are the
    recorded grid times and ``cell_weights`` the dt_i or dR_i used.
    """

    edges: np.ndarray
    times: np.ndarray
    values: np.ndarray
    weighting: str
    cell_weights: np.ndarray
    kernel: Optional[KernelFamily] = None
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weighting not in WEIGHTINGS:
            raise ArgumentError(f"weighting must be one of {WEIGHTINGS}")
        if self.values.ndim != 3 or self.values.shape[1] != self.edges.size - 1:
            raise ArgumentError("values must have shape (n_paths, n_bins, n_times)")

    @property
    def binwidth(self):
        return float((self.edges[-1] - self.edges[0]) / (self.edges.size - 1))

    @property
    def centers(self):
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def n_paths(self):
        return self.values.shape[0]

    def final(self):
        """(n_paths, n_bins) values at the last recorded time."""
        return self.values[:, :, -1]

    def mean(self):
        return self.values.mean(axis=0)

    def bin_of(self, a):
        j = int(bin_index(a, self.edges))
        if j < 0:
            raise ArgumentError(f"level {a} lies outside the bins")
        return j

    def at_level(self, a, time_index=-1):
        """Per-path values in the bin containing ``a``; 0 outside the bins."""
        j = int(bin_index(a, self.edges))
        if j < 0:
            return np.zeros(self.n_paths)
        return self.values[:, j, time_index]

    def mass(self, time_index=-1):
        """sum_bins value * binwidth, per path."""
        return self.values[:, :, time_index].sum(axis=1) * self.binwidth

    def sidecar(self):
        return {
            "edges": [float(x) for x in self.edges],
            "times": [float(x) for x in self.times],
            "binwidth": self.binwidth,
            "weighting": self.weighting,
            "cell_weights": [float(x) for x in self.cell_weights],
            "kernel": None if self.kernel is None else self.kernel.to_dict(),
            "seed": self.seed,
            "n_paths": int(self.n_paths),
            "meta": self.meta,
        }

    def to_csv(self, path, path_index=None):
        """Write (level, time, value) rows for one path or the ensemble mean.

        Exact metadata (edges, times, weighting, kernel, seed) goes to a
        .json sidecar; the CSV is written with '.' decimals and '\\n' endings.
        """
        data = self.mean() if path_index is None else self.values[path_index]
        path = Path(path)
        c = self.centers
        lines = ["level,time,value"]
        for j in range(c.size):
            for m, t in enumerate(self.times):
                lines.append(f"{float(c[j])!r},{float(t)!r},{float(data[j, m])!r}")
        path.write_text("\n".join(lines) + "\n", encoding="ascii")
        side = self.sidecar()
        side["reduced"] = "mean" if path_index is None else f"path {path_index}"
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        edges = np.array(side["edges"])
        times = np.array(side["times"])
        vals = raw[:, 2].reshape(edges.size - 1, times.size)[None]
        kernel = None if side["kernel"] is None else kernel_from_dict(side["kernel"])
        return cls(edges, times, vals, side["weighting"], np.array(side["cell_weights"]),
                   kernel, side["seed"], side.get("meta", {}))


def _cell_weights(e: PathEnsemble, weighting):
    if e.grid.size < 2:
        raise ArgumentError("local time estimation needs at least two grid times")
    if weighting == "lebesgue":
        return np.diff(e.grid)
    return dR_measure(e.kernel, e.grid).increments


def _record_index(grid, record_times):
    if record_times is None:
        return np.arange(grid.size)
    if isinstance(record_times, str):
        if record_times != "final":
            raise ArgumentError("record_times must be None, 'final' or a sequence of grid times")
        return np.array([grid.size - 1])
    idx = np.searchsorted(grid, np.asarray(record_times, dtype=float))
    if np.any(idx >= grid.size) or not np.allclose(grid[np.minimum(idx, grid.size - 1)], record_times,
                                                   rtol=0, atol=1e-12):
        raise ArgumentError("record_times must be grid times")
    return idx


def _estimate(e: PathEnsemble, bins, weighting, record_times, block=256):
    if e.paths.size == 0:
        raise ArgumentError("empty ensemble")
    spec = _as_spec(bins)
    w_cells = _cell_weights(e, weighting)
    R_T = float(e.kernel.variance(e.T))
    edges = spec.edges(e.paths[:, :-1], R_T)
    width = (edges[-1] - edges[0]) / (edges.size - 1)
    rec = _record_index(e.grid, record_times)
    n_bins, n_t = edges.size - 1, e.grid.size
    if e.n_paths * n_bins * rec.size > MAX_FIELD_SIZE:
        raise ArgumentError(
            f"field of {e.n_paths}x{n_bins}x{rec.size} values is too large; pass record_times='final'"
        )
    out = np.zeros((e.n_paths, n_bins, rec.size))
    # value at grid time t_j collects cells i < j
    cell_time = np.arange(1, n_t)
    for start in range(0, e.n_paths, block):
        stop = min(start + block, e.n_paths)
        b = bin_index(e.paths[start:stop, :-1], edges)
        for r, p in enumerate(range(start, stop)):
            if rec.size == 1:
                j = rec[0]
                out[p, :, 0] = np.bincount(b[r, :j], weights=w_cells[:j], minlength=n_bins)
                continue
            acc = np.zeros((n_bins, n_t))
            np.add.at(acc, (b[r], cell_time), w_cells)
            out[p] = np.cumsum(acc, axis=1)[:, rec]
    out /= width
    meta = {"occupancy": "left endpoint: G(t_i) weights [t_i, t_{i+1})",
            "bin_level": spec.level}
    return LocalTimeField(edges, e.grid[rec].copy(), out, weighting, w_cells, e.kernel, e.seed, meta)


def estimate_localtime(e: PathEnsemble, bins=None, record_times=None) -> LocalTimeField:
    """Histogram estimate of l_t(a) on every bin and recorded time.

    ``record_times`` is None (all grid times), 'final', or a list of grid times.
    """
    return _estimate(e, bins, "lebesgue", record_times)


def estimate_weighted_localtime(e: PathEnsemble, bins=None, record_times=None) -> LocalTimeField:
    """Histogram estimate of the dR-weighted local time L_t(a)."""
    return _estimate(e, bins, "dR", record_times)


def occupation_residual(path, phi, f: LocalTimeField, path_index=0, weighting=None):
    """|sum_i phi(G_{t_i}) w_i - sum_bins f(bin, T) phi(center) binwidth|.

    ``path`` holds the values of one path on the field's grid.
    """
    if weighting is not None and weighting != f.weighting:
        raise ArgumentError(f"field is {f.weighting}-weighted, not {weighting}")
    g = np.asarray(path, dtype=float)
    if g.size != f.cell_weights.size + 1:
        raise ArgumentError("path does not match the field's grid")
    lhs = float(np.sum(np.asarray(phi(g[:-1])) * f.cell_weights))
    rhs = float(np.sum(f.values[path_index, :, -1] * np.asarray(phi(f.centers))) * f.binwidth)
    return abs(lhs - rhs)


def _zero_times_inf(a, b):
    with np.errstate(invalid="ignore"):
        out = a * b
    return np.where(a == 0, 0.0, out)


def ibp_residual(e: PathEnsemble, a, T=None, bins=None, per_path=False):
    """Ensemble mean of |L_T(a) - [l_s(a) R'_s]_0^T + sum_i l_{t_i}(a) R''_{t_i} dt_i|.

    Both local times are read off the bin containing ``a``; 0 * inf counts as 0
    at s = 0 where R' or R'' may blow up.
    """
    grid = e.grid
    if T is not None:
        n = int(np.searchsorted(grid, T))
        if n >= grid.size or abs(grid[n] - T) > 1e-12:
            raise ArgumentError("T must be a grid time")
        e = PathEnsemble(grid[: n + 1], e.paths[:, : n + 1], e.seed, e.kernel, e.first_index, e.meta)
        grid = e.grid
    k = e.kernel
    d1 = np.asarray(k.d_variance(grid), dtype=float)
    d2 = np.asarray(k.d2_variance(grid), dtype=float)
    spec = _as_spec(bins)
    spec = BinSpec(spec.width, float(a), spec.lo, spec.hi)
    R_T = float(k.variance(e.T))
    edges = spec.edges(e.paths[:, :-1], R_T)
    width = (edges[-1] - edges[0]) / (edges.size - 1)
    target = int(bin_index(a, edges))
    hit = bin_index(e.paths[:, :-1], edges) == target
    dt = np.diff(grid)
    dR = dR_measure(k, grid).increments
    ell = np.zeros((e.n_paths, grid.size))
    ell[:, 1:] = np.cumsum(hit * dt, axis=1) / width
    L_T = (hit * dR).sum(axis=1) / width
    boundary = ell[:, -1] * d1[-1] - _zero_times_inf(ell[:, 0], d1[0])
    riemann = np.sum(_zero_times_inf(ell[:, :-1], d2[:-1]) * dt, axis=1)
    res = np.abs(L_T - boundary + riemann)
    return res if per_path else float(res.mean())
