"""Reproducible Gaussian path sampling.

Every path owns a counter-based Philox stream keyed by (seed, path index),
so an ensemble is the same whatever block size or worker count produced it.
"""
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ArgumentError, NumericError
from .kernels import KernelFamily, _strict_grid, gram_matrix, kernel_from_dict

THREADS_ENV = "WNLOCAL_THREADS"
ZERO_VARIANCE = 1e-12


def default_workers():
    """Thread count from $WNLOCAL_THREADS, default 1."""
    try:
        return max(int(os.environ.get(THREADS_ENV, "1")), 1)
    except ValueError:
        return 1


def path_rng(seed, index):
    """Generator for path ``index`` of an ensemble seeded with ``seed``."""
    if seed < 0 or index < 0:
        raise ArgumentError("seed and path index must be non-negative")
    return np.random.Generator(np.random.Philox(key=[int(seed), int(index)]))


def uniform_grid(T, n_steps, t0=0.0):
    return np.linspace(t0, T, int(n_steps) + 1)


@dataclass
class PathEnsemble:
    """Sampled paths on a time grid. Row i is path ``first_index + i``."""

    grid: np.ndarray
    paths: np.ndarray
    seed: int
    kernel: KernelFamily
    first_index: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_paths(self):
        return self.paths.shape[0]

    @property
    def T(self):
        return float(self.grid[-1])

    def sidecar(self):
        return {
            "kernel": self.kernel.to_dict(),
            "grid": [float(t) for t in self.grid],
            "seed": int(self.seed),
            "first_index": int(self.first_index),
            "n_paths": int(self.n_paths),
            "meta": self.meta,
        }

    def to_csv(self, path):
        """One row per path; grid, kernel and seed go to a .json sidecar."""
        path = Path(path)
        np.savetxt(path, self.paths, fmt="%.17g", delimiter=",", newline="\n")
        path.with_suffix(".json").write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        side = json.loads(path.with_suffix(".json").read_text())
        paths = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(np.array(side["grid"]), paths, side["seed"], kernel_from_dict(side["kernel"]),
                   side["first_index"], side.get("meta", {}))


ALIGN = 64


def _aligned_product(seed, start, stop, m, B):
    """Rows start..stop-1 of Z @ B, Z[i] the standard normals of path i.

    Products are always formed on blocks of ALIGN consecutive path indices
    starting at a multiple of ALIGN, so every row goes through the same
    floating-point operations whatever the requested range.
    """
    out = np.empty((stop - start, B.shape[1]))
    first = (start // ALIGN) * ALIGN
    Z = np.empty((ALIGN, m))
    for b0 in range(first, stop, ALIGN):
        for r in range(ALIGN):
            Z[r] = path_rng(seed, b0 + r).standard_normal(m)
        prod = Z @ B
        lo, hi = max(b0, start), min(b0 + ALIGN, stop)
        out[lo - start : hi - start] = prod[lo - b0 : hi - b0]
    return out


def _cholesky_with_jitter(C):
    try:
        return np.linalg.cholesky(C), 0.0
    except np.linalg.LinAlgError:
        pass
    tr = float(np.sum(np.abs(np.diag(C)))) or 1.0
    jitter = 1e-12 * tr
    eye = np.eye(C.shape[0])
    while jitter <= 1e-6 * tr * (1 + 1e-9):
        try:
            return np.linalg.cholesky(C + jitter * eye), jitter
        except np.linalg.LinAlgError:
            jitter *= 10
    lam = float(np.linalg.eigvalsh(C)[0])
    raise NumericError(f"Cholesky failed up to jitter 1e-6*trace; smallest eigenvalue {lam:.3e}")


class CholeskySampler:
    """Exact-in-law sampler for a kernel family on a fixed grid.

    Grid times with R_t below ZERO_VARIANCE are pinned to 0 and left out of
    the factorization.
    """

    def __init__(self, kernel: KernelFamily, grid):
        self.kernel = kernel
        self.grid = _strict_grid(grid)
        R = np.asarray(kernel.variance(self.grid))
        self.active = R >= ZERO_VARIANCE
        if not self.active.any():
            raise ArgumentError("every grid time has zero variance")
        C = gram_matrix(kernel, self.grid[self.active])
        self.factor, self.jitter = _cholesky_with_jitter(C)

    def _block(self, seed, start, stop):
        m = self.factor.shape[0]
        out = np.zeros((stop - start, self.grid.size))
        out[:, self.active] = _aligned_product(seed, start, stop, m, self.factor.T)
        return out

    def sample(self, n, seed, start=0, workers=None) -> PathEnsemble:
        if n < 1:
            raise ArgumentError("need at least one path")
        workers = default_workers() if workers is None else max(int(workers), 1)
        cuts = np.linspace(start, start + n, workers + 1)[1:-1]
        inner = sorted({int(round(c / ALIGN)) * ALIGN for c in cuts} - {start, start + n})
        bounds = [start] + [b for b in inner if start < b < start + n] + [start + n]
        chunks = list(zip(bounds[:-1], bounds[1:]))
        if len(chunks) == 1:
            paths = self._block(seed, start, start + n)
        else:
            with ThreadPoolExecutor(len(chunks)) as pool:
                parts = list(pool.map(lambda c: self._block(seed, *c), chunks))
            paths = np.vstack(parts)
        return PathEnsemble(self.grid.copy(), paths, int(seed), self.kernel, int(start),
                            {"method": "cholesky", "jitter": self.jitter})

    def blocks(self, n, seed, block_size=1000, workers=None):
        """Yield the ensemble of ``n`` paths in consecutive blocks."""
        for start in range(0, n, block_size):
            yield self.sample(min(block_size, n - start), seed, start=start, workers=workers)


def sample_paths(k: KernelFamily, grid, n, seed, workers=None) -> PathEnsemble:
    """n i.i.d. centered Gaussian paths with covariance [R_{t_i, t_j}]."""
    return CholeskySampler(k, grid).sample(n, seed, workers=workers)


def vgamma_weights(alpha, grid, refine):
    """Matrix A with G_grid = A @ Z for Z i.i.d. N(0, 1) on the fine cells.

    Each grid interval (and [0, t_0]) is split into ``refine`` cells; the kernel
    eps(t_i - .) is replaced by its average over each cell, times sqrt(cell
    length).
    """
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ArgumentError("time grid must be non-empty and strictly increasing")
    if grid[0] < 0:
        raise ArgumentError("vgamma grid must lie in [0, T]")
    knots = np.concatenate([[0.0], grid[grid > 0]])
    fine = np.concatenate([np.linspace(a, b, refine + 1)[:-1] for a, b in zip(knots[:-1], knots[1:])]
                          + [knots[-1:]])
    ds = np.diff(fine)
    b1 = 0.5 * (alpha + 1)
    A = np.zeros((grid.size, ds.size))
    for i, t in enumerate(grid):
        if t <= 0:
            continue
        J = int(np.searchsorted(fine, t, side="left"))
        lo = t - fine[:J]
        hi = t - fine[1 : J + 1]
        avg = np.sqrt(alpha) * (lo**b1 - np.maximum(hi, 0.0) ** b1) / (b1 * ds[:J])
        A[i, :J] = avg * np.sqrt(ds[:J])
    return A


class VGammaSampler:
    """V_gamma paths (gamma^2(t) = t^alpha) by direct discrete convolution."""

    def __init__(self, alpha, grid, refine=256):
        if not 0 < alpha < 1:
            raise ArgumentError("alpha must lie in (0, 1)")
        self.alpha = float(alpha)
        self.grid = np.asarray(grid, dtype=float).ravel()
        self.refine = int(refine)
        self.weights = vgamma_weights(self.alpha, self.grid, self.refine)
        self.kernel = KernelFamily.vgamma(self.alpha)

    def sample(self, n, seed, start=0, workers=None) -> PathEnsemble:
        if n < 1:
            raise ArgumentError("need at least one path")
        paths = _aligned_product(seed, start, start + n, self.weights.shape[1], self.weights.T)
        return PathEnsemble(self.grid.copy(), paths, int(seed), self.kernel, int(start),
                            {"method": "convolution", "refine": self.refine})

    def blocks(self, n, seed, block_size=1000, workers=None):
        for start in range(0, n, block_size):
            yield self.sample(min(block_size, n - start), seed, start=start)


def sample_vgamma(alpha, grid, n, seed, refine=256) -> PathEnsemble:
    """V_gamma paths (gamma^2(t) = t^alpha) by direct discrete convolution."""
    return VGammaSampler(alpha, grid, refine).sample(n, seed)


def make_sampler(k: KernelFamily, grid, refine=256):
    """Cholesky sampler, or the convolution sampler for vgamma."""
    if k.name == "vgamma":
        return VGammaSampler(k.alpha, grid, refine)
    return CholeskySampler(k, grid)
