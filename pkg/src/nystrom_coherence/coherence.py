"""Coherence of singular vectors, growth under subsampling, and sample-size bounds."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import DEFAULT_TOL, RankTolerance, eig_sym, rank_numeric
from .seeding import derive_seed

__all__ = [
    "CoherenceReport",
    "GrowthPoint",
    "SamplingBoundParams",
    "NotOrthonormalError",
    "coherence_of",
    "coherence_of_matrix",
    "coherence_growth",
    "default_growth_rank",
    "min_samples",
    "bound_is_vacuous",
    "sample_rows",
    "check_isometry",
]

ORTHONORMAL_TOL = 1e-8


class NotOrthonormalError(ValueError):
    def __init__(self, deviation: float):
        super().__init__(f"columns are not orthonormal: max |V^T V - I| = {deviation:.3e}")
        self.deviation = deviation


@dataclass(frozen=True)
class CoherenceReport:
    mu: float
    r: int
    n: int
    argmax: tuple[int, int]


@dataclass(frozen=True)
class GrowthPoint:
    n: int
    mean_mu: float
    r: int
    trials: int


@dataclass(frozen=True)
class SamplingBoundParams:
    r: int
    mu: float
    delta: float = 0.05
    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("rank must be at least 1")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("constants c1, c2 must be positive")
        if not self.mu >= 1 - 1e-9:
            raise ValueError("coherence is at least 1")


def coherence_of(v_r) -> CoherenceReport:
    """``sqrt(n) * max |V_r[i, j]|`` for a column-orthonormal ``n x r`` matrix.

    Ties for the largest entry resolve to the lexicographically smallest
    ``(row, column)``.
    """
    v = np.asarray(v_r, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None]
    n, r = v.shape
    dev = float(np.max(np.abs(v.T @ v - np.eye(r)))) if r else 0.0
    if dev > ORTHONORMAL_TOL:
        raise NotOrthonormalError(dev)
    flat = int(np.argmax(np.abs(v)))
    i, j = divmod(flat, r)
    return CoherenceReport(math.sqrt(n) * abs(float(v[i, j])), r, n, (i, j))


def coherence_of_matrix(g, r: int, tol: RankTolerance = DEFAULT_TOL, *,
                        check_rank: bool = True) -> CoherenceReport:
    """Coherence of the top-``r`` eigenvectors of a symmetric matrix."""
    if check_rank:
        rank = rank_numeric(g, tol)
        if r > rank:
            raise ValueError(f"r={r} exceeds the numerical rank {rank}")
    vectors = eig_sym(g, tol).vectors
    return coherence_of(vectors[:, :r])


def default_growth_rank(size: int, r: int = 100) -> int:
    return max(1, min(r, size // 2))


def coherence_growth(g, sizes, trials: int = 10, seed: int = 0, r: int | None = None,
                     tol: RankTolerance = DEFAULT_TOL) -> list[GrowthPoint]:
    """Mean coherence of random principal submatrices of ``g`` at each size.

    Each trial draws one index set and uses it for rows and columns, so the
    submatrix stays SPSD. ``r=None`` picks 100, or ``size // 2`` when the size
    is too small. Sizes below ``r`` are skipped with a warning.
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    points = []
    for size in sizes:
        if size > n:
            raise ValueError(f"size {size} exceeds the source dimension {n}")
        rank = default_growth_rank(size) if r is None else r
        if size < rank:
            warnings.warn(f"skipping size {size}: smaller than rank {rank}", stacklevel=2)
            continue
        mus = []
        for t in range(trials):
            rng = np.random.default_rng(derive_seed(seed, "coherence_growth", size, t))
            idx = np.sort(rng.choice(n, size, replace=False))
            sub = g[np.ix_(idx, idx)]
            mus.append(coherence_of_matrix(sub, rank, tol, check_rank=False).mu)
        points.append(GrowthPoint(size, float(np.mean(mus)), rank, trials))
    return points


def min_samples(p: SamplingBoundParams) -> int:
    """``ceil(r * mu^2 * max(c1 ln r, c2 ln(3 / delta)))``."""
    value = p.r * p.mu ** 2 * max(p.c1 * math.log(p.r), p.c2 * math.log(3.0 / p.delta))
    # guard against 461.0000000001-style round-off before the ceiling
    return int(math.ceil(round(value, 9)))


def bound_is_vacuous(l: int, n: int) -> bool:
    """A sample-size bound at or above ``n`` columns says nothing useful."""
    return l >= n


def sample_rows(v_r, l: int, seed: int = 0, replacement: bool = False) -> np.ndarray:
    """Uniformly chosen rows of ``V_r`` (verbatim copies), as an ``l x r`` block."""
    v = np.asarray(v_r, dtype=np.float64)
    n = v.shape[0]
    rng = np.random.default_rng(seed)
    if replacement:
        idx = rng.integers(0, n, size=l)
    else:
        if l > n:
            raise ValueError(f"cannot draw l={l} distinct rows from n={n}")
        idx = np.sort(rng.choice(n, size=l, replace=False))
    return v[idx]


def check_isometry(rows, n: int, l: int | None = None) -> float:
    """Spectral norm ``||(n / l) S^T S - I||_2`` for sampled rows ``S``."""
    s = np.asarray(rows, dtype=np.float64)
    l = s.shape[0] if l is None else l
    m = (n / l) * (s.T @ s) - np.eye(s.shape[1])
    return float(np.max(np.abs(eig_sym(m).values)))
