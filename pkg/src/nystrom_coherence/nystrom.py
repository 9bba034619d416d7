"""Uniform column sampling and the Nystrom approximation ``C W_k^+ C^T``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    RankTolerance,
    as_symmetric,
    eig_sym,
    frobenius,
    pinv_trunc,
    rank_numeric,
)
from .seeding import derive_seed

__all__ = [
    "STREAMING_CUTOFF",
    "SampleScheme",
    "NystromModel",
    "sample_columns",
    "fit",
    "reconstruct",
    "percent_error",
    "estimate_recovery_prob",
]

#: ``percent_error`` streams over row blocks instead of forming G~ when n exceeds this.
STREAMING_CUTOFF = 3000


@dataclass(frozen=True)
class SampleScheme:
    l: int
    replacement: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("sample count l must be at least 1")

    def check(self, n: int) -> None:
        if not self.replacement and self.l > n:
            raise ValueError(f"cannot draw l={self.l} distinct columns from n={n}")


@dataclass(frozen=True, eq=False)
class NystromModel:
    """Sampled factors of a Nystrom approximation. ``G~`` is never stored."""

    indices: np.ndarray
    C: np.ndarray
    W: np.ndarray
    k: int
    W_k_pinv: np.ndarray

    @property
    def n(self) -> int:
        return self.C.shape[0]

    @property
    def l(self) -> int:
        return len(self.indices)

    def rows(self, start: int, stop: int) -> np.ndarray:
        """Rows ``start:stop`` of the approximation."""
        return self.C[start:stop] @ (self.W_k_pinv @ self.C.T)

    def block_sq_diff(self, g, block: int = 512) -> float:
        """Squared Frobenius distance to ``g`` accumulated over row blocks."""
        g = np.asarray(g)
        if g.shape != (self.n, self.n):
            raise ValueError(f"shape mismatch {g.shape} vs {(self.n, self.n)}")
        right = self.W_k_pinv @ self.C.T
        total = 0.0
        for start in range(0, self.n, block):
            diff = g[start:start + block] - self.C[start:start + block] @ right
            total += float(np.sum(diff * diff))
        return total


def sample_columns(n: int, scheme: SampleScheme) -> np.ndarray:
    """Uniform column indices for an ``n``-column matrix.

    Without replacement the indices come back sorted; with replacement they
    are i.i.d. draws in draw order.
    """
    scheme.check(n)
    rng = np.random.default_rng(scheme.seed)
    if scheme.replacement:
        return rng.integers(0, n, size=scheme.l)
    return np.sort(rng.choice(n, size=scheme.l, replace=False))


def fit(g, scheme: SampleScheme, k: int | None = None,
        tol: RankTolerance = DEFAULT_TOL, *, indices=None) -> NystromModel:
    """Sample columns of ``g`` and build the rank-``k`` Nystrom factors.

    ``k`` defaults to ``l``. Passing ``indices`` skips sampling (the scheme
    then only supplies ``l``).
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    if indices is None:
        indices = sample_columns(n, scheme)
    indices = np.asarray(indices, dtype=np.intp)
    l = len(indices)
    k = l if k is None else k
    if not 1 <= k <= l:
        raise ValueError(f"rank k must lie in [1, l={l}], got {k}")
    c = g[:, indices]
    w = as_symmetric(c[indices])
    return NystromModel(indices, c, w, k, pinv_trunc(w, k, tol))


def reconstruct(model: NystromModel) -> np.ndarray:
    out = model.rows(0, model.n)
    return (out + out.T) / 2


def percent_error(g, model: NystromModel, streaming_cutoff: int = STREAMING_CUTOFF) -> float:
    """``100 * ||G - G~_k||_F / ||G||_F``."""
    g = np.asarray(g, dtype=np.float64)
    denom = frobenius(g)
    if denom == 0.0:
        raise ValueError("percent error is undefined for a zero matrix")
    if g.shape[0] > streaming_cutoff:
        num = np.sqrt(model.block_sq_diff(g))
    else:
        num = frobenius(g - reconstruct(model))
    return 100.0 * float(num) / denom


def estimate_recovery_prob(g, r: int | None, l: int, trials: int, seed: int = 0, *,
                           replacement: bool = False,
                           tol: RankTolerance = DEFAULT_TOL) -> float:
    """Monte Carlo estimate of ``P[rank(W) = r]`` under uniform column sampling.

    Trial ``t`` samples with seed ``derive_seed(seed, "recovery", t)``, so the
    estimate does not depend on how trials are scheduled. ``r=None`` uses the
    numerical rank of ``g``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    g = as_symmetric(g)
    n = g.shape[0]
    if r is None:
        r = rank_numeric(g, tol)
    hits = 0
    for t in range(trials):
        scheme = SampleScheme(l, replacement, derive_seed(seed, "recovery", t))
        idx = sample_columns(n, scheme)
        w = g[np.ix_(idx, idx)]
        hits += rank_numeric(w, tol) == r
    return hits / trials
