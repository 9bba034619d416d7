"""Dense symmetric linear algebra used throughout the package.

Symmetric matrices are plain ``numpy`` arrays; :func:`as_symmetric` is the
single entry point that validates and symmetrizes them. Eigendecomposition
is done with cyclic Jacobi rotations for small matrices and LAPACK
(``numpy.linalg.eigh``) above :data:`JACOBI_MAX_N`; both paths share the same
ordering and sign conventions so callers never see which one ran.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "JACOBI_MAX_N",
    "SPSD_NEGATIVE_SLACK",
    "ConvergenceError",
    "NotSPSDError",
    "RankDeficientError",
    "RankTolerance",
    "EigenDecomp",
    "as_symmetric",
    "eig_sym",
    "jacobi_eigh",
    "pinv_trunc",
    "rank_numeric",
    "qr_orthonormalize",
    "frobenius",
    "frobenius_diff",
    "truncate_rank",
]

#: Largest dimension handled by the Jacobi solver when ``method="auto"``.
JACOBI_MAX_N = 64

#: Negative eigenvalues down to ``-SPSD_NEGATIVE_SLACK * sigma_1`` are round-off.
SPSD_NEGATIVE_SLACK = 1e-10


class ConvergenceError(RuntimeError):
    """Jacobi iteration ran out of sweeps."""

    def __init__(self, off_norm: float, sweeps: int):
        super().__init__(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps; "
            f"remaining off-diagonal norm {off_norm:.3e}"
        )
        self.off_norm = off_norm
        self.sweeps = sweeps


class NotSPSDError(ValueError):
    pass


class RankDeficientError(ValueError):
    def __init__(self, column: int):
        super().__init__(f"column {column} is numerically dependent on the previous columns")
        self.column = column


@dataclass(frozen=True)
class RankTolerance:
    """Cutoff for deciding which eigenvalues count as nonzero.

    ``relative_cutoff=None`` means ``n * 1e-12``, evaluated for the matrix at
    hand. An eigenvalue is kept when ``|s| > max(relative_cutoff * s_max,
    absolute_floor)``.
    """

    relative_cutoff: float | None = None
    absolute_floor: float = 0.0

    def __post_init__(self):
        if self.relative_cutoff is not None and not self.relative_cutoff > 0:
            raise ValueError("relative_cutoff must be positive")
        if self.absolute_floor < 0:
            raise ValueError("absolute_floor must be non-negative")

    def threshold(self, n: int, s_max: float) -> float:
        rel = n * 1e-12 if self.relative_cutoff is None else self.relative_cutoff
        return max(rel * s_max, self.absolute_floor)


DEFAULT_TOL = RankTolerance()


class EigenDecomp(NamedTuple):
    values: np.ndarray  # descending
    vectors: np.ndarray  # columns are eigenvectors

    def top(self, r: int) -> "EigenDecomp":
        return EigenDecomp(self.values[:r], self.vectors[:, :r])


def as_symmetric(a, *, copy: bool = True) -> np.ndarray:
    """Return ``(a + a.T) / 2`` as a float64 array after shape/finiteness checks."""
    a = np.array(a, dtype=np.float64, copy=copy)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return (a + a.T) / 2


def _round_robin(n: int):
    """Yield ``n - 1`` rounds of disjoint index pairs covering every pair once.

    Odd ``n`` gets a phantom player ``n`` whose pairs are dropped.
    """
    m = n + (n % 2)
    players = list(range(m))
    for _ in range(m - 1):
        p = np.array(players[: m // 2])
        q = np.array(players[m // 2 :][::-1])
        keep = (p < n) & (q < n)
        p, q = p[keep], q[keep]
        yield np.minimum(p, q), np.maximum(p, q)
        players = [players[0]] + [players[-1]] + players[1:-1]


def jacobi_eigh(a: np.ndarray, max_sweeps: int = 30, rel_tol: float = 1e-12):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Each sweep visits all off-diagonal pairs in round-robin order; the pairs of
    one round are disjoint, so their rotations are applied together. Stops when
    the off-diagonal Frobenius norm is at most ``rel_tol * ||a||_F``.

    Returns unsorted ``(values, vectors)``.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    target = rel_tol * np.linalg.norm(a)
    rounds = list(_round_robin(n))

    def off_norm():
        off = a.copy()
        np.fill_diagonal(off, 0.0)
        return np.linalg.norm(off)

    off = off_norm()
    sweeps = 0
    while off > target:
        if sweeps == max_sweeps:
            raise ConvergenceError(off, sweeps)
        for p, q in rounds:
            apq = a[p, q]
            active = apq != 0.0
            if not active.any():
                continue
            p, q, apq = p[active], q[active], apq[active]
            tau = (a[q, q] - a[p, p]) / (2.0 * apq)
            with np.errstate(over="ignore"):
                # huge tau means a negligible rotation; t -> 0 is the right limit
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            ap, aq = a[:, p], a[:, q]
            a[:, p], a[:, q] = c * ap - s * aq, s * ap + c * aq
            ap, aq = a[p, :], a[q, :]
            a[p, :], a[q, :] = c[:, None] * ap - s[:, None] * aq, s[:, None] * ap + c[:, None] * aq
            a[p, q] = a[q, p] = 0.0
            vp, vq = v[:, p], v[:, q]
            v[:, p], v[:, q] = c * vp - s * vq, s * vp + c * vq
        sweeps += 1
        off = off_norm()
    return a.diagonal().copy(), v


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column positive (first one on ties)
    if vectors.size == 0:
        return vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eig_sym(a, tol: RankTolerance = DEFAULT_TOL, *, spsd: bool = False,
            method: str = "auto") -> EigenDecomp:
    """Full eigendecomposition of a symmetric matrix, eigenvalues descending.

    With ``spsd=True`` negative eigenvalues within ``SPSD_NEGATIVE_SLACK * sigma_1``
    are clamped to zero and anything more negative raises :class:`NotSPSDError`.
    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"``.
    """
    a = as_symmetric(a)
    n = a.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        values, vectors = jacobi_eigh(a)
    elif method == "lapack":
        values, vectors = np.linalg.eigh(a)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], _fix_signs(vectors[:, order])
    if spsd:
        values = _clamp_spsd(values)
    return EigenDecomp(values, vectors)


def _clamp_spsd(values: np.ndarray) -> np.ndarray:
    scale = max(values[0], 0.0)
    floor = -SPSD_NEGATIVE_SLACK * scale
    worst = values[-1]
    if worst < floor:
        raise NotSPSDError(
            f"eigenvalue {worst:.3e} is below the SPSD round-off floor {floor:.3e}"
        )
    return np.where(values < 0, 0.0, values)


def rank_numeric(a, tol: RankTolerance = DEFAULT_TOL) -> int:
    """Number of eigenvalues with magnitude above the tolerance threshold."""
    values = eig_sym(a).values
    return _count_above(values, tol)


def _count_above(values: np.ndarray, tol: RankTolerance) -> int:
    s_max = float(np.max(np.abs(values)))
    if s_max == 0.0:
        return 0
    return int(np.sum(np.abs(values) > tol.threshold(len(values), s_max)))


def pinv_trunc(a, k: int, tol: RankTolerance = DEFAULT_TOL, *,
               decomp: EigenDecomp | None = None) -> np.ndarray:
    """Pseudo-inverse of the best rank-``k`` part of a symmetric matrix.

    Inverts the ``min(k, numerical rank)`` leading eigenpairs; eigenvalues at
    or below the tolerance threshold are dropped, never inverted. A
    numerically zero matrix yields the zero matrix.
    """
    a = as_symmetric(a)
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    values, vectors = decomp if decomp is not None else eig_sym(a)
    s_max = float(np.max(np.abs(values)))
    if s_max == 0.0:
        return np.zeros_like(a)
    kept = np.flatnonzero(np.abs(values) > tol.threshold(n, s_max))[:k]
    vecs = vectors[:, kept]
    out = (vecs / values[kept]) @ vecs.T
    return (out + out.T) / 2


def truncate_rank(a, r: int) -> np.ndarray:
    """Best rank-``r`` approximation from the top ``r`` eigenpairs."""
    values, vectors = eig_sym(a, spsd=True).top(r)
    out = (vectors * values) @ vectors.T
    return (out + out.T) / 2


def qr_orthonormalize(m, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormalize the columns of ``m`` in order.

    Column ``j`` of the result spans the same space as the first ``j + 1``
    columns of ``m`` with a positive coefficient on column ``j``, so the first
    output column is ``m[:, 0]`` normalized.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[1] > m.shape[0]:
        raise ValueError(f"need an n x m matrix with m <= n, got shape {m.shape}")
    q, r = np.linalg.qr(m)
    diag = np.diagonal(r)
    scale = np.max(np.linalg.norm(m, axis=0)) if m.size else 0.0
    bad = np.flatnonzero(np.abs(diag) <= rtol * max(scale, np.finfo(float).tiny))
    if bad.size:
        raise RankDeficientError(int(bad[0]))
    return q * np.sign(diag)


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64)))


def frobenius_diff(a, b) -> float:
    """``||a - b||_F``; either operand may be a lazily stored Nystrom model."""
    if hasattr(b, "block_sq_diff"):
        return float(np.sqrt(b.block_sq_diff(a)))
    if hasattr(a, "block_sq_diff"):
        return float(np.sqrt(a.block_sq_diff(b)))
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
