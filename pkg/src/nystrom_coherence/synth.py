"""Synthetic SPSD matrices with prescribed rank, spectral decay and coherence."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coherence import coherence_of
from .linalg import qr_orthonormalize

__all__ = [
    "SyntheticSpec",
    "SpectrumReport",
    "pathological",
    "pathological_recovery_prob",
    "haar_orthogonal",
    "first_vector",
    "targeted_basis",
    "spectrum",
    "synth_spsd",
    "spectrum_fraction",
    "decay_fraction",
    "solve_eta_for_fraction",
]


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for ``V diag(sigma) V^T``.

    ``rank=None`` means full rank with ``sigma_i = exp(-i * eta)``. With an
    integer rank the top ``rank`` values are 1 (``eta=0``) or ``exp(-i * eta)``
    and the rest are exactly zero.
    """

    n: int
    rank: int | None = None
    eta: float = 0.0
    mu_target: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.rank is not None and not 1 <= self.rank <= self.n:
            raise ValueError(f"rank must lie in [1, {self.n}]")
        if self.eta < 0:
            raise ValueError("decay rate eta must be non-negative")
        _check_mu(self.n, self.mu_target)


@dataclass(frozen=True)
class SpectrumReport:
    k: int
    fraction: float


def _check_mu(n: int, mu: float) -> None:
    if not 1.0 - 1e-12 <= mu <= math.sqrt(n) + 1e-12:
        raise ValueError(f"target coherence {mu} outside [1, sqrt({n})]")


def pathological(n: int, r: int) -> np.ndarray:
    """Gram matrix of ``[e_1 ... e_r 0 ... 0]``: ones on the first ``r`` diagonal slots."""
    if not 0 <= r <= n:
        raise ValueError(f"need 0 <= r <= n, got r={r}, n={n}")
    d = np.zeros(n)
    d[:r] = 1.0
    return np.diag(d)


def pathological_recovery_prob(n: int, r: int, l: int, replacement: bool = False) -> float:
    """Exact probability that ``l`` uniform column draws hit all ``r`` unit columns.

    Without replacement this is hypergeometric, ``C(n-r, l-r) / C(n, l)``;
    with replacement it follows from inclusion-exclusion over missed columns.
    """
    if replacement:
        return float(sum((-1) ** j * math.comb(r, j) * (1 - j / n) ** l for j in range(r + 1)))
    if l < r:
        return 0.0
    return math.comb(n - r, l - r) / math.comb(n, l)


def haar_orthogonal(n: int, r: int | None = None, seed: int = 0) -> np.ndarray:
    """First ``r`` columns of a Haar-distributed orthogonal matrix."""
    r = n if r is None else r
    z = np.random.default_rng(seed).standard_normal((n, r))
    return qr_orthonormalize(z)


def first_vector(n: int, mu_target: float) -> np.ndarray:
    """Unit vector with first entry ``mu / sqrt(n)`` and all others equal and positive."""
    _check_mu(n, mu_target)
    head = min(mu_target / math.sqrt(n), 1.0)
    v = np.empty(n)
    v[0] = head
    if n > 1:
        v[1:] = math.sqrt(max(1.0 - head * head, 0.0) / (n - 1))
    return v


def targeted_basis(n: int, mu_target: float, seed: int = 0) -> tuple[np.ndarray, float]:
    """Orthonormal ``n x n`` basis whose first column has the target coherence.

    The remaining columns complete ``first_vector`` by QR against a seeded
    Gaussian block. Returns the basis and its realized coherence, which can
    exceed the target because the completion columns have their own peaks.
    """
    v1 = first_vector(n, mu_target)
    if n == 1:
        q = v1[:, None]
    else:
        z = np.random.default_rng(seed).standard_normal((n, n - 1))
        q = qr_orthonormalize(np.column_stack([v1, z]))
        q[:, 0] = v1
    return q, coherence_of(q).mu


def spectrum(spec: SyntheticSpec) -> np.ndarray:
    i = np.arange(1, spec.n + 1, dtype=np.float64)
    sigma = np.exp(-i * spec.eta) if spec.eta > 0 else np.ones(spec.n)
    if spec.rank is not None:
        sigma[spec.rank:] = 0.0
    return sigma


def synth_spsd(spec: SyntheticSpec, *, return_basis: bool = False):
    """``V diag(sigma) V^T`` with ``V = targeted_basis(n, mu_target, seed)``.

    With ``return_basis=True`` returns ``(G, V, sigma, realized_mu)``.
    """
    v, mu = targeted_basis(spec.n, spec.mu_target, spec.seed)
    sigma = spectrum(spec)
    keep = sigma > 0
    vk = v[:, keep]
    g = (vk * sigma[keep]) @ vk.T
    g = (g + g.T) / 2
    if return_basis:
        return g, v, sigma, mu
    return g


def spectrum_fraction(values, k: int) -> SpectrumReport:
    """Share of the total spectrum held by the top ``k`` values."""
    values = np.asarray(values, dtype=np.float64)
    if not 1 <= k <= len(values):
        raise ValueError(f"k must lie in [1, {len(values)}]")
    if np.any(values < 0):
        raise ValueError("spectrum must be non-negative")
    # fsum is correctly rounded, which keeps the fraction monotone in k
    total = math.fsum(values)
    if total == 0.0:
        raise ValueError("spectrum is identically zero")
    return SpectrumReport(k, math.fsum(values[:k]) / total)


def decay_fraction(n: int, k: int, eta: float) -> float:
    """Closed form of the top-``k`` share for ``sigma_i = exp(-i * eta)``."""
    if eta == 0.0:
        return k / n
    return math.expm1(-k * eta) / math.expm1(-n * eta)


def solve_eta_for_fraction(n: int, k: int, target: float, xtol: float = 1e-10) -> float:
    """Decay rate at which the top ``k`` of ``n`` exponentially decaying values hold ``target``.

    Bisection on the closed form, which increases monotonically in ``eta``.
    """
    if not k / n < target < 1.0:
        raise ValueError(f"target fraction must lie in ({k}/{n}, 1), got {target}")
    lo, hi = 0.0, 1.0
    while decay_fraction(n, k, hi) < target:
        hi *= 2.0
        if hi > 1e6:
            raise ValueError(f"target fraction {target} is numerically unreachable")
    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if decay_fraction(n, k, mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
