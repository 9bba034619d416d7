import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nystrom_coherence.coherence import (
    NotOrthonormalError,
    SamplingBoundParams,
    bound_is_vacuous,
    check_isometry,
    coherence_growth,
    coherence_of,
    coherence_of_matrix,
    min_samples,
    sample_rows,
)
from nystrom_coherence.linalg import rank_numeric
from nystrom_coherence.synth import haar_orthogonal, pathological


@pytest.mark.parametrize("n,r", [(4, 1), (10, 3), (50, 50)])
def test_canonical_basis_is_maximally_coherent(n, r):
    report = coherence_of(np.eye(n)[:, :r])
    assert report.mu == math.sqrt(n)
    assert report.argmax == (0, 0)


@pytest.mark.parametrize("n", [1, 4, 7, 100])
def test_constant_vector_is_minimally_coherent(n):
    assert coherence_of(np.full(n, 1 / math.sqrt(n))).mu == pytest.approx(1.0, abs=1e-12)


def test_hand_example():
    v = np.array([[0.5, 0.5], [0.5, 0.5], [0.5, -0.5], [0.5, -0.5]])
    report = coherence_of(v)
    assert report.mu == 1.0 and report.argmax == (0, 0)


def test_argmax_tie_break():
    v = np.array([[0.0, 0.8], [0.8, 0.0], [0.6, 0.0], [0.0, 0.6]])
    assert coherence_of(v).argmax == (0, 1)


def test_rejects_non_orthonormal():
    with pytest.raises(NotOrthonormalError) as info:
        coherence_of(np.ones((3, 1)))
    assert info.value.deviation == pytest.approx(2.0)


def test_pathological_matrix_coherence():
    assert coherence_of_matrix(pathological(30, 5), 5).mu == math.sqrt(30)


def test_scaled_identity():
    assert coherence_of_matrix(2.5 * np.eye(3), 3).mu == pytest.approx(math.sqrt(3), abs=1e-12)


def test_rank_precondition():
    with pytest.raises(ValueError):
        coherence_of_matrix(pathological(10, 2), 3)


@pytest.mark.parametrize("seed", range(10))
def test_haar_coherence_within_log_growth_bound(seed):
    v = haar_orthogonal(1000, 100, seed)
    mu = coherence_of_matrix(v @ v.T, 100).mu
    assert mu <= 4 * math.sqrt(math.log(1000))


@given(st.integers(1, 40), st.integers(1, 8), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_coherence_bounds(n, r, seed):
    r = min(r, n)
    mu = coherence_of(haar_orthogonal(n, r, seed)).mu
    assert 1 - 1e-9 <= mu <= math.sqrt(n) + 1e-9


@given(st.integers(2, 30), st.integers(1, 5), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_coherence_invariances(n, r, seed):
    r = min(r, n)
    v = haar_orthogonal(n, r, seed)
    rng = np.random.default_rng(seed)
    flipped = v[rng.permutation(n)] * rng.choice([-1.0, 1.0], size=r)
    assert coherence_of(flipped).mu == coherence_of(v).mu


def test_growth_single_size_equals_direct():
    v = haar_orthogonal(60, 5, 0)
    g = v @ v.T
    [point] = coherence_growth(g, [60], trials=1, r=5)
    assert point.mean_mu == pytest.approx(coherence_of_matrix(g, 5).mu, abs=1e-12)
    assert (point.n, point.r, point.trials) == (60, 5, 1)


def test_growth_pathological_stays_maximal():
    g = pathological(200, 10)
    for point in coherence_growth(g, [20, 50, 100, 200], trials=3, r=10):
        assert point.mean_mu == math.sqrt(point.n)


def test_growth_skips_small_sizes():
    g = pathological(50, 5)
    with pytest.warns(UserWarning):
        points = coherence_growth(g, [4, 20], trials=1, r=5)
    assert [p.n for p in points] == [20]


def test_growth_default_rank():
    v = haar_orthogonal(120, 10, 0)
    [point] = coherence_growth(v @ v.T, [40], trials=1)
    assert point.r == 20


def test_growth_is_seeded():
    v = haar_orthogonal(100, 4, 1)
    g = v @ v.T
    a = coherence_growth(g, [30, 60], trials=3, seed=7, r=4)
    b = coherence_growth(g, [30, 60], trials=3, seed=7, r=4)
    assert a == b


def test_min_samples_reference_value():
    # direct evaluation: 100 * max(ln 100, ln 60) = 460.517...
    expected = math.ceil(100 * max(math.log(100), math.log(3 / 0.05)))
    assert expected == 461
    assert min_samples(SamplingBoundParams(100, 1.0, 0.05, 1.0, 1.0)) == 461


def test_min_samples_rank_one():
    # ln(1) = 0, so only the failure-probability branch counts: ceil(ln 6) = 2
    assert min_samples(SamplingBoundParams(1, 1.0, 0.5)) == 2
    with pytest.raises(ValueError):
        SamplingBoundParams(1, 1.0, 3 / math.e)


def test_min_samples_maximal_coherence_is_vacuous():
    n = 400
    l = min_samples(SamplingBoundParams(5, math.sqrt(n), 0.05))
    assert l > n and bound_is_vacuous(l, n)
    assert not bound_is_vacuous(461, 1000)


@pytest.mark.parametrize("kwargs", [dict(delta=0.0), dict(delta=1.0), dict(c1=0.0),
                                    dict(c2=-1.0), dict(r=0)])
def test_bound_params_validation(kwargs):
    base = dict(r=10, mu=1.0, delta=0.1, c1=1.0, c2=1.0)
    with pytest.raises(ValueError):
        SamplingBoundParams(**{**base, **kwargs})


@given(st.integers(1, 200), st.floats(1.0, 30.0), st.floats(0.001, 0.99),
       st.integers(1, 50), st.floats(0.0, 5.0), st.floats(0.001, 0.5))
def test_min_samples_monotone(r, mu, delta, dr, dmu, shrink):
    base = min_samples(SamplingBoundParams(r, mu, delta))
    assert min_samples(SamplingBoundParams(r + dr, mu, delta)) >= base
    assert min_samples(SamplingBoundParams(r, mu + dmu, delta)) >= base
    assert min_samples(SamplingBoundParams(r, mu, delta * (1 - shrink))) >= base


def test_isometry_full_sample():
    v = haar_orthogonal(50, 4, 2)
    assert check_isometry(sample_rows(v, 50, seed=1), 50, 50) < 1e-12


def test_isometry_coherent_failure():
    v = np.eye(8)[:, :1]
    rows = v[[0]]
    assert check_isometry(rows, 8, 1) == 7.0


def test_sample_rows_are_verbatim():
    v = haar_orthogonal(20, 3, 0)
    s = sample_rows(v, 6, seed=4)
    assert s.shape == (6, 3)
    assert all(any(np.array_equal(row, vr) for vr in v) for row in s)
    with pytest.raises(ValueError):
        sample_rows(v, 21)


def _structured_basis(n, r, seed):
    rng = np.random.default_rng(seed)
    m = np.zeros((n, r))
    for i in range(n):
        m[i, i % r] = rng.standard_normal()
    m[0] += rng.standard_normal(r)
    return np.linalg.qr(m)[0]


@pytest.mark.parametrize("n,r,l", [(9, 3, 3), (9, 3, 4), (10, 2, 3), (8, 4, 4)])
def test_subset_rank_equivalence_by_enumeration(n, r, l):
    v = _structured_basis(n, r, n + r + l)
    g = v @ v.T
    outcomes = set()
    for subset in itertools.combinations(range(n), l):
        rows = v[list(subset)]
        full_rank = np.linalg.matrix_rank(rows) == r
        gram_nonsingular = np.linalg.eigvalsh(rows.T @ rows).min() > 1e-10
        w_full = rank_numeric(g[np.ix_(subset, subset)]) == r
        assert full_rank == gram_nonsingular == w_full
        outcomes.add(full_rank)
    assert outcomes == {True, False}
