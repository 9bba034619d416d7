import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nystrom_coherence.linalg import (
    ConvergenceError,
    NotSPSDError,
    RankDeficientError,
    RankTolerance,
    as_symmetric,
    eig_sym,
    frobenius,
    frobenius_diff,
    jacobi_eigh,
    pinv_trunc,
    qr_orthonormalize,
    rank_numeric,
    truncate_rank,
)
from nystrom_coherence.synth import pathological


def random_spsd(n, seed, rank=None):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal((rank or n, n))
    return b.T @ b


def test_as_symmetric_symmetrizes_exactly():
    a = as_symmetric([[1.0, 2.0], [4.0, 3.0]])
    assert a[0, 1] == a[1, 0] == 3.0


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros((0, 0)), [[np.nan]]])
def test_as_symmetric_rejects(bad):
    with pytest.raises(ValueError):
        as_symmetric(bad)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_eig_identity(method):
    d = eig_sym(np.eye(3), method=method)
    np.testing.assert_array_equal(d.values, [1, 1, 1])
    assert sorted(np.abs(d.vectors).argmax(axis=0)) == [0, 1, 2]
    np.testing.assert_allclose(np.abs(d.vectors), np.eye(3)[:, np.abs(d.vectors).argmax(axis=0)])


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_eig_diagonal_order(method):
    d = eig_sym(np.diag([3.0, 1.0, 2.0]), method=method)
    np.testing.assert_allclose(d.values, [3, 2, 1])
    np.testing.assert_allclose(d.vectors, np.eye(3)[:, [0, 2, 1]], atol=1e-15)


@pytest.mark.parametrize("method", ["jacobi", "lapack"])
def test_eig_residual_random_50(method):
    rng = np.random.default_rng(0)
    b = rng.standard_normal((50, 50))
    a = b.T @ b
    values, vectors = eig_sym(a, method=method)
    assert np.linalg.norm(a - (vectors * values) @ vectors.T) / np.linalg.norm(a) < 1e-10
    assert np.max(np.abs(vectors.T @ vectors - np.eye(50))) <= 1e-10
    assert np.all(np.diff(values) <= 0)


def test_jacobi_matches_lapack_on_indefinite():
    rng = np.random.default_rng(3)
    a = as_symmetric(rng.standard_normal((31, 31)))
    vj = eig_sym(a, method="jacobi")
    vl = eig_sym(a, method="lapack")
    np.testing.assert_allclose(vj.values, vl.values, atol=1e-11)
    # same sign convention, distinct eigenvalues -> same vectors
    np.testing.assert_allclose(vj.vectors, vl.vectors, atol=1e-8)


def test_sign_convention_largest_entry_positive():
    vectors = eig_sym(random_spsd(20, 4)).vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    assert np.all(vectors[idx, np.arange(20)] > 0)


def test_jacobi_non_convergence_reports_off_norm():
    a = random_spsd(12, 1)
    with pytest.raises(ConvergenceError) as info:
        jacobi_eigh(a, max_sweeps=1)
    assert info.value.off_norm > 0


def test_spsd_clamp_and_reject():
    a = np.diag([1.0, -1e-12])
    assert eig_sym(a, spsd=True).values[-1] == 0.0
    with pytest.raises(NotSPSDError):
        eig_sym(np.diag([1.0, -1e-6]), spsd=True)


@given(st.integers(1, 25), st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_eigenvalue_sum_is_trace(n, seed):
    a = as_symmetric(np.random.default_rng(seed).standard_normal((n, n)))
    values = eig_sym(a).values
    assert abs(values.sum() - np.trace(a)) <= 1e-9 * max(np.linalg.norm(a), 1.0)


def test_pinv_diagonal():
    np.testing.assert_array_equal(pinv_trunc(np.diag([2.0, 0.0]), 2), np.diag([0.5, 0.0]))


def test_pinv_invertible_multiply_back():
    a = random_spsd(8, 5) + np.eye(8)
    p = pinv_trunc(a, 8)
    assert np.linalg.norm(a @ p - np.eye(8)) < 1e-8


def test_pinv_rank_one():
    v = np.array([1.0, 2.0, -2.0])
    a = np.outer(v, v)
    p = pinv_trunc(a, 3)
    np.testing.assert_allclose(p, a / np.dot(v, v) ** 2, atol=1e-15)
    assert np.linalg.norm(a @ p @ a - a) <= 1e-10


def test_pinv_zero_matrix_is_zero():
    np.testing.assert_array_equal(pinv_trunc(np.zeros((3, 3)), 2), np.zeros((3, 3)))


def test_pinv_truncates_to_k():
    p = pinv_trunc(np.diag([4.0, 2.0, 1.0]), 2)
    np.testing.assert_allclose(p, np.diag([0.25, 0.5, 0.0]))


def test_pinv_rejects_bad_k():
    with pytest.raises(ValueError):
        pinv_trunc(np.eye(2), 3)


def test_pinv_never_inverts_below_cutoff():
    p = pinv_trunc(np.diag([1.0, 1e-20]), 2)
    assert p[1, 1] == 0.0


@pytest.mark.parametrize("seed", range(100))
def test_moore_penrose_identities(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 61))
    rank = int(rng.integers(1, n + 1))
    a = random_spsd(n, seed, rank)
    p = pinv_trunc(a, n)
    rel = lambda x, y: np.linalg.norm(x - y) / max(np.linalg.norm(y), 1e-300)
    assert rel(a @ p @ a, a) <= 1e-8
    assert rel(p @ a @ p, p) <= 1e-8
    assert rel((a @ p).T, a @ p) <= 1e-8
    assert rel((p @ a).T, p @ a) <= 1e-8


def test_rank_examples():
    assert rank_numeric(np.zeros((4, 4))) == 0
    assert rank_numeric(np.diag([1.0, 1.0, 1e-20])) == 2
    assert rank_numeric(pathological(20, 5)) == 5


def test_rank_tolerance_is_configurable():
    a = np.diag([1.0, 1e-6])
    assert rank_numeric(a) == 2
    assert rank_numeric(a, RankTolerance(1e-3)) == 1
    assert rank_numeric(a, RankTolerance(1e-12, absolute_floor=1e-3)) == 1
    with pytest.raises(ValueError):
        RankTolerance(0.0)


@pytest.mark.parametrize("seed", range(10))
def test_rank_of_constructed_low_rank(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(20, 201))
    r = int(rng.integers(1, 21))
    assert rank_numeric(random_spsd(n, seed, r)) == r


def test_truncate_rank_keeps_top_eigenpairs():
    a = np.diag([3.0, 2.0, 1.0])
    np.testing.assert_allclose(truncate_rank(a, 2), np.diag([3.0, 2.0, 0.0]), atol=1e-15)


def test_qr_already_orthonormal():
    q = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 3)))[0]
    q = q * np.sign(q[0])
    np.testing.assert_allclose(qr_orthonormalize(q), q, atol=1e-12)


def test_qr_hand_gram_schmidt():
    m = np.array([[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_allclose(qr_orthonormalize(m), [[1, 0], [0, 1], [0, 0]], atol=1e-15)


def test_qr_random_square_and_first_column():
    m = np.random.default_rng(1).standard_normal((100, 100))
    q = qr_orthonormalize(m)
    assert np.max(np.abs(q.T @ q - np.eye(100))) < 1e-10
    np.testing.assert_allclose(q[:, 0], m[:, 0] / np.linalg.norm(m[:, 0]), atol=1e-12)


def test_qr_rank_deficient_names_column():
    m = np.array([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    with pytest.raises(RankDeficientError) as info:
        qr_orthonormalize(m)
    assert info.value.column == 2


def test_frobenius_examples():
    assert frobenius(np.eye(4)) == 2.0
    assert frobenius_diff(np.eye(3), np.eye(3)) == 0.0
    assert frobenius(np.array([[1.0, 2.0], [2.0, 3.0]])) == pytest.approx(np.sqrt(18), abs=1e-15)
