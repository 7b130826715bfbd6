import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dwadmm.errors import NumericsError
from dwadmm.graph import build_laplacians
from dwadmm.numerics import (
    frobenius_inner,
    pinv_symmetric,
    principal_sqrt,
    solve_spd,
    symmetric_eigen,
    weighted_norm_sq,
)

from .conftest import triangle

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def random_symmetric(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


def random_psd(rng, n, rank=None):
    b = rng.normal(size=(n, rank or n))
    return b @ b.T


# -- frobenius_inner ----------------------------------------------------------

def test_frobenius_identity():
    assert frobenius_inner(np.eye(2), np.eye(2)) == 2.0


def test_frobenius_zero():
    a = np.array([[1.5, -2.0], [0.3, 4.0]])
    assert frobenius_inner(a, np.zeros((2, 2))) == 0.0


def test_frobenius_sum_of_squares():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert frobenius_inner(a, a) == 30.0


def test_frobenius_dimension_mismatch():
    with pytest.raises(NumericsError):
        frobenius_inner(np.eye(2), np.eye(3))


@given(arrays(float, (4, 3), elements=finite), arrays(float, (4, 3), elements=finite))
def test_frobenius_symmetric(a, b):
    assert frobenius_inner(a, b) == frobenius_inner(b, a)


@given(arrays(float, (5, 2), elements=finite))
def test_frobenius_self_is_squared_norm(a):
    assert frobenius_inner(a, a) == float(np.sum(a * a))


# -- weighted_norm_sq ---------------------------------------------------------

def test_weighted_norm_identity_weight():
    assert weighted_norm_sq(np.array([[1.0], [2.0]]), np.eye(2)) == 5.0


def test_weighted_norm_laplacian_nullspace():
    lap = build_laplacians(triangle(0.7)).signed
    assert weighted_norm_sq(np.ones((3, 1)), lap) == 0.0


def test_weighted_norm_two_node_laplacian():
    m = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert weighted_norm_sq(np.array([[1.0], [-1.0]]), m) == pytest.approx(4.0)


def test_weighted_norm_rejects_asymmetric():
    with pytest.raises(NumericsError, match="symmetric"):
        weighted_norm_sq(np.ones(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


def test_weighted_norm_dimension_mismatch():
    with pytest.raises(NumericsError):
        weighted_norm_sq(np.ones((3, 1)), np.eye(2))


def test_weighted_norm_rejects_indefinite():
    with pytest.raises(NumericsError, match="PSD"):
        weighted_norm_sq(np.array([1.0, 0.0]), np.diag([-1.0, 1.0]))


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 3))
def test_weighted_norm_nonnegative_for_psd(seed, n, cols):
    rng = np.random.default_rng(seed)
    m = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
    a = rng.normal(size=(n, cols)) * 10.0 ** rng.uniform(-3, 3)
    assert weighted_norm_sq(a, m) >= 0.0


# -- eigendecomposition -------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 64))
def test_eigen_round_trip(seed, n):
    m = random_symmetric(np.random.default_rng(seed), n)
    eig = symmetric_eigen(m)
    scale = max(1.0, np.linalg.norm(m))
    assert np.linalg.norm(eig.reconstruct() - m) <= 1e-10 * scale
    v = eig.eigenvectors
    assert np.abs(v.T @ v - np.eye(n)).max() <= 1e-10
    assert np.all(np.diff(eig.eigenvalues) >= 0)


def test_eigen_rejects_nan():
    with pytest.raises(NumericsError):
        symmetric_eigen(np.array([[1.0, np.nan], [np.nan, 1.0]]))


# -- principal_sqrt -----------------------------------------------------------

def test_sqrt_identity():
    assert np.allclose(principal_sqrt(np.eye(3)), np.eye(3), atol=1e-15)


def test_sqrt_diagonal():
    assert np.allclose(principal_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)


def test_sqrt_triangle_laplacian():
    lap = build_laplacians(triangle()).signed
    assert np.allclose(np.linalg.eigvalsh(lap), [0.0, 3.0, 3.0], atol=1e-12)
    s = principal_sqrt(lap)
    assert np.linalg.norm(s @ s - lap) <= 1e-10 * max(1.0, np.linalg.norm(lap))
    # the all-ones direction must stay exactly in the null space
    assert np.linalg.norm(s @ np.ones(3)) <= 1e-14


def test_sqrt_rejects_clearly_negative():
    with pytest.raises(NumericsError, match="PSD"):
        principal_sqrt(np.diag([1.0, -1e-3]))


def test_sqrt_clamps_round_off_negatives():
    s = principal_sqrt(np.diag([1.0, -1e-14]))
    assert np.allclose(s, np.diag([1.0, 0.0]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 30))
def test_sqrt_symmetric_and_squares_back(seed, n):
    rng = np.random.default_rng(seed)
    m = random_psd(rng, n, rank=int(rng.integers(1, n + 1)))
    s = principal_sqrt(m)
    assert np.linalg.norm(s - s.T) <= 1e-12
    assert np.linalg.norm(s @ s - m) <= 1e-10 * max(1.0, np.linalg.norm(m))
    assert np.linalg.eigvalsh(s)[0] >= -1e-10


def test_pinv_inverts_on_range():
    rng = np.random.default_rng(4)
    m = random_psd(rng, 6, rank=4)
    p = pinv_symmetric(m)
    assert np.allclose(m @ p @ m, m, atol=1e-9)
    assert np.allclose(p @ m @ p, p, atol=1e-9)


# -- solve_spd ----------------------------------------------------------------

def test_solve_identity():
    b = np.array([1.0, -2.0, 3.5])
    assert np.array_equal(solve_spd(np.eye(3), b), b)


def test_solve_diagonal():
    assert np.allclose(solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1.0, 1.0])


def test_solve_random_2x2_residual():
    rng = np.random.default_rng(11)
    m = random_psd(rng, 2) + 0.1 * np.eye(2)
    rhs = rng.normal(size=2)
    x = solve_spd(m, rhs)
    assert np.linalg.norm(m @ x - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs))


def test_solve_matrix_rhs():
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    rhs = np.array([[3.0, 1.0], [3.0, -1.0]])
    assert np.allclose(m @ solve_spd(m, rhs), rhs)


@pytest.mark.parametrize(
    "m",
    [np.zeros((2, 2)), np.diag([1.0, -1.0]), np.array([[1.0, 1.0], [1.0, 1.0]])],
    ids=["zero", "indefinite", "singular"],
)
def test_solve_rejects_non_spd(m):
    with pytest.raises(NumericsError):
        solve_spd(m, np.ones(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 20))
def test_solve_residual_contract(seed, n):
    rng = np.random.default_rng(seed)
    m = random_psd(rng, n) + 1e-3 * np.eye(n)
    rhs = rng.normal(size=(n, 2))
    x = solve_spd(m, rhs)
    assert np.linalg.norm(m @ x - rhs) <= 1e-9 * max(1.0, np.linalg.norm(rhs))
