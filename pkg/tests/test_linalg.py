import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rbffr.element import node_set
from rbffr.linalg import SingularMatrixError, condition_number_2, eig_complex, invert, solve_dense
from rbffr.rbf import Kernel, RbfConfig, alternant_matrix


def well_conditioned(n, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, n)) + n * np.eye(n)


def test_solve_identity():
    b = np.array([1.0, -2.0, 3.5])
    np.testing.assert_array_equal(solve_dense(np.eye(3), b), b)


def test_solve_diagonal():
    np.testing.assert_allclose(solve_dense([[2.0, 0.0], [0.0, 4.0]], [2.0, 8.0]), [1.0, 2.0], rtol=0, atol=1e-15)


def test_solve_random_6x6():
    A = well_conditioned(6, 1)
    x = np.arange(1.0, 7.0)
    np.testing.assert_allclose(solve_dense(A, A @ x), x, atol=1e-10)


def test_solve_matrix_rhs():
    A = well_conditioned(4, 2)
    X = np.random.default_rng(3).standard_normal((4, 3))
    np.testing.assert_allclose(solve_dense(A, A @ X), X, atol=1e-12)


def test_singular_is_reported():
    with pytest.raises(SingularMatrixError):
        solve_dense([[1.0, 2.0], [2.0, 4.0]], [1.0, 1.0])


def test_shape_checks():
    with pytest.raises(ValueError):
        solve_dense(np.ones((2, 3)), np.ones(2))
    with pytest.raises(ValueError):
        solve_dense(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        solve_dense([[np.nan, 0.0], [0.0, 1.0]], [1.0, 1.0])


def test_condition_examples():
    assert condition_number_2(np.eye(4)) == pytest.approx(1.0)
    assert condition_number_2(np.diag([10.0, 0.1])) == pytest.approx(100.0)


def test_condition_of_flat_gaussian_alternant():
    x = node_set("legendre", 5).coords
    A = alternant_matrix(x, RbfConfig(Kernel.GA, 0.01, x))
    assert condition_number_2(A) >= 1e15


def test_condition_of_singular_is_inf():
    assert condition_number_2(np.zeros((2, 2))) == np.inf


def test_invert_examples():
    np.testing.assert_array_equal(invert(np.eye(3)), np.eye(3))
    np.testing.assert_allclose(invert([[2.0, 0.0], [0.0, 0.5]]), [[0.5, 0.0], [0.0, 2.0]])
    A = well_conditioned(4, 5)
    np.testing.assert_allclose(A @ invert(A), np.eye(4), atol=1e-12)


def test_eig_diagonal():
    ed = eig_complex(np.diag([1 + 2j, 3.0]))
    np.testing.assert_allclose(ed.values, [1 + 2j, 3.0])
    np.testing.assert_allclose(np.abs(ed.vectors), np.eye(2), atol=1e-15)


def test_eig_rotation_generator():
    ed = eig_complex([[0.0, 1.0], [-1.0, 0.0]])
    np.testing.assert_allclose(ed.values, [-1j, 1j], atol=1e-14)


def test_eig_residual_random():
    A = np.random.default_rng(7).standard_normal((5, 5))
    ed = eig_complex(A)
    assert np.abs(A @ ed.vectors - ed.vectors * ed.values).max() <= 1e-9
    np.testing.assert_allclose(ed.reconstruct(), A, atol=1e-10)


def test_eig_deterministic():
    A = np.random.default_rng(8).standard_normal((6, 6))
    a, b = eig_complex(A), eig_complex(A.copy())
    np.testing.assert_array_equal(a.values, b.values)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_eig_size_limit():
    with pytest.raises(ValueError):
        eig_complex(np.eye(40))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 8), seed=st.integers(0, 10_000), logc=st.floats(0, 8))
def test_solve_residual_up_to_cond_1e8(n, seed, logc):
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    A = U @ np.diag(np.logspace(0, -logc, n)) @ V.T
    b = rng.standard_normal(n)
    x = solve_dense(A, b)
    # normwise backward stability of partial-pivoting LU
    assert np.linalg.norm(A @ x - b) <= 1e-13 * np.linalg.norm(A, 2) * np.linalg.norm(x)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 6), seed=st.integers(0, 10_000), c=st.floats(1e-6, 1e6) | st.floats(-1e6, -1e-6))
def test_condition_scale_invariant(n, seed, c):
    A = well_conditioned(n, seed)
    assert condition_number_2(c * A) == pytest.approx(condition_number_2(A), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 10_000))
def test_eigenvalues_similarity_invariant(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    S = well_conditioned(n, seed + 1)
    B = S @ A @ np.linalg.inv(S)
    la, lb = eig_complex(A).values, eig_complex(B).values
    # match as multisets
    for lam in la:
        assert np.min(np.abs(lb - lam)) <= 1e-9 * max(1.0, np.abs(la).max())
