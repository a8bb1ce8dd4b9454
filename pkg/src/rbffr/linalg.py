"""Small dense linear algebra used by the operator builders.

Thin contracts over LAPACK (via scipy): every routine checks its
preconditions and fails loudly instead of returning garbage.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when LU factorisation meets a pivot that is zero to working precision."""

    def __init__(self, pivot: float, n: int):
        self.pivot = pivot
        super().__init__(f"singular system: smallest pivot {pivot:.3e} in {n}x{n} matrix")


class EigenConvergenceError(np.linalg.LinAlgError):
    pass


def _square(A, name="A") -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def _lu(A: np.ndarray):
    with warnings.catch_warnings():
        # exact singularity is reported below with our own error
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=False)
    pivots = np.abs(np.diag(lu))
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    pmin = pivots.min() if pivots.size else 0.0
    if pmin <= A.shape[0] * np.finfo(float).eps * scale:
        raise SingularMatrixError(float(pmin), A.shape[0])
    return lu, piv


def solve_dense(A, b) -> np.ndarray:
    """Solve ``A x = b`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    A = _square(A)
    b = np.asarray(b)
    if b.shape[0] != A.shape[0]:
        raise ValueError(f"rhs has {b.shape[0]} rows, matrix has {A.shape[0]}")
    return sla.lu_solve(_lu(A), b, check_finite=False)


def invert(A) -> np.ndarray:
    A = _square(A)
    return solve_dense(A, np.eye(A.shape[0], dtype=A.dtype))


def condition_number_2(A) -> float:
    """2-norm condition number sigma_max / sigma_min (``inf`` if sigma_min underflows)."""
    A = _square(A)
    s = sla.svd(A, compute_uv=False, check_finite=False)
    if s[-1] <= np.finfo(float).tiny:
        return float("inf")
    return float(s[0] / s[-1])


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    vector_condition: float

    def reconstruct(self) -> np.ndarray:
        return self.vectors @ np.diag(self.values) @ invert(self.vectors)


def eig_complex(A, *, max_size: int = 32, rtol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition with deterministic ordering.

    Eigenvalues are sorted by real part, ties broken by imaginary part.
    Eigenvectors are unit 2-norm with their largest component made real
    positive, so repeated calls give identical output.
    """
    A = _square(A).astype(complex)
    n = A.shape[0]
    if n > max_size:
        raise ValueError(f"matrix too large for eig_complex ({n} > {max_size})")
    try:
        lam, W = sla.eig(A, check_finite=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise EigenConvergenceError(str(exc)) from exc

    order = np.lexsort((np.round(lam.imag, 12), np.round(lam.real, 12)))
    lam, W = lam[order], W[:, order]
    W = W / np.linalg.norm(W, axis=0)
    big = W[np.argmax(np.abs(W), axis=0), np.arange(n)]
    W = W * (np.abs(big) / big)

    anorm = max(np.linalg.norm(A, 2), np.finfo(float).tiny)
    resid = np.linalg.norm(A @ W - W * lam, axis=0)
    if np.any(resid > rtol * anorm):
        raise EigenConvergenceError(f"eigenpair residual {resid.max():.3e} exceeds {rtol:g}*||A||")
    return EigenDecomposition(lam, W, condition_number_2(W))
