"""Dense linear-algebra primitives shared by the correlation and scatter objectives.

All routines follow the package-wide layout convention: matrices of data hold
one sample per column, so a batch of N samples in d dimensions is d x N and
its covariance reads Z @ Z.T / (N - 1) after centering.

Every function here is a pure function of its inputs and deterministic: the
eigen/singular vector sign ambiguity is resolved by making the
largest-magnitude entry of each column positive.
"""

from typing import NamedTuple

import numpy as np

from .errors import DegenerateBatchError, NotSpdError
from .validation import check_matrix, check_square

# Eigenvalues of a nominally-SPD matrix below this (after regularization) are
# clamped before inversion; distinct from any statistical regularizer.
DEFAULT_EIG_FLOOR = 1e-12


class SymEig(NamedTuple):
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    values: np.ndarray
    vectors: np.ndarray


def fix_column_signs(Q):
    """Flip column signs so the largest-magnitude entry of each column is positive."""
    idx = np.argmax(np.abs(Q), axis=0)
    signs = np.sign(Q[idx, np.arange(Q.shape[1])])
    signs[signs == 0] = 1.0
    return Q * signs, signs


def center(Z):
    """Subtract each feature row's mean (samples are columns).

    Raises DegenerateBatchError for batches of fewer than 2 samples, where a
    centered covariance is undefined.
    """
    Z = check_matrix(Z, "Z")
    if Z.shape[1] < 2:
        raise DegenerateBatchError(
            f"need at least 2 samples (columns) to center a batch, got {Z.shape[1]}"
        )
    return Z - Z.mean(axis=1, keepdims=True)


def sym_eig(A):
    """Eigendecomposition of a symmetric matrix.

    The input is symmetrized as (A + A.T) / 2 before factorization, eigenvalues
    are returned in descending order, and eigenvector signs are fixed for
    determinism.
    """
    A = check_square(A)
    A = 0.5 * (A + A.T)
    values, vectors = np.linalg.eigh(A)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1]
    vectors, _ = fix_column_signs(vectors)
    return SymEig(values, np.ascontiguousarray(vectors))


def inv_sqrt_spd(A, floor=DEFAULT_EIG_FLOOR):
    """Inverse matrix square root of a symmetric positive definite matrix.

    Eigenvalues smaller than ``floor`` are clamped to ``floor`` before the
    inverse square root, which keeps near-singular inputs finite. A clearly
    negative spectrum (below -1e-8 times the spectral norm) raises NotSpdError.
    """
    eig = sym_eig(A)
    scale = float(np.max(np.abs(eig.values))) if eig.values.size else 0.0
    tol = 1e-8 * max(scale, 1.0)
    if eig.values.min() < -tol:
        raise NotSpdError(
            f"matrix is not positive semi-definite: min eigenvalue "
            f"{eig.values.min():.3e} < {-tol:.3e}"
        )
    clamped = np.maximum(eig.values, floor)
    return (eig.vectors * clamped**-0.5) @ eig.vectors.T


def svd_thin(M):
    """Thin singular value decomposition M = U @ diag(S) @ V.T.

    U and V have orthonormal columns and S is descending. Sign flips are
    driven by U's columns (V follows, preserving the product).
    """
    M = check_matrix(M, "M")
    U, S, Vt = np.linalg.svd(M, full_matrices=False)
    V = Vt.T
    U, signs = fix_column_signs(U)
    V = V * signs
    return np.ascontiguousarray(U), S, np.ascontiguousarray(V)
