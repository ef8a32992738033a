"""Input validation helpers shared by the functional core and the estimators."""

import numpy as np

from .errors import ShapeError


def check_matrix(X, name="X", dtype=np.float64):
    """Coerce ``X`` to a 2-D array of the given dtype and reject non-finite entries."""
    X = np.asarray(X, dtype=dtype)
    if X.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ShapeError(f"{name} contains NaN or Inf entries")
    return X


def check_square(A, name="A"):
    A = check_matrix(A, name)
    if A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    return A


def check_same_columns(Z1, Z2, name1="Z1", name2="Z2"):
    if Z1.shape[1] != Z2.shape[1]:
        raise ShapeError(
            f"{name1} and {name2} must have the same number of columns (samples), "
            f"got {Z1.shape[1]} and {Z2.shape[1]}"
        )


def check_labels(y, n_samples, name="y"):
    """Coerce ``y`` to a 1-D int array aligned with ``n_samples`` columns."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ShapeError(f"{name} must be 1-D, got shape {y.shape}")
    if y.shape[0] != n_samples:
        raise ShapeError(f"{name} has {y.shape[0]} entries for {n_samples} samples")
    if not np.issubdtype(y.dtype, np.integer):
        yi = y.astype(np.int64)
        if not np.array_equal(yi, y):
            raise ShapeError(f"{name} must hold integer class indices")
        y = yi
    return y.astype(np.int64, copy=False)


def as_samples_rows(X, name="X"):
    """Validate an estimator-facing array laid out one sample per row."""
    return check_matrix(X, name)


def rows_to_columns(X):
    """Estimator boundary: convert (n_samples, n_features) to the internal column layout."""
    return np.ascontiguousarray(X.T)
