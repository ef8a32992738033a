"""Inter-view correlation objective and its analytic gradient.

The objective is the trace norm (sum of singular values) of

    R = Sigma11^{-1/2} @ Sigma12 @ Sigma22^{-1/2}

computed from regularized covariances of the two centered output batches.
Maximizing it drives the total canonical correlation between the views. The
Frobenius norm of R is also recorded for logging, but the trace norm is what
the gradient optimizes: the two only coincide when R has a single nonzero
singular value, and the analytic gradient below is exact for the trace norm.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatchError, ShapeError
from .linalg import center, inv_sqrt_spd, svd_thin
from .validation import check_matrix, check_same_columns


@dataclass(frozen=True)
class CorrelationContext:
    """Everything the gradient needs, cached by :func:`correlation_value`.

    Immutable after construction; safe to share across threads.
    """

    z1_centered: np.ndarray
    z2_centered: np.ndarray
    sigma11: np.ndarray
    sigma22: np.ndarray
    sigma12: np.ndarray
    inv_sqrt11: np.ndarray
    inv_sqrt22: np.ndarray
    coupling: np.ndarray  # the whitened cross-covariance R
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray
    value: float  # trace norm of R
    frobenius: float  # ||R||_F, for logging only
    r: float
    n_samples: int


def covariance(zi_bar, zj_bar, r=0.0, regularize=False):
    """Sample covariance (1/(N-1)) Zi_bar @ Zj_bar.T of centered batches.

    With ``regularize`` the ridge term r*I is added; that requires a square
    result, i.e. an auto-covariance or equal view dimensions.
    """
    zi_bar = check_matrix(zi_bar, "zi_bar")
    zj_bar = check_matrix(zj_bar, "zj_bar")
    check_same_columns(zi_bar, zj_bar, "zi_bar", "zj_bar")
    n = zi_bar.shape[1]
    if n < 2:
        raise DegenerateBatchError(f"covariance needs at least 2 samples, got {n}")
    sigma = (zi_bar @ zj_bar.T) / (n - 1)
    if regularize:
        if sigma.shape[0] != sigma.shape[1]:
            raise ShapeError("ridge regularization requires a square covariance")
        sigma = sigma + r * np.eye(sigma.shape[0])
    return sigma


def correlation_value(Z1, Z2, r):
    """Trace-norm correlation of two output batches.

    Parameters
    ----------
    Z1, Z2 : ndarray, one sample per column, equal sample counts.
        Row counts (view output dimensions) may differ.
    r : float
        Ridge added to each auto-covariance so its inverse square root exists.

    Returns
    -------
    value : float
        Sum of the singular values of the whitened cross-covariance.
    ctx : CorrelationContext
        Cache consumed by :func:`correlation_gradient`.
    """
    Z1 = check_matrix(Z1, "Z1")
    Z2 = check_matrix(Z2, "Z2")
    check_same_columns(Z1, Z2)
    n = Z1.shape[1]
    d = max(Z1.shape[0], Z2.shape[0])
    if n <= d:
        warnings.warn(
            f"batch of {n} samples is not larger than the {d}-dim outputs; "
            "covariance estimates will be rank-deficient",
            RuntimeWarning,
            stacklevel=2,
        )
    z1c = center(Z1)
    z2c = center(Z2)
    sigma11 = covariance(z1c, z1c, r, regularize=True)
    sigma22 = covariance(z2c, z2c, r, regularize=True)
    sigma12 = covariance(z1c, z2c)
    inv_sqrt11 = inv_sqrt_spd(sigma11)
    inv_sqrt22 = inv_sqrt_spd(sigma22)
    coupling = inv_sqrt11 @ sigma12 @ inv_sqrt22
    u, s, v = svd_thin(coupling)
    value = float(s.sum())
    ctx = CorrelationContext(
        z1_centered=z1c,
        z2_centered=z2c,
        sigma11=sigma11,
        sigma22=sigma22,
        sigma12=sigma12,
        inv_sqrt11=inv_sqrt11,
        inv_sqrt22=inv_sqrt22,
        coupling=coupling,
        u=u,
        singular_values=s,
        v=v,
        value=value,
        frobenius=float(np.linalg.norm(coupling)),
        r=r,
        n_samples=n,
    )
    return value, ctx


def correlation_gradient(ctx):
    """Gradient of the trace-norm correlation with respect to the raw batches.

    Returns (dZ1, dZ2) with the shapes of the original batches. Centering is
    absorbed: row-mean shifts lie in the gradient's null space, so the
    gradient with respect to the centered and raw outputs coincide.
    """
    u, s, v = ctx.u, ctx.singular_values, ctx.v
    n = ctx.n_samples
    cross_12 = ctx.inv_sqrt11 @ u @ v.T @ ctx.inv_sqrt22
    auto_11 = -0.5 * ctx.inv_sqrt11 @ (u * s) @ u.T @ ctx.inv_sqrt11
    auto_22 = -0.5 * ctx.inv_sqrt22 @ (v * s) @ v.T @ ctx.inv_sqrt22
    dZ1 = (2.0 * auto_11 @ ctx.z1_centered + cross_12 @ ctx.z2_centered) / (n - 1)
    dZ2 = (2.0 * auto_22 @ ctx.z2_centered + cross_12.T @ ctx.z1_centered) / (n - 1)
    return dZ1, dZ2
