"""Intra-view discriminability objective: scatter matrices, trace criterion, gradient.

For a labeled batch Z (one sample per column) with class means m_i and counts
L_i, the within-class scatter is the mean squared deviation from class means
and the between-class scatter is the count-weighted spread of the class means:

    S_W = (1/L) sum_i sum_{z in class i} (z - m_i)(z - m_i)^T
    S_B = (1/(2 L^2)) sum_{i,j} L_i L_j (m_i - m_j)(m_i - m_j)^T
        = (1/L) sum_i L_i (m_i - m_bar)(m_i - m_bar)^T

The objective G = trace((S_W + S_B + r I)^{-1} S_B) lies in
[0, min(n_classes - 1, d)] and grows as classes tighten and separate.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateLabelsError
from .validation import check_labels, check_matrix


@dataclass(frozen=True)
class ScatterStats:
    """Per-batch scatter statistics for the classes present in the batch."""

    class_labels: np.ndarray  # distinct labels present, ascending
    class_counts: np.ndarray  # per-class sample counts, aligned with class_labels
    class_means: np.ndarray  # d x n_classes
    within: np.ndarray  # S_W, d x d
    between: np.ndarray  # S_B, d x d
    total: np.ndarray  # S_W + S_B
    n_labeled: int

    @property
    def n_classes(self):
        return self.class_labels.shape[0]


def _class_index(y):
    labels, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    if labels.shape[0] < 2:
        raise DegenerateLabelsError(
            f"a labeled batch needs at least 2 classes, got {labels.shape[0]}"
        )
    return labels, inverse, counts


def scatter_stats(Z, y):
    """Compute class means and scatter matrices of a labeled batch.

    Classes are the distinct values present in ``y``; classes absent from the
    batch simply do not participate. A single-class batch raises
    DegenerateLabelsError since the between-class scatter would vanish.
    """
    Z = check_matrix(Z, "Z")
    y = check_labels(y, Z.shape[1])
    labels, inverse, counts = _class_index(y)
    L = Z.shape[1]
    d = Z.shape[0]
    k = labels.shape[0]

    means = np.zeros((d, k))
    np.add.at(means.T, inverse, Z.T)
    means /= counts

    deviations = Z - means[:, inverse]
    within = (deviations @ deviations.T) / L

    grand_mean = Z.mean(axis=1, keepdims=True)
    spread = (means - grand_mean) * np.sqrt(counts / L)
    between = spread @ spread.T

    return ScatterStats(
        class_labels=labels,
        class_counts=counts,
        class_means=means,
        within=within,
        between=between,
        total=within + between,
        n_labeled=L,
    )


def discriminability(stats, r):
    """Trace criterion G = trace((S_W + S_B + r I)^{-1} S_B)."""
    d = stats.within.shape[0]
    regularized_total = stats.total + r * np.eye(d)
    return float(np.trace(np.linalg.solve(regularized_total, stats.between)))


def discriminability_gradient(Z, y, r, stats=None):
    """Gradient of :func:`discriminability` with respect to every entry of Z.

    Derived from the product rule on the regularized-total-scatter inverse;
    verified against central finite differences (see the gradient-check
    suite). Columns of the gradient sum to zero because scatter matrices are
    translation invariant. Pass precomputed ``stats`` to avoid recomputing
    them when the value is needed too.
    """
    Z = check_matrix(Z, "Z")
    y = check_labels(y, Z.shape[1])
    if stats is None:
        stats = scatter_stats(Z, y)
    inverse = np.searchsorted(stats.class_labels, y)
    L = stats.n_labeled
    d = Z.shape[0]

    regularized_total = stats.total + r * np.eye(d)
    inv_total = np.linalg.inv(regularized_total)

    grand_mean = Z.mean(axis=1, keepdims=True)
    mean_per_sample = stats.class_means[:, inverse]
    between_part = mean_per_sample - grand_mean  # Z @ (E - J)
    total_part = Z - grand_mean  # Z @ (I - J)

    grad = (2.0 / L) * inv_total @ (
        between_part - stats.between @ inv_total @ total_part
    )
    return grad
