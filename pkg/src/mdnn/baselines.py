"""Classical baselines: closed-form linear CCA, Fisher LDA, and randomized-
feature kernel CCA.

All three follow scikit-learn conventions at the API boundary (samples as
rows, fit/transform, ``get_params`` via BaseEstimator) while reusing the
package's column-layout kernels internally. Two-view estimators take
``Xs = [X1, X2]``, a list of per-view arrays sharing the sample axis.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.spatial.distance import pdist
from sklearn.base import BaseEstimator, TransformerMixin

from .discriminative import scatter_stats
from .errors import ConfigError, ShapeError
from .linalg import fix_column_signs, inv_sqrt_spd, svd_thin
from .validation import as_samples_rows, check_labels, rows_to_columns


def _check_two_views(Xs):
    if len(Xs) != 2:
        raise ShapeError(f"expected exactly two views, got {len(Xs)}")
    X1 = as_samples_rows(Xs[0], "Xs[0]")
    X2 = as_samples_rows(Xs[1], "Xs[1]")
    if X1.shape[0] != X2.shape[0]:
        raise ShapeError(
            f"views disagree on sample count: {X1.shape[0]} vs {X2.shape[0]}"
        )
    return X1, X2


def _cca_columns(z1, z2, k, r):
    """Column-layout CCA core: centered inputs -> (per-view maps, correlations)."""
    n = z1.shape[1]
    s11 = z1 @ z1.T / (n - 1) + r * np.eye(z1.shape[0])
    s22 = z2 @ z2.T / (n - 1) + r * np.eye(z2.shape[0])
    s12 = z1 @ z2.T / (n - 1)
    w11 = inv_sqrt_spd(s11)
    w22 = inv_sqrt_spd(s22)
    u, s, v = svd_thin(w11 @ s12 @ w22)
    return w11 @ u[:, :k], w22 @ v[:, :k], s[:k]


class LinearCCA(BaseEstimator):
    """Closed-form canonical correlation analysis of two views.

    The fitted per-view maps whiten their own view (W.T @ Sigma @ W = I) and
    maximize the correlation between the projected views; the canonical
    correlations are stored in ``correlations_``, descending.

    Parameters
    ----------
    n_components : int
        Output dimension; at most the smaller view dimension.
    r : float
        Ridge added to the auto-covariances before inversion.
    """

    def __init__(self, n_components=2, r=1e-4):
        self.n_components = n_components
        self.r = r

    def fit(self, Xs, y=None):
        X1, X2 = _check_two_views(Xs)
        k = int(self.n_components)
        if k < 1 or k > min(X1.shape[1], X2.shape[1]):
            raise ConfigError(
                f"n_components={k} must lie in [1, {min(X1.shape[1], X2.shape[1])}]"
            )
        self.means_ = [X1.mean(axis=0), X2.mean(axis=0)]
        z1 = rows_to_columns(X1 - self.means_[0])
        z2 = rows_to_columns(X2 - self.means_[1])
        p1, p2, corr = _cca_columns(z1, z2, k, self.r)
        self.weights_ = [p1, p2]
        self.correlations_ = corr
        return self

    def transform(self, X, view=1):
        X = as_samples_rows(X)
        idx = view - 1
        if idx not in (0, 1):
            raise ConfigError(f"view must be 1 or 2, got {view!r}")
        if X.shape[1] != self.weights_[idx].shape[0]:
            raise ShapeError(
                f"view {view} expects {self.weights_[idx].shape[0]} features, "
                f"got {X.shape[1]}"
            )
        return (X - self.means_[idx]) @ self.weights_[idx]

    def transform_pair(self, Xs):
        X1, X2 = _check_two_views(Xs)
        return [self.transform(X1, view=1), self.transform(X2, view=2)]


class FisherLDA(BaseEstimator, TransformerMixin):
    """Fisher discriminant projection onto the top generalized eigenvectors of
    (S_W + r I)^{-1} S_B.

    Parameters
    ----------
    n_components : int or None
        Defaults to (number of classes - 1); asking for more produces a
        warning since the between-class scatter has no further rank.
    r : float
        Ridge on the within-class scatter.
    """

    def __init__(self, n_components=None, r=1e-4):
        self.n_components = n_components
        self.r = r

    def fit(self, X, y):
        X = as_samples_rows(X)
        y = check_labels(y, X.shape[0])
        Z = rows_to_columns(X)
        stats = scatter_stats(Z, y)
        d = Z.shape[0]
        k = self.n_components if self.n_components is not None else stats.n_classes - 1
        k = int(k)
        if k < 1 or k > d:
            raise ConfigError(f"n_components={k} must lie in [1, {d}]")
        if k > stats.n_classes - 1:
            warnings.warn(
                f"n_components={k} exceeds the between-class scatter rank "
                f"{stats.n_classes - 1}; trailing directions are noise",
                RuntimeWarning,
                stacklevel=2,
            )
        evals, evecs = sla.eigh(stats.between, stats.within + self.r * np.eye(d))
        order = np.argsort(evals)[::-1][:k]
        components, _ = fix_column_signs(evecs[:, order])
        self.components_ = components
        self.eigenvalues_ = evals[order]
        self.mean_ = X.mean(axis=0)
        self.classes_ = stats.class_labels
        return self

    def transform(self, X):
        X = as_samples_rows(X)
        if X.shape[1] != self.components_.shape[0]:
            raise ShapeError(
                f"expected {self.components_.shape[0]} features, got {X.shape[1]}"
            )
        return (X - self.mean_) @ self.components_


@dataclass
class RandomFeatureMap:
    """Random cosine features approximating a Gaussian kernel of the stored
    bandwidth: phi(x) = sqrt(2/m) * cos(F x + p)."""

    frequencies: np.ndarray  # (n_features, d)
    phases: np.ndarray  # (n_features, 1)
    bandwidth: float

    def apply_columns(self, X):
        m = self.frequencies.shape[0]
        return np.sqrt(2.0 / m) * np.cos(self.frequencies @ X + self.phases)


def median_pairwise_distance(X_rows, rng, subsample=1000):
    """Median Euclidean distance over a subsample; the usual bandwidth heuristic."""
    n = X_rows.shape[0]
    if n > subsample:
        X_rows = X_rows[rng.choice(n, size=subsample, replace=False)]
    med = float(np.median(pdist(X_rows)))
    return med if med > 0 else 1.0


class RFFKernelCCA(BaseEstimator):
    """Approximate kernel CCA: random Fourier features per view, then LinearCCA.

    Parameters
    ----------
    n_components : int
        Output dimension of the final linear CCA.
    n_features : int
        Random features per view; more features, better kernel approximation.
    bandwidth : float or None
        Gaussian kernel bandwidth shared by both views; None selects it per
        view by the median pairwise-distance heuristic on a subsample.
    r : float
        Ridge for the linear CCA on the mapped features.
    seed : int
        Drives the random frequencies, phases, and heuristic subsampling.
    """

    def __init__(self, n_components=2, n_features=2000, bandwidth=None, r=1e-4, seed=0):
        self.n_components = n_components
        self.n_features = n_features
        self.bandwidth = bandwidth
        self.r = r
        self.seed = seed

    def fit(self, Xs, y=None):
        X1, X2 = _check_two_views(Xs)
        m = int(self.n_features)
        if m < self.n_components:
            raise ConfigError(
                f"n_features={m} must be at least n_components={self.n_components}"
            )
        rng = np.random.default_rng((int(self.seed) & 0xFFFFFFFF, 0xFF17))
        self.maps_ = []
        mapped = []
        for X in (X1, X2):
            bw = (
                float(self.bandwidth)
                if self.bandwidth is not None
                else median_pairwise_distance(X, rng)
            )
            fmap = RandomFeatureMap(
                frequencies=rng.standard_normal((m, X.shape[1])) / bw,
                phases=rng.uniform(0.0, 2.0 * np.pi, size=(m, 1)),
                bandwidth=bw,
            )
            self.maps_.append(fmap)
            mapped.append(fmap.apply_columns(rows_to_columns(X)).T)
        self.cca_ = LinearCCA(n_components=self.n_components, r=self.r).fit(mapped)
        return self

    def transform(self, X, view=1):
        X = as_samples_rows(X)
        fmap = self.maps_[view - 1]
        return self.cca_.transform(fmap.apply_columns(rows_to_columns(X)).T, view=view)

    def transform_pair(self, Xs):
        X1, X2 = _check_two_views(Xs)
        return [self.transform(X1, view=1), self.transform(X2, view=2)]

    @property
    def correlations_(self):
        return self.cca_.correlations_
