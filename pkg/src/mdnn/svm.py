"""Deterministic linear support vector machine, one-vs-rest for multi-class.

Each binary subproblem minimizes

    0.5 * ||w||^2 + C * sum_i hinge(y_i * (w . x_i))

over bias-augmented weights by epoch-based stochastic subgradient descent
with the 1/(lambda * t) step schedule (lambda = 1/(C n)), seed-controlled
shuffling, and a fixed epoch budget. No external solver is involved, so
results are reproducible bit for bit.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .errors import ConfigError, ShapeError
from .validation import as_samples_rows, check_labels


def _hinge_objective(w, Xa, signs, C):
    margins = signs * (Xa @ w)
    return 0.5 * float(w @ w) + C * float(np.maximum(0.0, 1.0 - margins).sum())


def _pegasos(Xa, signs, C, epochs, rng, tol, chunk=256):
    """Mini-batch subgradient descent with 1/(lam t) steps.

    Each epoch shuffles the samples (seed-controlled) and walks them in
    chunks; every chunk contributes one vectorized subgradient step. The
    returned weights are the t-weighted average of the iterates, which damps
    the last-iterate oscillation of the raw schedule.
    """
    n = Xa.shape[0]
    lam = 1.0 / (C * n)
    radius = 1.0 / np.sqrt(lam)
    w = np.zeros(Xa.shape[1])
    avg = np.zeros_like(w)
    weight_sum = 0.0
    t = 0
    previous = None
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, chunk):
            idx = order[start : start + chunk]
            t += 1
            eta = 1.0 / (lam * t)
            margins = signs[idx] * (Xa[idx] @ w)
            active = idx[margins < 1.0]
            w *= 1.0 - eta * lam
            if active.size:
                w += (eta / idx.size) * (signs[active] @ Xa[active])
            norm = np.linalg.norm(w)
            if norm > radius:
                w *= radius / norm
            avg += t * (w - avg) / (weight_sum + t)
            weight_sum += t
        objective = _hinge_objective(avg, Xa, signs, C)
        if previous is not None and abs(previous - objective) <= tol * max(
            1.0, abs(previous)
        ):
            return avg, objective, True, epoch + 1
        previous = objective
    return avg, objective, False, epochs


class LinearSVM(BaseEstimator, ClassifierMixin):
    """Linear SVM classifier over dense features (samples as rows).

    Binary problems train a single weight row (positive scores mean the
    higher class label); multi-class problems train one row per class,
    one-vs-rest, with argmax prediction and ties broken toward the lowest
    class index.

    Attributes after fitting: ``classes_``, ``weights_`` (rows of
    bias-augmented weights), ``objective_`` (final hinge objectives per row),
    ``converged_`` and ``n_epochs_``.
    """

    def __init__(self, C=1.0, epochs=200, seed=0, tol=1e-8):
        self.C = C
        self.epochs = epochs
        self.seed = seed
        self.tol = tol

    def fit(self, X, y):
        X = as_samples_rows(X)
        y = check_labels(y, X.shape[0])
        classes, indices = np.unique(y, return_inverse=True)
        if classes.shape[0] < 2:
            raise ConfigError("need at least 2 classes to fit a classifier")
        if self.C <= 0:
            raise ConfigError(f"C must be positive, got {self.C}")
        Xa = np.hstack([X, np.ones((X.shape[0], 1))])

        self.classes_ = classes
        rows = 1 if classes.shape[0] == 2 else classes.shape[0]
        self.weights_ = np.zeros((rows, Xa.shape[1]))
        self.objective_ = np.zeros(rows)
        self.converged_ = np.zeros(rows, dtype=bool)
        self.n_epochs_ = np.zeros(rows, dtype=int)
        for row in range(rows):
            target = 1 if rows == 1 else row
            signs = np.where(indices == target, 1.0, -1.0)
            rng = np.random.default_rng((int(self.seed) & 0xFFFFFFFF, 0x57A4, row))
            w, obj, conv, n_ep = _pegasos(
                Xa, signs, float(self.C), int(self.epochs), rng, float(self.tol)
            )
            self.weights_[row] = w
            self.objective_[row] = obj
            self.converged_[row] = conv
            self.n_epochs_[row] = n_ep
        return self

    def decision_function(self, X):
        X = as_samples_rows(X)
        if X.shape[1] != self.weights_.shape[1] - 1:
            raise ShapeError(
                f"expected {self.weights_.shape[1] - 1} features, got {X.shape[1]}"
            )
        scores = X @ self.weights_[:, :-1].T + self.weights_[:, -1]
        return scores[:, 0] if self.weights_.shape[0] == 1 else scores

    def predict(self, X):
        scores = self.decision_function(X)
        if scores.ndim == 1:
            return self.classes_[(scores > 0).astype(int)]
        # argmax keeps the first (lowest class index) on exact ties
        return self.classes_[np.argmax(scores, axis=1)]
