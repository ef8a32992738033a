"""Scikit-learn style estimator for the coupled-network representation learner."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .datasets import PairedDataset
from .errors import ConfigError, ShapeError
from .network import TrainConfig, project, train
from .validation import as_samples_rows


class MDNN(BaseEstimator, TransformerMixin):
    """Semi-supervised two-view representation learner.

    Two view-specific networks are trained jointly so that paired samples
    project close together across views (correlation term) while labeled
    samples of the same class cluster and different classes separate
    (discriminability terms). Unlabeled samples still contribute through the
    correlation term, which is what makes small labeled sets workable.

    Parameters
    ----------
    hidden_layers : tuple of int
        Hidden widths shared by both networks; rectifier activations, linear
        output layer.
    repr_dim : int or None
        Output dimension of the shared space; defaults to the number of
        classes observed in ``y``.
    lam : float
        Trade-off weight of the discriminability terms.
    alpha : float
        Weight decay strength on the network weights.
    r : float
        Regularizer shared by the covariance and scatter inverses.
    epochs, batch_size, learning_rate, seed :
        Optimization settings; Adam with the usual moment defaults.
    mode : {"mdnn", "dcca", "dlda"}
        "dcca" forces lam to 0 (correlation only); "dlda" trains a single
        network on the primary view with the discriminability term only.

    Attributes
    ----------
    model_ : CoupledModel
        The trained networks and their config.
    history_ : list of dict
        Per-epoch objective terms.
    classes_ : ndarray
        Distinct labels seen during fit (empty when unsupervised).

    Examples
    --------
    >>> est = MDNN(hidden_layers=(64,), repr_dim=3, lam=10.0, epochs=20)
    >>> est.fit([X1, X2], y)           # y uses -1 for unlabeled samples
    >>> Z = est.transform(X1_test)     # primary view at test time
    """

    def __init__(
        self,
        hidden_layers=(256, 256, 256),
        repr_dim=None,
        lam=10.0,
        alpha=1e-4,
        r=1e-4,
        epochs=150,
        batch_size=400,
        learning_rate=1e-3,
        seed=0,
        mode="mdnn",
    ):
        self.hidden_layers = hidden_layers
        self.repr_dim = repr_dim
        self.lam = lam
        self.alpha = alpha
        self.r = r
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.mode = mode

    def _config(self, repr_dim):
        return TrainConfig(
            hidden_layers=tuple(int(w) for w in self.hidden_layers),
            repr_dim=int(repr_dim),
            lam=float(self.lam),
            alpha=float(self.alpha),
            r=float(self.r),
            epochs=int(self.epochs),
            batch_size=int(self.batch_size),
            learning_rate=float(self.learning_rate),
            seed=int(self.seed),
            mode=self.mode,
        )

    def fit(self, Xs, y=None):
        """Fit on ``Xs = [X1, X2]`` (samples as rows); ``y`` may be None for a
        fully unsupervised run or carry -1 entries for unlabeled samples."""
        if len(Xs) != 2:
            raise ShapeError(f"expected two views, got {len(Xs)}")
        X1 = as_samples_rows(Xs[0], "Xs[0]")
        X2 = as_samples_rows(Xs[1], "Xs[1]")
        if X1.shape[0] != X2.shape[0]:
            raise ShapeError(
                f"views disagree on sample count: {X1.shape[0]} vs {X2.shape[0]}"
            )
        n = X1.shape[0]
        if y is None:
            labels = np.full(n, -1, dtype=np.int32)
        else:
            labels = np.asarray(y)
            if labels.shape != (n,):
                raise ShapeError(f"y has shape {labels.shape} for {n} samples")
            labels = labels.astype(np.int32)
        mask = labels >= 0
        self.classes_ = np.unique(labels[mask])

        repr_dim = self.repr_dim
        if repr_dim is None:
            if self.classes_.size < 2:
                raise ConfigError(
                    "repr_dim=None infers the output size from the classes in y; "
                    "pass repr_dim explicitly for unsupervised runs"
                )
            repr_dim = self.classes_.size

        data = PairedDataset(
            view1=np.ascontiguousarray(X1.T),
            view2=np.ascontiguousarray(X2.T),
            labels=labels,
            labeled_mask=mask,
            split="train",
            class_count=int(labels.max()) + 1 if mask.any() else 0,
        )
        self.model_, self.history_ = train(self._config(repr_dim), data)
        return self

    def transform(self, X, view=1):
        """Project samples (rows) of the given view into the shared space."""
        X = as_samples_rows(X)
        return project(self.model_, X.T, view=view).T

    def transform_pair(self, Xs):
        return [self.transform(Xs[0], view=1), self.transform(Xs[1], view=2)]
