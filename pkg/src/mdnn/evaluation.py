"""Cross-view classification protocol.

A representation is trained with both views available; at test time only the
primary view exists. The protocol projects the labeled training samples'
primary view, selects the SVM regularization C by stratified k-fold
cross-validation on those projections alone, refits on all labeled training
projections, and reports accuracy on the projected primary view of the test
split.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .network import CoupledModel, project
from .svm import LinearSVM

DEFAULT_C_GRID = (10.0, 1.0, 1e-1, 1e-2, 1e-3)


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    chosen_C: float
    cv_accuracy: float  # mean validation accuracy of the chosen C
    n_test: int


def column_projector(model):
    """Adapt any supported representation model to a column-layout projector.

    Accepts a trained CoupledModel (primary-view network), any estimator with
    a scikit-learn style ``transform`` (samples as rows), or a plain callable
    mapping a (d, N) matrix to a (k, N) matrix.
    """
    if isinstance(model, CoupledModel):
        return lambda X: project(model, np.asarray(X, dtype=np.float64), view=1)
    if hasattr(model, "transform"):
        return lambda X: np.asarray(
            model.transform(np.asarray(X, dtype=np.float64).T)
        ).T
    if callable(model):
        return model
    raise TypeError(f"cannot project with model of type {type(model).__name__}")


def stratified_folds(y, n_folds, rng):
    """Deal each class's shuffled indices round-robin into ``n_folds`` folds."""
    folds = [[] for _ in range(n_folds)]
    for label in np.unique(y):
        idx = rng.permutation(np.flatnonzero(y == label))
        for pos, sample in enumerate(idx):
            folds[pos % n_folds].append(sample)
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds if f]


def select_svm_C(Z, y, grid=DEFAULT_C_GRID, folds=5, seed=0, svm_epochs=200):
    """Pick C by k-fold cross-validation; ties go to the earliest grid entry.

    Returns (chosen_C, mean validation accuracy of the chosen C).
    """
    rng = np.random.default_rng((int(seed) & 0xFFFFFFFF, 0xCF01D))
    fold_indices = stratified_folds(y, max(2, int(folds)), rng)
    splits = []
    for held_out in fold_indices:
        train_idx = np.setdiff1d(np.arange(y.shape[0]), held_out)
        if np.unique(y[train_idx]).shape[0] >= 2 and held_out.size:
            splits.append((train_idx, held_out))
    if not splits:
        raise ConfigError(
            "too few labeled samples for cross-validation; need at least one "
            "fold whose complement spans 2 classes"
        )
    means = []
    for C in grid:
        accs = []
        for train_idx, val_idx in splits:
            clf = LinearSVM(C=C, epochs=svm_epochs, seed=seed).fit(
                Z[train_idx], y[train_idx]
            )
            accs.append(float(np.mean(clf.predict(Z[val_idx]) == y[val_idx])))
        means.append(float(np.mean(accs)))
    best = int(np.argmax(means))
    return float(grid[best]), means[best]


def cross_view_eval(model, data, svm_C_grid=DEFAULT_C_GRID, folds=5, seed=0,
                    svm_epochs=200):
    """Run the cross-view protocol on a DatasetBundle.

    ``model`` is anything :func:`column_projector` accepts. Only the labeled
    subset of the train split sees labels; the test split must carry labels
    for scoring.
    """
    if data.test is None or data.test.n == 0:
        raise ConfigError("cross-view evaluation requires a non-empty test split")
    if np.any(data.test.labels < 0):
        raise ConfigError("test split labels are required to score accuracy")
    labeled = np.flatnonzero(data.train.labeled_mask)
    if labeled.size == 0:
        raise ConfigError("cross-view evaluation requires labeled training samples")

    projector = column_projector(model)
    Ztrain = np.asarray(projector(data.train.view1[:, labeled])).T
    ytrain = np.asarray(data.train.labels)[labeled]
    if Ztrain.shape[0] != labeled.size:
        raise ShapeError("projector returned a mismatched sample count")

    chosen_C, cv_accuracy = select_svm_C(
        Ztrain, ytrain, grid=svm_C_grid, folds=folds, seed=seed, svm_epochs=svm_epochs
    )
    clf = LinearSVM(C=chosen_C, epochs=svm_epochs, seed=seed).fit(Ztrain, ytrain)
    Ztest = np.asarray(projector(data.test.view1)).T
    predictions = clf.predict(Ztest)
    accuracy = float(np.mean(predictions == data.test.labels))
    return EvalResult(
        accuracy=accuracy,
        chosen_C=chosen_C,
        cv_accuracy=cv_accuracy,
        n_test=int(data.test.n),
    )
