"""Semi-supervised discriminative representation learning for two-view data.

Public surface: the MDNN estimator and classical baselines (all scikit-learn
compatible), the cross-view evaluation protocol, dataset generators and the
container format, plus the lower-level objective/gradient kernels for anyone
composing their own training loop.
"""

from .baselines import FisherLDA, LinearCCA, RFFKernelCCA
from .checkpoint import load_model, save_model
from .correlation import correlation_gradient, correlation_value, covariance
from .datasets import (
    DatasetBundle,
    PairedDataset,
    gen_noisy_mnist,
    gen_synth_gaussian,
    load_dataset,
    load_idx,
    save_dataset,
    select_labeled,
)
from .discriminative import discriminability, discriminability_gradient, scatter_stats
from .evaluation import cross_view_eval
from .model import MDNN
from .network import CoupledModel, TrainConfig, project, train
from .svm import LinearSVM

__version__ = "0.1.0"

__all__ = [
    "MDNN",
    "LinearCCA",
    "FisherLDA",
    "RFFKernelCCA",
    "LinearSVM",
    "CoupledModel",
    "TrainConfig",
    "train",
    "project",
    "cross_view_eval",
    "correlation_value",
    "correlation_gradient",
    "covariance",
    "scatter_stats",
    "discriminability",
    "discriminability_gradient",
    "PairedDataset",
    "DatasetBundle",
    "gen_noisy_mnist",
    "gen_synth_gaussian",
    "select_labeled",
    "load_idx",
    "load_dataset",
    "save_dataset",
    "load_model",
    "save_model",
    "__version__",
]
