"""Versioned model checkpoints shared by the coupled networks and baselines.

One npz container serves every model kind, tagged by a ``kind`` entry plus a
JSON blob of constructor parameters and the fitted arrays. Writes go through
a temp file and an atomic rename, so an interrupted save never leaves a
partial checkpoint. Arrays round-trip bit exactly.
"""

import io
import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from .baselines import FisherLDA, LinearCCA, RandomFeatureMap, RFFKernelCCA
from .errors import CheckpointError
from .network import CoupledModel, NetworkParams, TrainConfig

CHECKPOINT_VERSION = 1


def _label_budget(model):
    """Training-time labeled budget carried on fitted models by the CLI, so
    evaluation can reproduce the exact labeled subset."""
    return {
        "train_labeled_count": getattr(model, "train_labeled_count_", None),
        "label_seed": getattr(model, "label_seed_", None),
    }


def _restore_label_budget(model, meta):
    if meta.get("train_labeled_count") is not None:
        model.train_labeled_count_ = int(meta["train_labeled_count"])
    if meta.get("label_seed") is not None:
        model.label_seed_ = int(meta["label_seed"])
    return model


def _net_arrays(prefix, net):
    out = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        out[f"{prefix}_w{i}"] = w
        out[f"{prefix}_b{i}"] = b
    return out


def _net_from(prefix, blobs):
    weights = []
    biases = []
    i = 0
    while f"{prefix}_w{i}" in blobs:
        weights.append(blobs[f"{prefix}_w{i}"])
        biases.append(blobs[f"{prefix}_b{i}"])
        i += 1
    if not weights:
        return None
    return NetworkParams(weights, biases)


def _pack(model):
    if isinstance(model, CoupledModel):
        config = asdict(model.config)
        meta = {
            "config": config,
            "train_labeled_count": model.train_labeled_count,
            "dataset_name": model.dataset_name,
        }
        arrays = _net_arrays("net1", model.net1)
        if model.net2 is not None:
            arrays.update(_net_arrays("net2", model.net2))
        return model.config.mode, meta, arrays
    if isinstance(model, LinearCCA):
        meta = {"params": model.get_params(), **_label_budget(model)}
        arrays = {
            "means_0": model.means_[0],
            "means_1": model.means_[1],
            "weights_0": model.weights_[0],
            "weights_1": model.weights_[1],
            "correlations": model.correlations_,
        }
        return "cca", meta, arrays
    if isinstance(model, FisherLDA):
        meta = {"params": model.get_params(), **_label_budget(model)}
        arrays = {
            "components": model.components_,
            "eigenvalues": model.eigenvalues_,
            "mean": model.mean_,
            "classes": model.classes_,
        }
        return "lda", meta, arrays
    if isinstance(model, RFFKernelCCA):
        meta = {
            "params": model.get_params(),
            "bandwidths": [m.bandwidth for m in model.maps_],
            **_label_budget(model),
        }
        arrays = {
            "freq_0": model.maps_[0].frequencies,
            "phase_0": model.maps_[0].phases,
            "freq_1": model.maps_[1].frequencies,
            "phase_1": model.maps_[1].phases,
            "cca_means_0": model.cca_.means_[0],
            "cca_means_1": model.cca_.means_[1],
            "cca_weights_0": model.cca_.weights_[0],
            "cca_weights_1": model.cca_.weights_[1],
            "cca_correlations": model.cca_.correlations_,
        }
        return "kcca", meta, arrays
    raise CheckpointError(f"cannot checkpoint model of type {type(model).__name__}")


def save_model(path, model):
    """Atomically write a fitted model to ``path``."""
    kind, meta, arrays = _pack(model)
    payload = {
        "checkpoint_version": np.asarray(CHECKPOINT_VERSION),
        "kind": np.asarray(kind),
        "meta_json": np.asarray(json.dumps(meta)),
    }
    payload.update(arrays)

    buf = io.BytesIO()
    np.savez(buf, **payload)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(buf.getvalue())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path):
    """Load any checkpointed model; the returned object matches the saved kind."""
    try:
        with np.load(path, allow_pickle=False) as blobs:
            data = {key: blobs[key] for key in blobs.files}
    except (OSError, ValueError) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint: {exc}") from exc
    if "checkpoint_version" not in data or "kind" not in data:
        raise CheckpointError(f"{path}: not a model checkpoint")
    version = int(data["checkpoint_version"])
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version} (this build reads "
            f"{CHECKPOINT_VERSION})"
        )
    meta = json.loads(str(data["meta_json"]))
    kind = str(data["kind"])

    if kind in ("mdnn", "dcca", "dlda"):
        config_dict = dict(meta["config"])
        config_dict["hidden_layers"] = tuple(config_dict["hidden_layers"])
        if config_dict.get("input_dims") is not None:
            config_dict["input_dims"] = tuple(config_dict["input_dims"])
        return CoupledModel(
            config=TrainConfig(**config_dict),
            net1=_net_from("net1", data),
            net2=_net_from("net2", data),
            train_labeled_count=int(meta["train_labeled_count"]),
            dataset_name=meta["dataset_name"],
        )
    if kind == "cca":
        model = LinearCCA(**meta["params"])
        model.means_ = [data["means_0"], data["means_1"]]
        model.weights_ = [data["weights_0"], data["weights_1"]]
        model.correlations_ = data["correlations"]
        return _restore_label_budget(model, meta)
    if kind == "lda":
        model = FisherLDA(**meta["params"])
        model.components_ = data["components"]
        model.eigenvalues_ = data["eigenvalues"]
        model.mean_ = data["mean"]
        model.classes_ = data["classes"]
        return _restore_label_budget(model, meta)
    if kind == "kcca":
        model = RFFKernelCCA(**meta["params"])
        model.maps_ = [
            RandomFeatureMap(data["freq_0"], data["phase_0"], meta["bandwidths"][0]),
            RandomFeatureMap(data["freq_1"], data["phase_1"], meta["bandwidths"][1]),
        ]
        cca = LinearCCA(
            n_components=meta["params"]["n_components"], r=meta["params"]["r"]
        )
        cca.means_ = [data["cca_means_0"], data["cca_means_1"]]
        cca.weights_ = [data["cca_weights_0"], data["cca_weights_1"]]
        cca.correlations_ = data["cca_correlations"]
        model.cca_ = cca
        return _restore_label_budget(model, meta)
    raise CheckpointError(f"{path}: unknown model kind {kind!r}")


def model_kind(model):
    if isinstance(model, CoupledModel):
        return model.config.mode
    return {LinearCCA: "cca", FisherLDA: "lda", RFFKernelCCA: "kcca"}.get(
        type(model), type(model).__name__
    )
