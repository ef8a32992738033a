"""Coupled view-specific networks, their training loop, and the Adam optimizer.

Each view is mapped by its own fully connected network (rectifier hidden
layers, linear output) into a shared low-dimensional space. Training maximizes

    correlation(Z1, Z2) + lam * (disc(Z1) + disc(Z2)) - alpha * ||weights||^2

by minimizing its negation with Adam. The correlation term is evaluated on
every mini-batch; the discriminability terms only on labeled batches. Three
modes share this loop: "mdnn" (the full objective), "dcca" (lam forced to 0,
so only the correlation term trains the networks) and "dlda" (a single
network on the primary view trained on lam * disc alone, using only the
labeled samples).
"""

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .correlation import correlation_gradient, correlation_value
from .discriminative import discriminability, discriminability_gradient, scatter_stats
from .errors import ConfigError, NonFiniteGradientError, ShapeError
from .sampler import LABELED, make_schedule

MODES = ("mdnn", "dcca", "dlda")


@dataclass
class TrainConfig:
    """Hyperparameters of a training run. ``input_dims`` is filled in from the
    dataset by :func:`train` when left unset."""

    hidden_layers: tuple = (256, 256, 256)
    repr_dim: int = 10
    lam: float = 10.0  # weight of the discriminability terms
    alpha: float = 1e-4  # weight decay strength
    r: float = 1e-4  # shared covariance/scatter regularizer
    epochs: int = 150
    batch_size: int = 400
    learning_rate: float = 1e-3
    seed: int = 0
    mode: str = "mdnn"
    input_dims: tuple | None = None

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.lam < 0 or self.alpha < 0:
            raise ConfigError("lam and alpha must be non-negative")
        if self.r <= 0:
            raise ConfigError("r must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 1 or self.repr_dim < 1:
            raise ConfigError("batch_size and repr_dim must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if any(int(w) < 1 for w in self.hidden_layers):
            raise ConfigError(f"zero-width hidden layer in {self.hidden_layers}")
        if self.input_dims is not None and any(int(d) < 1 for d in self.input_dims):
            raise ConfigError(f"invalid input dims {self.input_dims}")
        if self.batch_size <= self.repr_dim:
            warnings.warn(
                f"batch_size {self.batch_size} <= repr_dim {self.repr_dim}: batch "
                "covariances will be rank deficient and the correlation term ill-posed",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def effective_lam(self):
        return 0.0 if self.mode == "dcca" else self.lam


@dataclass
class NetworkParams:
    """Weights and biases of one view network; weights[i] has shape (out, in)."""

    weights: list
    biases: list

    @property
    def n_layers(self):
        return len(self.weights)

    @property
    def output_dim(self):
        return self.weights[-1].shape[0]

    def arrays(self):
        return self.weights + self.biases

    def squared_weight_norm(self):
        return float(sum((w**2).sum() for w in self.weights))

    def all_finite(self):
        return all(np.all(np.isfinite(a)) for a in self.arrays())


@dataclass
class AdamState:
    """First/second moment accumulators aligned with a flat parameter list."""

    m: list
    v: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_arrays(cls, arrays):
        return cls(
            m=[np.zeros_like(a) for a in arrays],
            v=[np.zeros_like(a) for a in arrays],
        )


@dataclass
class ForwardCache:
    params: NetworkParams
    inputs: list  # input to each layer
    preacts: list  # pre-activation output of each layer


@dataclass
class CoupledModel:
    """A trained pair of view networks (the second is absent in dlda mode)."""

    config: TrainConfig
    net1: NetworkParams
    net2: NetworkParams | None = None
    train_labeled_count: int = 0
    dataset_name: str = ""


def _init_single(rng, widths):
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros((fan_out, 1)))
    return NetworkParams(weights, biases)


def init_networks(config):
    """Seed-deterministic initialization: scaled-uniform weights, zero biases.

    Returns (net1, net2, adam_state); net2 is None in dlda mode and the Adam
    state covers every created parameter.
    """
    config.validate()
    if config.input_dims is None:
        raise ConfigError("config.input_dims must be set before initialization")
    d1, d2 = config.input_dims
    hidden = tuple(int(w) for w in config.hidden_layers)
    rng = np.random.default_rng((int(config.seed) & 0xFFFFFFFF, 0xD1CE))
    net1 = _init_single(rng, (d1,) + hidden + (config.repr_dim,))
    net2 = None
    if config.mode != "dlda":
        net2 = _init_single(rng, (d2,) + hidden + (config.repr_dim,))
    arrays = net1.arrays() + (net2.arrays() if net2 is not None else [])
    return net1, net2, AdamState.for_arrays(arrays)


def forward(params, X):
    """Forward pass; returns (Z, cache) with one sample per column."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != params.weights[0].shape[1]:
        raise ShapeError(
            f"input of shape {X.shape} does not match first-layer width "
            f"{params.weights[0].shape[1]}"
        )
    inputs = []
    preacts = []
    h = X
    last = params.n_layers - 1
    for i, (W, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = W @ h + b
        preacts.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, ForwardCache(params, inputs, preacts)


def backward(cache, dZ):
    """Backpropagate an output-space gradient to every weight and bias.

    Returns a NetworkParams-shaped container of gradients of the scalar whose
    output gradient is ``dZ``.
    """
    params = cache.params
    if dZ.shape != cache.preacts[-1].shape:
        raise ShapeError(
            f"dZ shape {dZ.shape} does not match cached forward output "
            f"{cache.preacts[-1].shape}; stale or mismatched cache"
        )
    d_weights = [None] * params.n_layers
    d_biases = [None] * params.n_layers
    delta = dZ
    for i in range(params.n_layers - 1, -1, -1):
        d_weights[i] = delta @ cache.inputs[i].T
        d_biases[i] = delta.sum(axis=1, keepdims=True)
        if i > 0:
            delta = params.weights[i].T @ delta
            delta = delta * (cache.preacts[i - 1] > 0)
    return NetworkParams(d_weights, d_biases)


def adam_step(state, arrays, grads, lr):
    """One Adam update (bias-corrected, in place) minimizing the given grads."""
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for a, g, m, v in zip(arrays, grads, state.m, state.v):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(
                f"non-finite gradient for parameter of shape {a.shape} at step {t}"
            )
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        a -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return arrays, state


@dataclass
class BatchEval:
    correlation: float | None
    disc1: float | None
    disc2: float | None
    grads1: NetworkParams | None
    grads2: NetworkParams | None

    @property
    def objective(self):
        total = 0.0
        if self.correlation is not None:
            total += self.correlation
        return total

    def objective_with(self, lam):
        total = self.objective
        for g in (self.disc1, self.disc2):
            if g is not None:
                total += lam * g
        return total


def evaluate_batch(config, net1, net2, X1, X2, y, want_grads=True):
    """Objective terms and ascent gradients of one mini-batch.

    ``y`` is None for unlabeled batches (discriminability skipped); ``net2``
    and ``X2`` are None in single-view mode (correlation skipped). Weight
    decay is handled at the parameter level by the caller.
    """
    lam = config.effective_lam
    Z1, cache1 = forward(net1, X1)
    Z2 = cache2 = None
    if net2 is not None:
        Z2, cache2 = forward(net2, X2)

    corr = None
    dZ1 = np.zeros_like(Z1)
    dZ2 = np.zeros_like(Z2) if Z2 is not None else None
    if Z2 is not None:
        corr, ctx = correlation_value(Z1, Z2, config.r)
        if want_grads:
            dZ1, dZ2 = correlation_gradient(ctx)

    disc1 = disc2 = None
    if y is not None and lam != 0.0:
        stats1 = scatter_stats(Z1, y)
        disc1 = discriminability(stats1, config.r)
        if want_grads:
            dZ1 = dZ1 + lam * discriminability_gradient(Z1, y, config.r, stats=stats1)
        if Z2 is not None:
            stats2 = scatter_stats(Z2, y)
            disc2 = discriminability(stats2, config.r)
            if want_grads:
                dZ2 = dZ2 + lam * discriminability_gradient(Z2, y, config.r, stats=stats2)

    grads1 = grads2 = None
    if want_grads:
        grads1 = backward(cache1, dZ1)
        for gw, w in zip(grads1.weights, net1.weights):
            gw -= 2.0 * config.alpha * w
        if Z2 is not None:
            grads2 = backward(cache2, dZ2)
            for gw, w in zip(grads2.weights, net2.weights):
                gw -= 2.0 * config.alpha * w
    return BatchEval(corr, disc1, disc2, grads1, grads2)


def full_objective(config, net1, net2, X1, X2, y):
    """Scalar training objective of one batch, including weight decay."""
    ev = evaluate_batch(config, net1, net2, X1, X2, y, want_grads=False)
    penalty = net1.squared_weight_norm()
    if net2 is not None:
        penalty += net2.squared_weight_norm()
    return ev.objective_with(config.effective_lam) - config.alpha * penalty


def objective_param_grads(config, net1, net2, X1, X2, y):
    """Ascent gradients of :func:`full_objective` for every parameter."""
    ev = evaluate_batch(config, net1, net2, X1, X2, y)
    return ev.grads1, ev.grads2


def train(config, data):
    """Train the coupled networks on a paired dataset.

    Returns ``(model, history)`` where history holds one record per epoch with
    the epoch-mean correlation, epoch-mean discriminability terms (only when
    they were evaluated), the combined objective, and the squared weight norm.
    Deterministic given the config seed.
    """
    d1, d2 = data.view1.shape[0], data.view2.shape[0]
    if config.input_dims is None:
        config = replace(config, input_dims=(d1, d2))
    elif tuple(config.input_dims) != (d1, d2):
        raise ShapeError(
            f"config.input_dims {config.input_dims} do not match dataset dims {(d1, d2)}"
        )
    config.validate()
    lam = config.effective_lam

    labeled_count = int(np.count_nonzero(data.labeled_mask))
    if config.mode == "dlda":
        if labeled_count == 0:
            raise ConfigError("dlda mode requires labeled samples")
        train_data = data.subset(np.flatnonzero(data.labeled_mask))
    else:
        train_data = data
        if lam > 0 and labeled_count == 0:
            raise ConfigError(
                "lam > 0 requires labeled samples; pass lam=0 or label the data"
            )

    net1, net2, adam = init_networks(config)
    arrays = net1.arrays() + (net2.arrays() if net2 is not None else [])

    history = []
    for epoch in range(config.epochs):
        schedule = make_schedule(
            train_data,
            config.batch_size,
            epoch=epoch,
            seed=config.seed,
            min_batch=config.repr_dim + 1,
        )
        sums = {}
        counts = {}

        def tally(key, value):
            if value is not None:
                sums[key] = sums.get(key, 0.0) + value
                counts[key] = counts.get(key, 0) + 1

        n_batches = 0
        for batch_index, batch in enumerate(schedule):
            X1 = train_data.view1[:, batch.indices].astype(np.float64)
            X2 = train_data.view2[:, batch.indices].astype(np.float64)
            y = None
            if batch.kind == LABELED and lam != 0.0:
                y = np.asarray(train_data.labels)[batch.indices]
            try:
                ev = evaluate_batch(config, net1, net2, X1, X2, y)
                grads = []
                if ev.grads1 is not None:
                    grads += ev.grads1.arrays()
                if ev.grads2 is not None:
                    grads += ev.grads2.arrays()
                # gradient ascent: minimize the negated objective
                adam_step(adam, arrays, [-g for g in grads], config.learning_rate)
            except (NonFiniteGradientError, ValueError) as exc:
                raise type(exc)(
                    f"epoch {epoch}, batch {batch_index} ({batch.kind}, "
                    f"{len(batch.indices)} samples): {exc}"
                ) from exc
            tally("correlation", ev.correlation)
            tally("disc_view1", ev.disc1)
            tally("disc_view2", ev.disc2)
            tally("batch_objective", ev.objective_with(lam))
            n_batches += 1

        if not net1.all_finite() or (net2 is not None and not net2.all_finite()):
            raise NonFiniteGradientError(f"non-finite parameters after epoch {epoch}")

        penalty = net1.squared_weight_norm()
        if net2 is not None:
            penalty += net2.squared_weight_norm()
        record = {key: sums[key] / counts[key] for key in sums if key != "batch_objective"}
        record["objective"] = sums["batch_objective"] / max(n_batches, 1) - config.alpha * penalty
        record["weight_norm_sq"] = penalty
        history.append(record)

    model = CoupledModel(
        config=config,
        net1=net1,
        net2=net2,
        train_labeled_count=labeled_count,
        dataset_name=getattr(data, "name", ""),
    )
    return model, history


def project(model, X, view=1):
    """Map samples (one per column) of the given view through its network."""
    if view == 1:
        net = model.net1
    elif view == 2:
        net = model.net2
        if net is None:
            raise ConfigError("this model was trained on the primary view only")
    else:
        raise ConfigError(f"view must be 1 or 2, got {view!r}")
    Z, _ = forward(net, np.asarray(X, dtype=np.float64))
    return Z
