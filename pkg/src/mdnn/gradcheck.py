"""Finite-difference verification of every analytic gradient in the package.

These suites are the ground truth for gradient correctness: each one compares
an analytic gradient against central finite differences of the corresponding
objective on randomly generated instances, and reports the worst relative
error. The CLI's ``gradcheck`` command and the acceptance tests both run them.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .correlation import correlation_gradient, correlation_value
from .discriminative import discriminability, discriminability_gradient, scatter_stats

# Test hook: a nonzero value here is added to every analytic gradient before
# comparison, so the harness itself can be shown to catch broken gradients.
PERTURB_ENV_VAR = "MDNN_GRADCHECK_PERTURB"

CORRELATION_TOLERANCE = 1e-5
DISCRIMINABILITY_TOLERANCE = 1e-4
NETWORK_TOLERANCE = 1e-3


@dataclass
class GradCheckReport:
    name: str
    tolerance: float
    max_relative_error: float
    n_instances: int
    failed_seeds: list = field(default_factory=list)

    @property
    def passed(self):
        return self.max_relative_error < self.tolerance and not self.failed_seeds

    def summary(self):
        status = "PASS" if self.passed else "FAIL"
        line = (
            f"[{status}] {self.name}: max relative error "
            f"{self.max_relative_error:.3e} (tolerance {self.tolerance:.0e}, "
            f"{self.n_instances} instances)"
        )
        if self.failed_seeds:
            line += f"; failing instance seeds: {self.failed_seeds}"
        return line


def relative_error(analytic, numeric):
    """Worst absolute discrepancy, normalized by the gradient's own scale."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-12)
    return float(np.abs(analytic - numeric).max() / scale)


def central_difference(f, X, h):
    """Entrywise central finite differences of a scalar function of a matrix."""
    X = np.array(X, dtype=np.float64)
    grad = np.zeros_like(X)
    it = np.nditer(X, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = X[idx]
        X[idx] = orig + h
        hi = f(X)
        X[idx] = orig - h
        lo = f(X)
        X[idx] = orig
        grad[idx] = (hi - lo) / (2.0 * h)
    return grad


def _perturbation():
    return float(os.environ.get(PERTURB_ENV_VAR, "0") or 0)


def check_correlation_gradient(n_instances=20, seed=0, h=1e-5, r=1e-3):
    """Verify the correlation gradient on random two-view batches, d<=5, N<=50."""
    worst = 0.0
    failed = []
    perturb = _perturbation()
    for i in range(n_instances):
        rng = np.random.default_rng((seed, i))
        d1 = int(rng.integers(1, 6))
        d2 = int(rng.integers(1, 6))
        n = int(rng.integers(max(d1, d2) + 5, 51))
        Z1 = rng.standard_normal((d1, n))
        Z2 = 0.5 * rng.standard_normal((d2, n))
        if min(d1, d2) <= Z1.shape[0]:  # weak cross-view signal keeps svd well separated
            Z2[: min(d1, d2)] += 0.5 * Z1[: min(d1, d2)]
        _, ctx = correlation_value(Z1, Z2, r)
        dZ1, dZ2 = correlation_gradient(ctx)
        fd1 = central_difference(lambda M: correlation_value(M, Z2, r)[0], Z1, h)
        fd2 = central_difference(lambda M: correlation_value(Z1, M, r)[0], Z2, h)
        err = max(relative_error(dZ1 + perturb, fd1), relative_error(dZ2 + perturb, fd2))
        worst = max(worst, err)
        if err >= CORRELATION_TOLERANCE:
            failed.append((seed, i))
    return GradCheckReport(
        "correlation gradient vs central differences",
        CORRELATION_TOLERANCE,
        worst,
        n_instances,
        failed,
    )


def check_discriminability_gradient(n_instances=20, seed=0, h=1e-5, r=1e-3):
    """Verify the scatter-trace gradient on random labeled batches, |C|<=3."""
    worst = 0.0
    failed = []
    perturb = _perturbation()
    for i in range(n_instances):
        rng = np.random.default_rng((seed, 1000 + i))
        d = int(rng.integers(1, 5))
        k = int(rng.integers(2, 4))
        L = int(rng.integers(max(6, 2 * k), 31))
        y = np.concatenate([np.arange(k), rng.integers(0, k, L - k)])
        Z = rng.standard_normal((d, L)) + y * rng.standard_normal(d)[:, None] * 0.5
        grad = discriminability_gradient(Z, y, r)

        def value(M, y=y, r=r):
            return discriminability(scatter_stats(M, y), r)

        fd = central_difference(value, Z, h)
        err = relative_error(grad + perturb, fd)
        worst = max(worst, err)
        if err >= DISCRIMINABILITY_TOLERANCE:
            failed.append((seed, i))
    return GradCheckReport(
        "scatter-trace gradient vs central differences",
        DISCRIMINABILITY_TOLERANCE,
        worst,
        n_instances,
        failed,
    )


def check_network_gradient(n_params=50, seed=0, h=1e-4, lam=2.0, alpha=1e-3, r=1e-3):
    """Verify backpropagated parameter gradients of the full objective.

    Uses a tiny two-view model (6-5-4 layers into a 3-dim output, batch of 16,
    2 classes) and compares the analytic gradient of
    correlation + lam * (scatter terms) - alpha * ||weights||^2 against
    central differences for a random sample of parameters.
    """
    from .network import TrainConfig, full_objective, init_networks, objective_param_grads

    rng = np.random.default_rng((seed, 2024))
    config = TrainConfig(
        hidden_layers=(5, 4),
        repr_dim=3,
        lam=lam,
        alpha=alpha,
        r=r,
        batch_size=16,
        seed=seed,
        input_dims=(6, 6),
    )
    net1, net2, _ = init_networks(config)
    # Check at a generic point: the zero-bias init leaves rectifier units
    # exactly on their kink, where central differences straddle the
    # non-smoothness and disagree with the (one-sided) analytic gradient.
    for net in (net1, net2):
        for a in net.arrays():
            a += 0.05 * rng.standard_normal(a.shape)
    X1 = rng.standard_normal((6, 16))
    X2 = rng.standard_normal((6, 16))
    y = np.array([0, 1] * 8)

    analytic1, analytic2 = objective_param_grads(config, net1, net2, X1, X2, y)
    arrays = [(net1, analytic1), (net2, analytic2)]

    perturb = _perturbation()
    worst = 0.0
    checked = 0
    while checked < n_params:
        net, grads = arrays[int(rng.integers(0, 2))]
        layer = int(rng.integers(0, len(net.weights)))
        use_bias = bool(rng.integers(0, 2))
        target = net.biases[layer] if use_bias else net.weights[layer]
        grad = grads.biases[layer] if use_bias else grads.weights[layer]
        idx = tuple(int(rng.integers(0, s)) for s in target.shape)
        orig = target[idx]
        target[idx] = orig + h
        hi = full_objective(config, net1, net2, X1, X2, y)
        target[idx] = orig - h
        lo = full_objective(config, net1, net2, X1, X2, y)
        target[idx] = orig
        fd = (hi - lo) / (2.0 * h)
        scale = max(abs(fd), abs(grad[idx]), 1e-6)
        worst = max(worst, abs(grad[idx] + perturb - fd) / scale)
        checked += 1
    failed = [] if worst < NETWORK_TOLERANCE else [(seed, "network")]
    return GradCheckReport(
        "network parameter gradients vs central differences",
        NETWORK_TOLERANCE,
        worst,
        n_params,
        failed,
    )


def run_all(seed=0):
    """Run every gradient-check suite; returns the list of reports."""
    return [
        check_correlation_gradient(seed=seed),
        check_discriminability_gradient(seed=seed),
        check_network_gradient(seed=seed),
    ]
