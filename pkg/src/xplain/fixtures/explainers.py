"""Reference explainers: gradient family, exact Shapley, LRP and local surrogates.

Every attribution explainer has the signature ``explainer(model, x, **params)``
and returns a K-vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from xplain.core import (
    GRADIENT,
    DegenerateSampleError,
    InvalidInputError,
    Model,
    ResourceLimitError,
    Surrogate,
    UnsupportedCapabilityError,
    Dataset,
    as_vector,
    resolve_baseline,
)
from xplain.fixtures.fitting import lasso_quadratic
from xplain.fixtures.models import TinyMLP

MAX_SHAPLEY_FEATURES = 16


def _shifted_mean(grads: np.ndarray) -> np.ndarray:
    # mean taken relative to the first row: exact when all rows are equal
    return grads[0] + (grads - grads[0]).mean(axis=0)


def explain_gradient(model: Model, x) -> np.ndarray:
    model.require(GRADIENT)
    return np.asarray(model.gradient(as_vector(x, model.dim)), dtype=float)


def explain_input_x_gradient(model: Model, x, baseline=None) -> np.ndarray:
    x = as_vector(x, model.dim)
    x0 = resolve_baseline(baseline, model.dim)
    return explain_gradient(model, x) * (x - x0)


def explain_integrated_gradients(model: Model, x, baseline=None, steps: int = 64) -> np.ndarray:
    """Path integral of the gradient from the baseline to ``x`` by the midpoint rule."""
    model.require(GRADIENT)
    if steps < 1:
        raise InvalidInputError("integrated gradients needs at least one step")
    x = as_vector(x, model.dim)
    x0 = resolve_baseline(baseline, model.dim)
    alphas = (np.arange(steps) + 0.5) / steps
    grads = np.array([model.gradient(x0 + a * (x - x0)) for a in alphas])
    return _shifted_mean(grads) * (x - x0)


def explain_smoothgrad(model: Model, x, sigma: float = 0.1, n: int = 50, seed: int = 0) -> np.ndarray:
    """Average gradient over ``n`` Gaussian-perturbed copies of ``x``."""
    model.require(GRADIENT)
    if n < 1 or sigma < 0:
        raise InvalidInputError("smoothgrad needs n >= 1 and sigma >= 0")
    x = as_vector(x, model.dim)
    noise = np.random.default_rng(seed).normal(0.0, 1.0, size=(n, model.dim)) * sigma
    grads = np.array([model.gradient(x + d) for d in noise])
    return _shifted_mean(grads)


def coalition_values(model: Model, x, baseline=None) -> np.ndarray:
    """``v[mask] = f(x_S)`` for every bitmask coalition ``S`` (bit k set means k retained)."""
    x = as_vector(x, model.dim)
    x0 = resolve_baseline(baseline, model.dim)
    k = model.dim
    masks = np.arange(2 ** k)
    bits = ((masks[:, None] >> np.arange(k)) & 1).astype(bool)
    return model.predict_batch(np.where(bits, x, x0))


def explain_shapley_exact(model: Model, x, baseline=None,
                          max_features: int = MAX_SHAPLEY_FEATURES) -> np.ndarray:
    """Exact Shapley values with absent features set to the baseline."""
    k = model.dim
    if k > max_features:
        raise ResourceLimitError(f"exact Shapley over K={k} features exceeds the bound {max_features}")
    v = coalition_values(model, x, baseline)
    masks = np.arange(2 ** k)
    size = np.array([bin(m).count("1") for m in masks])
    weight = np.array([math.factorial(s) * math.factorial(k - s - 1) / math.factorial(k)
                       for s in range(k)])
    phi = np.empty(k)
    for i in range(k):
        bit = 1 << i
        without = masks[(masks & bit) == 0]
        phi[i] = np.sum(weight[size[without]] * (v[without | bit] - v[without]))
    return phi


@dataclass
class LRPResult:
    attribution: np.ndarray
    relevances: list = field(default_factory=list)  # input layer first, output layer last
    output: float = 0.0


def explain_lrp(model: TinyMLP, x, epsilon: float = 0.0) -> LRPResult:
    """Layer-wise relevance propagation with the z-rule.

    The selected output neuron starts with relevance ``f(x)``. Each neuron's
    relevance is split among its inputs in proportion to ``a_j w_kj``. A
    nonzero ``epsilon`` adds ``epsilon * sign(z)`` to the denominators. Biases
    absorb relevance, so conservation is exact only for bias-free nets.
    """
    if not isinstance(model, TinyMLP):
        raise UnsupportedCapabilityError("LRP is implemented for TinyMLP networks only")
    if any(layer.act not in ("relu", "identity") for layer in model.layers):
        raise UnsupportedCapabilityError("LRP supports relu (and linear) layers only")
    pres, acts = model.forward(x)
    out = acts[-1]
    R = np.zeros_like(out)
    R[model.output] = out[model.output]
    relevances = [R]
    for layer, a, z in zip(reversed(model.layers), reversed(acts[:-1]), reversed(pres)):
        denom = z + epsilon * np.where(z >= 0, 1.0, -1.0)
        ratio = np.divide(R, denom, out=np.zeros_like(R), where=denom != 0)
        R = a * (layer.W.T @ ratio)
        relevances.append(R)
    relevances.reverse()
    return LRPResult(relevances[0], relevances, float(out[model.output]))


def explain_lrp_attribution(model: TinyMLP, x, epsilon: float = 0.0) -> np.ndarray:
    return explain_lrp(model, x, epsilon).attribution


# ---------------------------------------------------------------------------
# Local linear surrogates
# ---------------------------------------------------------------------------


@dataclass
class LocalSample:
    """Gaussian perturbation sample around ``x`` with exponential-kernel weights."""

    x: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    sigma: float
    kernel_width: float
    seed: int

    @property
    def n(self) -> int:
        return self.points.shape[0]


def local_sample(x, sigma: float = 0.5, n: int = 1000, seed: int = 0,
                 kernel_width: float | None = None) -> LocalSample:
    x = as_vector(x)
    if n < 1 or sigma <= 0:
        raise InvalidInputError("local sample needs n >= 1 and sigma > 0")
    k = x.shape[0]
    if kernel_width is None:
        kernel_width = 0.75 * math.sqrt(k) * sigma
    if kernel_width <= 0:
        raise InvalidInputError("kernel width must be positive")
    points = x + sigma * np.random.default_rng(seed).normal(size=(n, k))
    d2 = np.sum((points - x) ** 2, axis=1)
    weights = np.exp(-d2 / kernel_width ** 2)
    return LocalSample(x, points, weights, sigma, kernel_width, seed)


def fit_local_linear(model: Model, x, sigma: float = 0.5, n: int = 1000, seed: int = 0,
                     kernel_width: float | None = None, lambda1: float = 0.0,
                     lambda2: float = 0.0, protected: dict | None = None,
                     sample: LocalSample | None = None) -> Surrogate:
    """Kernel-weighted linear surrogate of ``model`` around ``x``.

    The surrogate passes through ``f(x)`` and its coefficients ``c`` minimize

        sum_i p_i ((x_i - x).c - (f(x_i) - f(x)))^2 + lambda1 |c|_1
            + lambda2 sum_flips ((x_f - x).c - (f(x_f) - f(x)))^2

    where ``p`` are the normalized kernel weights and the flips change one
    protected feature (``protected`` maps feature index to its values).
    """
    x = as_vector(x, model.dim)
    if sample is None:
        sample = local_sample(x, sigma, n, seed, kernel_width)
    elif not np.array_equal(sample.x, x):
        raise InvalidInputError("sample was drawn around a different input")
    k = model.dim
    if sample.n < k + 1:
        raise InvalidInputError(f"local surrogate needs at least K+1={k + 1} samples")
    if lambda1 < 0 or lambda2 < 0:
        raise InvalidInputError("penalty weights must be non-negative")
    fx = model.predict(x)
    p = sample.weights / sample.weights.sum()
    sw = np.sqrt(p)
    A = (sample.points - x) * sw[:, None]
    y = (model.predict_batch(sample.points) - fx) * sw
    flips = []
    if lambda2 > 0 and protected:
        for j, values in sorted(protected.items()):
            for v in values:
                xf = x.copy()
                xf[int(j)] = float(v)
                flips.append(xf)
    if flips:
        F = np.array(flips)
        s2 = math.sqrt(lambda2)
        A = np.vstack([A, (F - x) * s2])
        y = np.concatenate([y, (model.predict_batch(F) - fx) * s2])
    if np.linalg.matrix_rank(A) < k:
        raise DegenerateSampleError("perturbation sample does not span the feature space")
    if lambda1 == 0:
        coef = np.linalg.lstsq(A, y, rcond=None)[0]
    else:
        coef = lasso_quadratic(2.0 * A.T @ A, 2.0 * A.T @ y, lambda1)
    resid = A[: sample.n] @ coef - y[: sample.n]
    info = {
        "infidelity": float(resid @ resid),
        "l1": float(np.abs(coef).sum()),
        "lambda1": lambda1,
        "lambda2": lambda2,
        "sample": sample,
    }
    return Surrogate(coef, fx - coef @ x, info=info)


def explain_lime(model: Model, x, **params) -> np.ndarray:
    return fit_local_linear(model, x, **params).coef


def fit_best_subset_linear(model: Model, dataset: Dataset, size: int) -> Surrogate:
    """Least-squares linear surrogate of ``model`` over the best ``size`` columns.

    Every column subset of the given size is tried; the one with the lowest
    mean squared error against the model outputs wins (first in lexicographic
    order on ties).
    """
    X = dataset.rows
    k = X.shape[1]
    if not 0 <= size <= k:
        raise InvalidInputError(f"subset size {size} outside 0..{k}")
    y = model.predict_batch(X)
    best = None
    for subset in combinations(range(k), size):
        A = np.column_stack([X[:, list(subset)], np.ones(len(X))])
        sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank < A.shape[1]:
            continue
        loss = float(np.mean((A @ sol - y) ** 2))
        if best is None or loss < best[0]:
            best = (loss, subset, sol)
    if best is None:
        raise DegenerateSampleError("no column subset gives a full-rank design")
    loss, subset, sol = best
    coef = np.zeros(k)
    coef[list(subset)] = sol[:-1]
    return Surrogate(coef, sol[-1], info={"subset": list(subset), "loss": loss, "size": size})
