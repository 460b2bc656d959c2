"""Small closed-form and fixed-budget fitting routines used by the fixtures."""

from __future__ import annotations

import numpy as np

from xplain.core import (
    DegenerateSampleError,
    InvalidInputError,
    UnsupportedCapabilityError,
    Dataset,
)
from xplain.fixtures.models import LinearModel, LogisticModel


def least_squares(X: np.ndarray, y: np.ndarray, weights: np.ndarray | None = None,
                  intercept: bool = True):
    """Weighted least squares; returns ``(coef, intercept)``.

    Raises DegenerateSampleError when the design matrix is rank deficient.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([X, np.ones(len(X))]) if intercept else X
    if weights is not None:
        sw = np.sqrt(np.asarray(weights, dtype=float))
        A = A * sw[:, None]
        y = y * sw
    sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise DegenerateSampleError(
            f"design matrix has rank {rank} < {A.shape[1]} columns"
        )
    if intercept:
        return sol[:-1], float(sol[-1])
    return sol, 0.0


def soft_threshold(v: float, t: float) -> float:
    return float(np.sign(v) * max(abs(v) - t, 0.0))


def lasso_quadratic(G: np.ndarray, h: np.ndarray, lam: float, tol: float = 1e-13,
                    max_sweeps: int = 100_000) -> np.ndarray:
    """Minimize ``0.5 c'Gc - h'c + lam*|c|_1`` by cyclic coordinate descent.

    ``G`` must be symmetric positive definite.
    """
    k = len(h)
    c = np.zeros(k)
    diag = np.diag(G)
    if np.any(diag <= 0):
        raise DegenerateSampleError("quadratic form is not positive definite")
    for _ in range(max_sweeps):
        delta = 0.0
        for j in range(k):
            rho = h[j] - G[j] @ c + G[j, j] * c[j]
            new = soft_threshold(rho, lam) / G[j, j]
            delta = max(delta, abs(new - c[j]))
            c[j] = new
        if delta <= tol * max(1.0, np.max(np.abs(c))):
            break
    return c


def fit_softmax(X: np.ndarray, y: np.ndarray, n_classes: int | None = None,
                steps: int = 500, lr: float = 0.5, l2: float = 1e-4):
    """Multinomial logistic regression by full-batch gradient descent.

    Features are standardized internally; the returned ``(W, b)`` act on raw
    inputs, so ``argmax(W x + b)`` is the predicted class.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y).astype(int)
    if n_classes is None:
        n_classes = int(y.max()) + 1
    n, k = X.shape
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y] = 1.0
    W = np.zeros((n_classes, k))
    b = np.zeros(n_classes)
    for _ in range(steps):
        logits = Z @ W.T + b
        logits -= logits.max(axis=1, keepdims=True)
        P = np.exp(logits)
        P /= P.sum(axis=1, keepdims=True)
        G = (P - Y) / n
        W -= lr * (G.T @ Z + l2 * W)
        b -= lr * G.sum(axis=0)
    W_raw = W / sd
    b_raw = b - W_raw @ mu
    return W_raw, b_raw


def fit_linear_model(dataset: Dataset, labels=None) -> LinearModel:
    y = dataset.labels if labels is None else labels
    if y is None:
        raise InvalidInputError("dataset has no labels to fit")
    coef, icpt = least_squares(dataset.rows, np.asarray(y, dtype=float))
    return LinearModel(coef, icpt)


def fit_logistic_model(dataset: Dataset, labels=None, steps: int = 500) -> LogisticModel:
    y = dataset.labels if labels is None else labels
    if y is None:
        raise InvalidInputError("dataset has no labels to fit")
    y = np.asarray(y).astype(int)
    if set(np.unique(y)) - {0, 1}:
        raise InvalidInputError("logistic template expects binary 0/1 labels")
    W, b = fit_softmax(dataset.rows, y, 2, steps=steps)
    return LogisticModel(W[1] - W[0], float(b[1] - b[0]))


def retrain_permuted_labels(template: str, dataset: Dataset, seed: int = 0,
                            permutation=None):
    """Refit ``template`` (``linear`` or ``logistic``) on randomly permuted labels."""
    if dataset.labels is None:
        raise InvalidInputError("dataset has no labels to permute")
    n = len(dataset)
    if permutation is None:
        permutation = np.random.default_rng(seed).permutation(n)
    permutation = np.asarray(permutation, dtype=int)
    if sorted(permutation.tolist()) != list(range(n)):
        raise InvalidInputError("permutation must reorder all dataset rows")
    labels = dataset.labels[permutation]
    if template == "linear":
        return fit_linear_model(dataset, labels)
    if template == "logistic":
        return fit_logistic_model(dataset, labels)
    raise UnsupportedCapabilityError(f"template {template!r} cannot be retrained")
