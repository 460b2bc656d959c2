"""Complexity of attributions, coefficient explanations and decision sets."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from xplain.core import (
    Dataset,
    InvalidInputError,
    Model,
    UndefinedMetricError,
    as_vector,
    rank_features,
    resolve_attribution,
)
from xplain.fixtures.models import ConceptToy, TwoLevelDecisionSet


@dataclass
class EffectiveComplexityResult:
    k: int
    losses: list
    attained: bool

    def __int__(self):
        return self.k


def effective_complexity(explainer, model: Model, x, dataset: Dataset, eps: float,
                         n: int = 100, seed: int = 0, loss: str = "squared",
                         absolute: bool = False) -> EffectiveComplexityResult:
    """Smallest ``k`` such that keeping the top-``k`` features and redrawing the rest
    from their empirical marginals changes the output by less than ``eps`` on average.

    The same random draws are reused for every ``k``. When no ``k`` qualifies
    the result is ``K`` with ``attained`` False.
    """
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    x = as_vector(x, model.dim)
    e = resolve_attribution(explainer, model, x)
    order = rank_features(np.abs(e) if absolute else e)
    k_all = model.dim
    rng = np.random.default_rng(seed)
    draws = np.column_stack([rng.choice(dataset.rows[:, i], size=n, replace=True)
                             for i in range(k_all)])
    fx = model.predict(x)
    losses = []
    for k in range(k_all + 1):
        X = draws.copy()
        X[:, order[:k]] = x[order[:k]]
        out = model.predict_batch(X)
        d = np.abs(out - fx) if loss == "absolute" else (out - fx) ** 2
        if loss not in ("squared", "absolute"):
            raise InvalidInputError(f"unknown loss {loss!r}")
        losses.append(float(np.mean(d)))
    for k, v in enumerate(losses):
        if v < eps:
            return EffectiveComplexityResult(k, losses, True)
    return EffectiveComplexityResult(k_all, losses, False)


def fractional_contributions(explanation) -> np.ndarray:
    e = np.abs(as_vector(explanation, name="attribution"))
    total = e.sum()
    if total == 0:
        raise UndefinedMetricError("fractional contributions of a zero explanation are undefined")
    return e / total


def entropy_complexity(explanation) -> float:
    """Entropy of the fractional contributions ``|E_i| / sum |E|``, with 0 ln 0 = 0."""
    p = fractional_contributions(explanation)
    nz = p[p > 0]
    h = float(-np.sum(nz * np.log(nz)))
    # the true value lies in [0, ln K]; clamp rounding at either end
    return min(max(h, 0.0), math.log(len(p))) + 0.0


def sparsity(explanation, tau: float = 0.0) -> int:
    """Number of entries with magnitude above ``tau``."""
    if tau < 0:
        raise InvalidInputError("tau must be >= 0")
    e = as_vector(explanation, name="attribution")
    return int(np.sum(np.abs(e) > tau))


def concept_jacobian(h, x, step: float = 1e-5) -> np.ndarray:
    """Jacobian (C x K) of the concept map: exact for matrices, central differences for callables."""
    x = as_vector(x)
    if isinstance(h, str):
        if h != "identity":
            raise InvalidInputError(f"unknown concept map {h!r}")
        return np.eye(len(x))
    if isinstance(h, ConceptToy):
        return h.H.copy()
    if not callable(h):
        H = np.asarray(h, dtype=float)
        if H.ndim != 2 or H.shape[1] != len(x):
            raise InvalidInputError("concept matrix must have shape (C, K)")
        return H
    cols = []
    for k in range(len(x)):
        d = np.zeros(len(x))
        d[k] = step
        cols.append((np.asarray(h(x + d), dtype=float) - np.asarray(h(x - d), dtype=float)) / (2 * step))
    return np.column_stack(cols)


def senn_instability(model: Model, coefficients, h, x, step: float = 1e-5) -> float:
    """``|grad f(x) - J_h(x)^T theta(x)|`` for coefficients ``theta = coefficients(model, x)``."""
    model.require("gradient")
    x = as_vector(x, model.dim)
    J = concept_jacobian(h, x, step)
    theta = coefficients(model, x) if callable(coefficients) else coefficients
    theta = as_vector(theta, J.shape[0], "coefficients")
    return float(np.linalg.norm(np.asarray(model.gradient(x)) - J.T @ theta))


@dataclass
class RuleComplexityReport:
    size: int
    max_width: int
    num_preds: int
    num_dsets: int
    feature_overlap: int
    cognitive_chunks: int

    def to_dict(self) -> dict:
        return asdict(self)


def rule_complexity(decision_set: TwoLevelDecisionSet) -> RuleComplexityReport:
    """Counting metrics of a two-level decision set.

    Width counts predicates. Feature overlap adds up, per rule, the features
    shared by its outer and inner condition. Cognitive chunks are distinct
    predicates across the set.
    """
    rules = decision_set.rules
    if not rules:
        raise InvalidInputError("decision set has no rules")
    conditions = [c for r in rules for c in (r.outer, r.inner)]
    outers = {frozenset(p.as_tuple() for p in r.outer) for r in rules}
    overlap = sum(len({p.feature for p in r.outer} & {p.feature for p in r.inner}) for r in rules)
    chunks = {p.as_tuple() for c in conditions for p in c}
    return RuleComplexityReport(
        size=len(rules),
        max_width=max(len(c) for c in conditions),
        num_preds=sum(len(c) for c in conditions),
        num_dsets=len(outers),
        feature_overlap=overlap,
        cognitive_chunks=len(chunks),
    )
