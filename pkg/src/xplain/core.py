"""Shared domain types, masking and ranking conventions.

Feature indices are 0-based throughout the package. An attribution
explanation is a plain 1-D float array of length ``K``; the other
explanation variants (surrogates, decision sets, example sets, concept
models) are small classes defined here or in :mod:`xplain.fixtures`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np


class XplainError(Exception):
    """Base class for all errors raised by the package."""


class InvalidInputError(XplainError, ValueError):
    pass


class UnsupportedCapabilityError(XplainError):
    pass


class DegenerateSampleError(XplainError):
    pass


class ResourceLimitError(XplainError):
    pass


class NumericError(XplainError, ArithmeticError):
    pass


class UndefinedMetricError(XplainError, ValueError):
    """The metric has no defined value for the given arguments."""


class UndefinedDirectionError(UndefinedMetricError):
    """A direction-based measure was asked about a zero vector."""


class ZeroVarianceWarning(UserWarning):
    """A correlation was requested on a series without variance."""


class DegenerateExplanationWarning(UserWarning):
    pass


def as_vector(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise InvalidInputError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf")
    return arr


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------

GRADIENT = "gradient"
REPRESENTATION = "representation"
LOGITS = "logits"
PARAMETERS = "parameters"
CONCURRENT_SAFE = "concurrent-safe"


class Model:
    """Evaluable predictor over flat ``K``-vectors.

    Subclasses implement :meth:`predict` and whichever optional hooks their
    ``capabilities`` advertise. ``predict`` returns a scalar; multi-output
    models expose the full output vector through :meth:`logits` and pick the
    scalar output with :meth:`select_output`.
    """

    dim: int
    capabilities: frozenset = frozenset()
    #: ``classify`` thresholds scalar outputs at this value.
    threshold: float = 0.0

    def predict(self, x) -> float:
        raise NotImplementedError

    def __call__(self, x) -> float:
        return self.predict(x)

    def predict_batch(self, X) -> np.ndarray:
        """Predictions for each row of ``X``; fixtures override this with a vectorized pass."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([self.predict(row) for row in X], dtype=float)

    def has(self, capability: str) -> bool:
        return capability in self.capabilities

    def require(self, capability: str) -> None:
        if capability not in self.capabilities:
            raise UnsupportedCapabilityError(
                f"{type(self).__name__} does not provide {capability!r}"
            )

    def gradient(self, x) -> np.ndarray:
        self.require(GRADIENT)
        raise NotImplementedError

    def representation(self, x) -> np.ndarray:
        self.require(REPRESENTATION)
        raise NotImplementedError

    def logits(self, x) -> np.ndarray:
        self.require(LOGITS)
        raise NotImplementedError

    @property
    def n_outputs(self) -> int:
        return 1

    def classify(self, x) -> int:
        """Class decision: argmax over logits for multi-output models, else a threshold test."""
        if self.has(LOGITS) and self.n_outputs > 1:
            return int(np.argmax(self.logits(x)))
        return int(self.predict(x) > self.threshold)

    def select_output(self, index: int) -> "Model":
        """View of this model whose scalar output is logit ``index``."""
        if index == getattr(self, "output", 0) and self.n_outputs == 1:
            return self
        return OutputSelector(self, index)


class OutputSelector(Model):
    """Expose one logit of a multi-output model as the scalar prediction."""

    def __init__(self, base: Model, index: int):
        base.require(LOGITS)
        if not 0 <= index < base.n_outputs:
            raise InvalidInputError(
                f"logit index {index} out of range for {base.n_outputs} outputs"
            )
        self.base = base
        self.index = index
        self.dim = base.dim
        self.capabilities = base.capabilities

    def predict(self, x) -> float:
        return float(self.base.logits(x)[self.index])

    def predict_batch(self, X) -> np.ndarray:
        if hasattr(self.base, "logits_batch"):
            return self.base.logits_batch(X)[:, self.index]
        return super().predict_batch(X)

    def gradient(self, x) -> np.ndarray:
        return self.base.logit_gradient(x, self.index)

    def representation(self, x) -> np.ndarray:
        return self.base.representation(x)

    def logits(self, x) -> np.ndarray:
        return self.base.logits(x)

    @property
    def n_outputs(self) -> int:
        return self.base.n_outputs

    def classify(self, x) -> int:
        return self.base.classify(x)


class FunctionModel(Model):
    """Wrap a plain callable (and optionally its gradient) as a :class:`Model`."""

    def __init__(self, fn, dim: int, gradient=None, threshold: float = 0.0):
        self.fn = fn
        self.dim = dim
        self._grad = gradient
        self.threshold = threshold
        caps = {CONCURRENT_SAFE}
        if gradient is not None:
            caps.add(GRADIENT)
        self.capabilities = frozenset(caps)

    def predict(self, x) -> float:
        return float(self.fn(as_vector(x, self.dim)))

    def gradient(self, x) -> np.ndarray:
        self.require(GRADIENT)
        return np.asarray(self._grad(as_vector(x, self.dim)), dtype=float)


# ---------------------------------------------------------------------------
# Data
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Rows of a tabular dataset with optional labels and group column."""

    rows: np.ndarray
    labels: np.ndarray | None = None
    groups: np.ndarray | None = None
    names: list[str] | None = None
    protected: frozenset[int] = frozenset()

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise InvalidInputError(f"dataset rows must be a 2-D matrix, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise InvalidInputError("dataset contains NaN or Inf")
        self.rows = rows
        n, k = rows.shape
        if self.labels is not None:
            self.labels = np.asarray(self.labels)
            if self.labels.shape != (n,):
                raise InvalidInputError("labels must have one entry per row")
        if self.groups is not None:
            self.groups = np.asarray(self.groups)
            if self.groups.shape != (n,):
                raise InvalidInputError("groups must have one entry per row")
        if self.names is None:
            self.names = [f"x{i}" for i in range(k)]
        elif len(self.names) != k:
            raise InvalidInputError("one column name per feature is required")
        self.protected = frozenset(int(i) for i in self.protected)
        if any(not 0 <= i < k for i in self.protected):
            raise InvalidInputError("protected column index out of range")

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]

    def column(self, name_or_index) -> int:
        if isinstance(name_or_index, (int, np.integer)):
            idx = int(name_or_index)
            if not 0 <= idx < self.dim:
                raise InvalidInputError(f"column index {idx} out of range")
            return idx
        try:
            return self.names.index(name_or_index)
        except ValueError:
            raise InvalidInputError(f"unknown column {name_or_index!r}") from None

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask)
        return Dataset(
            self.rows[mask],
            None if self.labels is None else self.labels[mask],
            None if self.groups is None else self.groups[mask],
            list(self.names),
            self.protected,
        )

    def group_values(self) -> list:
        if self.groups is None:
            raise InvalidInputError("dataset has no group column")
        return sorted(set(self.groups.tolist()), key=str)


@dataclass(frozen=True)
class BaselineSpec:
    """How the "feature absent" reference input is chosen.

    ``kind`` is one of ``zero``, ``constant``, ``mean`` or ``custom``.
    """

    kind: str = "zero"
    value: Any = None

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "mean", "custom"):
            raise InvalidInputError(f"unknown baseline kind {self.kind!r}")

    def resolve(self, dim: int, dataset: Dataset | None = None) -> np.ndarray:
        if self.kind == "zero":
            return np.zeros(dim)
        if self.kind == "constant":
            return np.full(dim, float(self.value))
        if self.kind == "mean":
            if dataset is None:
                raise InvalidInputError("a dataset is required for the mean baseline")
            return as_vector(dataset.rows.mean(axis=0), dim, "baseline")
        if self.kind == "custom":
            return as_vector(self.value, dim, "baseline")
        raise InvalidInputError(f"unknown baseline kind {self.kind!r}")

    @classmethod
    def parse(cls, spec) -> "BaselineSpec":
        """Accept ``None``, a kind name, a number, a vector or ``{"kind": ..., "value": ...}``."""
        if spec is None:
            return cls()
        if isinstance(spec, BaselineSpec):
            return spec
        if isinstance(spec, str):
            if spec not in ("zero", "mean"):
                raise InvalidInputError(f"unknown baseline {spec!r}")
            return cls(spec)
        if isinstance(spec, (int, float)):
            return cls("constant", float(spec))
        if isinstance(spec, dict):
            return cls(spec.get("kind", "custom"), spec.get("value"))
        return cls("custom", tuple(float(v) for v in spec))


def resolve_baseline(baseline, dim: int, dataset: Dataset | None = None) -> np.ndarray:
    """Turn any accepted baseline description into a ``dim``-vector (zero by default)."""
    if isinstance(baseline, np.ndarray):
        return as_vector(baseline, dim, "baseline")
    return BaselineSpec.parse(baseline).resolve(dim, dataset)


# ---------------------------------------------------------------------------
# Subsets, masking and ranking
# ---------------------------------------------------------------------------


def feature_subset(indices: Iterable[int], dim: int) -> tuple[int, ...]:
    """Validate a feature subset and return it as a sorted tuple."""
    idx = [int(i) for i in indices]
    if len(set(idx)) != len(idx):
        raise InvalidInputError(f"duplicate feature indices in {idx}")
    for i in idx:
        if not 0 <= i < dim:
            raise InvalidInputError(f"feature index {i} out of range for K={dim}")
    return tuple(sorted(idx))


def complement(subset: Iterable[int], dim: int) -> tuple[int, ...]:
    keep = set(subset)
    return tuple(i for i in range(dim) if i not in keep)


def mask_retain(x, subset: Iterable[int], baseline=None) -> np.ndarray:
    """Keep the features in ``subset`` and revert every other feature to the baseline.

    Passing the complement subset yields the "discard" form.
    """
    x = as_vector(x)
    base = resolve_baseline(baseline, x.shape[0])
    idx = list(feature_subset(subset, x.shape[0]))
    out = base.copy()
    out[idx] = x[idx]
    return out


def mask_discard(x, subset: Iterable[int], baseline=None) -> np.ndarray:
    x = as_vector(x)
    return mask_retain(x, complement(feature_subset(subset, x.shape[0]), x.shape[0]), baseline)


def rank_features(attribution) -> list[int]:
    """Feature indices ordered from largest to smallest weight; ties by ascending index."""
    e = np.asarray(attribution, dtype=float)
    if e.ndim != 1:
        raise InvalidInputError("attribution must be a 1-D vector")
    if np.any(np.isnan(e)):
        raise InvalidInputError("attribution contains NaN")
    # stable sort on the negated weights keeps ascending index among ties
    return [int(i) for i in np.argsort(-e, kind="stable")]


def proportion_count(s: float, dim: int) -> int:
    """Number of retained features ``ceil(s * K)`` for a retention proportion ``s``."""
    if not 0.0 <= s <= 1.0 or math.isnan(s):
        raise InvalidInputError(f"retention proportion must lie in [0, 1], got {s}")
    # guard against s*K landing a hair above an integer, e.g. (1/3)*3
    return min(dim, math.ceil(s * dim - 1e-9))


def top_proportion_subset(attribution, s: float) -> tuple[int, ...]:
    e = as_vector(attribution, name="attribution")
    k = proportion_count(s, e.shape[0])
    return tuple(rank_features(e)[:k])


def top_k_subset(attribution, k: int) -> tuple[int, ...]:
    e = as_vector(attribution, name="attribution")
    if not 0 <= k <= e.shape[0]:
        raise InvalidInputError(f"k={k} outside 0..{e.shape[0]}")
    return tuple(rank_features(e)[:k])


# ---------------------------------------------------------------------------
# Non-attribution explanation variants
# ---------------------------------------------------------------------------


class Surrogate(Model):
    """Linear function-based explanation ``intercept + coef . x``."""

    def __init__(self, coef, intercept: float = 0.0, *, info: dict | None = None):
        self.coef = as_vector(coef, name="coef")
        self.intercept = float(intercept)
        self.dim = self.coef.shape[0]
        self.info = info or {}
        self.capabilities = frozenset({GRADIENT, CONCURRENT_SAFE})

    def predict(self, x) -> float:
        return float(self.coef @ as_vector(x, self.dim) + self.intercept)

    def predict_batch(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.coef + self.intercept

    def gradient(self, x) -> np.ndarray:
        return self.coef.copy()

    def __repr__(self):
        return f"Surrogate(coef={self.coef.tolist()}, intercept={self.intercept})"


@dataclass(frozen=True)
class ExampleSet:
    """Exemplar explanation: row indices into a dataset."""

    indices: tuple[int, ...]

    def rows(self, dataset: Dataset) -> np.ndarray:
        n = len(dataset)
        for i in self.indices:
            if not 0 <= i < n:
                raise InvalidInputError(f"example index {i} is not a dataset row")
        return dataset.rows[list(self.indices)]


def resolve_attribution(explanation, model: Model, x) -> np.ndarray:
    """Accept either an attribution vector or an explainer ``(model, x) -> vector``."""
    if callable(explanation):
        explanation = explanation(model, x)
    return as_vector(explanation, model.dim, "attribution")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------


@dataclass
class MetricReport:
    name: str
    params: dict = field(default_factory=dict)
    value: Any = None
    seed: int | None = None
    n_samples: int | None = None
    estimator: str = "exact"
    warnings: list[str] = field(default_factory=list)
    status: str = "ok"
    error: str | None = None
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "value": _jsonable(self.value),
            "seed": self.seed,
            "n_samples": self.n_samples,
            "estimator": self.estimator,
            "warnings": list(self.warnings),
            "status": self.status,
            "error": self.error,
            "details": _jsonable(self.details),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(
            name=d["name"],
            params=d.get("params", {}),
            value=d.get("value"),
            seed=d.get("seed"),
            n_samples=d.get("n_samples"),
            estimator=d.get("estimator", "exact"),
            warnings=list(d.get("warnings", [])),
            status=d.get("status", "ok"),
            error=d.get("error"),
            details=d.get("details", {}),
        )


def _jsonable(v):
    """Convert numpy values and non-finite floats into JSON-safe Python objects."""
    if isinstance(v, dict):
        return {str(k): _jsonable(val) for k, val in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(val) for val in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(val) for val in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else None
    if hasattr(v, "to_dict"):
        return _jsonable(v.to_dict())
    return v
