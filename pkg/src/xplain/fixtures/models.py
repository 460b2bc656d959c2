"""Reference models with analytic gradients, plus random generators for them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from xplain.core import (
    CONCURRENT_SAFE,
    GRADIENT,
    LOGITS,
    PARAMETERS,
    REPRESENTATION,
    InvalidInputError,
    Model,
    as_vector,
)

ACTIVATIONS = ("relu", "softplus", "identity")


def _activate(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return np.maximum(z, 0.0)
    if act == "softplus":
        return np.logaddexp(0.0, z)
    return z


def _activate_grad(z: np.ndarray, act: str) -> np.ndarray:
    if act == "relu":
        return (z > 0).astype(float)
    if act == "softplus":
        # derivative of softplus is the logistic sigmoid
        return 0.5 * (1.0 + np.tanh(0.5 * z))
    return np.ones_like(z)


def init_layer(rng: np.random.Generator, fan_out: int, fan_in: int, bias: bool = True):
    """Fixture initializer: weights ~ N(0, 1/fan_in), biases ~ N(0, 0.1^2) or zero."""
    W = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
    b = rng.normal(0.0, 0.1, size=fan_out) if bias else np.zeros(fan_out)
    return W, b


class LinearModel(Model):
    """``f(x) = w.x + b``; classifies by ``f(x) > threshold``."""

    capabilities = frozenset({GRADIENT, PARAMETERS, CONCURRENT_SAFE})

    def __init__(self, weights, bias: float = 0.0, threshold: float = 0.0):
        self.w = as_vector(weights, name="weights")
        self.b = float(bias)
        self.threshold = float(threshold)
        self.dim = self.w.shape[0]

    def predict(self, x) -> float:
        return float(self.w @ as_vector(x, self.dim) + self.b)

    def predict_batch(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.w + self.b

    def gradient(self, x) -> np.ndarray:
        as_vector(x, self.dim)
        return self.w.copy()

    def parameter_layers(self):
        return [(self.w[None, :].copy(), np.array([self.b]))]

    def with_parameter_layers(self, layers):
        (W, b), = layers
        return LinearModel(W[0], float(b[0]), self.threshold)

    def to_spec(self) -> dict:
        return {"type": "linear", "weights": self.w.tolist(), "bias": self.b,
                "threshold": self.threshold}

    def __repr__(self):
        return f"LinearModel(w={self.w.tolist()}, b={self.b})"


class LogisticModel(Model):
    """Binary logistic regression; ``predict`` is the positive-class probability."""

    capabilities = frozenset({GRADIENT, PARAMETERS, CONCURRENT_SAFE})
    threshold = 0.5

    def __init__(self, weights, bias: float = 0.0):
        self.w = as_vector(weights, name="weights")
        self.b = float(bias)
        self.dim = self.w.shape[0]

    def predict(self, x) -> float:
        return float(_sigmoid(self.w @ as_vector(x, self.dim) + self.b))

    def predict_batch(self, X) -> np.ndarray:
        return _sigmoid(np.atleast_2d(np.asarray(X, dtype=float)) @ self.w + self.b)

    def gradient(self, x) -> np.ndarray:
        p = self.predict(x)
        return p * (1.0 - p) * self.w

    def parameter_layers(self):
        return [(self.w[None, :].copy(), np.array([self.b]))]

    def with_parameter_layers(self, layers):
        (W, b), = layers
        return LogisticModel(W[0], float(b[0]))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


@dataclass(frozen=True)
class Layer:
    W: np.ndarray
    b: np.ndarray
    act: str = "relu"


class TinyMLP(Model):
    """Small fully connected network with analytic forward and backward passes.

    ``layers`` is a list of ``(W, b, act)`` with ``W`` shaped ``(out, in)``.
    The last layer produces the logits; ``output`` selects which logit is the
    scalar prediction. ``representation`` returns the post-activation of
    hidden layer ``representation_layer``.
    """

    capabilities = frozenset({GRADIENT, REPRESENTATION, LOGITS, PARAMETERS, CONCURRENT_SAFE})

    def __init__(self, layers, output: int = 0, representation_layer: int = 0,
                 threshold: float = 0.0):
        built = []
        for item in layers:
            if isinstance(item, Layer):
                W, b, act = item.W, item.b, item.act
            else:
                W, b, act = item
            W = np.array(W, dtype=float)
            b = np.array(b, dtype=float)
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise InvalidInputError("each layer needs W of shape (out, in) and b of shape (out,)")
            if act not in ACTIVATIONS:
                raise InvalidInputError(f"unknown activation {act!r}")
            if built and built[-1].W.shape[0] != W.shape[1]:
                raise InvalidInputError("consecutive layer shapes do not chain")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise InvalidInputError("layer parameters contain NaN or Inf")
            W.setflags(write=False)
            b.setflags(write=False)
            built.append(Layer(W, b, act))
        if not built:
            raise InvalidInputError("TinyMLP needs at least one layer")
        self.layers = tuple(built)
        self.dim = built[0].W.shape[1]
        if not 0 <= output < built[-1].W.shape[0]:
            raise InvalidInputError(f"output index {output} out of range")
        self.output = output
        n_hidden = len(built) - 1
        if n_hidden and not 0 <= representation_layer < n_hidden:
            raise InvalidInputError("representation_layer must index a hidden layer")
        self.representation_layer = representation_layer
        self.threshold = float(threshold)

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].W.shape[0]

    @property
    def has_bias(self) -> bool:
        return any(np.any(layer.b != 0) for layer in self.layers)

    def forward(self, x):
        """Return the pre-activations and activations of every layer, input first."""
        a = as_vector(x, self.dim)
        acts, pres = [a], []
        for layer in self.layers:
            z = layer.W @ a + layer.b
            a = _activate(z, layer.act)
            pres.append(z)
            acts.append(a)
        return pres, acts

    def logits(self, x) -> np.ndarray:
        return self.forward(x)[1][-1]

    def logits_batch(self, X) -> np.ndarray:
        A = np.atleast_2d(np.asarray(X, dtype=float))
        for layer in self.layers:
            A = _activate(A @ layer.W.T + layer.b, layer.act)
        return A

    def predict(self, x) -> float:
        return float(self.logits(x)[self.output])

    def predict_batch(self, X) -> np.ndarray:
        return self.logits_batch(X)[:, self.output]

    def logit_gradient(self, x, index: int) -> np.ndarray:
        pres, _ = self.forward(x)
        delta = np.zeros(self.n_outputs)
        delta[index] = 1.0
        for layer, z in zip(reversed(self.layers), reversed(pres)):
            delta = layer.W.T @ (delta * _activate_grad(z, layer.act))
        return delta

    def gradient(self, x) -> np.ndarray:
        return self.logit_gradient(x, self.output)

    def representation(self, x) -> np.ndarray:
        if len(self.layers) == 1:
            return self.logits(x)
        return self.forward(x)[1][self.representation_layer + 1]

    def select_output(self, index: int) -> "TinyMLP":
        return TinyMLP(self.layers, index, self.representation_layer, self.threshold)

    def parameter_layers(self):
        return [(layer.W.copy(), layer.b.copy()) for layer in self.layers]

    def with_parameter_layers(self, params):
        layers = [(W, b, layer.act) for (W, b), layer in zip(params, self.layers)]
        return TinyMLP(layers, self.output, self.representation_layer, self.threshold)

    def to_spec(self) -> dict:
        return {"type": "mlp", "output": self.output,
                "layers": [{"w": l.W.tolist(), "b": l.b.tolist(), "act": l.act} for l in self.layers]}


@dataclass(frozen=True)
class Predicate:
    """Single condition ``x[feature] op value``; ``feature`` is an index or column name."""

    feature: int | str
    op: str
    value: object

    OPS = ("<", "<=", "=", ">=", ">")

    def __post_init__(self):
        op = {"≤": "<=", "≥": ">=", "==": "="}.get(self.op, self.op)
        if op not in self.OPS:
            raise InvalidInputError(f"unknown operator {self.op!r}")
        object.__setattr__(self, "op", op)

    def holds(self, x: np.ndarray, index: int) -> bool:
        v = x[index]
        t = float(self.value)
        if self.op == "<":
            return v < t
        if self.op == "<=":
            return v <= t
        if self.op == "=":
            return v == t
        if self.op == ">=":
            return v >= t
        return v > t

    def as_tuple(self):
        return (self.feature, self.op, self.value)


@dataclass(frozen=True)
class Rule:
    outer: tuple
    inner: tuple
    cls: int

    def __post_init__(self):
        outer = tuple(_predicate(p) for p in self.outer)
        inner = tuple(_predicate(p) for p in self.inner)
        if not outer or not inner:
            raise InvalidInputError("decision-set rules need non-empty outer and inner conditions")
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "inner", inner)
        object.__setattr__(self, "cls", int(self.cls))


def _predicate(p) -> Predicate:
    if isinstance(p, Predicate):
        return p
    if isinstance(p, dict):
        return Predicate(p["feature"], p["op"], p["value"])
    feature, op, value = p
    return Predicate(feature, op, value)


class TwoLevelDecisionSet(Model):
    """Nested if-then rules ``if outer then (if inner then class)``.

    The prediction is the class of the first rule (in list order) whose outer
    and inner conditions both hold, else ``default_class``.
    """

    capabilities = frozenset({CONCURRENT_SAFE})

    def __init__(self, rules, default_class: int = 0, feature_names: Sequence[str] | None = None,
                 dim: int | None = None):
        self.rules = tuple(r if isinstance(r, Rule) else _rule(r) for r in rules)
        self.default_class = int(default_class)
        self.feature_names = list(feature_names) if feature_names is not None else None
        used = [p.feature for r in self.rules for p in r.outer + r.inner]
        if dim is None:
            if self.feature_names is not None:
                dim = len(self.feature_names)
            else:
                ints = [f for f in used if isinstance(f, (int, np.integer))]
                dim = max(ints) + 1 if ints else 0
        self.dim = int(dim)

    def _index(self, feature) -> int:
        if isinstance(feature, (int, np.integer)):
            idx = int(feature)
        elif self.feature_names is not None and feature in self.feature_names:
            idx = self.feature_names.index(feature)
        else:
            raise InvalidInputError(f"cannot resolve feature {feature!r} to a column")
        if not 0 <= idx < self.dim:
            raise InvalidInputError(f"feature index {idx} out of range")
        return idx

    def _holds(self, cond, x) -> bool:
        return all(p.holds(x, self._index(p.feature)) for p in cond)

    def predict(self, x) -> float:
        x = as_vector(x, self.dim)
        for rule in self.rules:
            if self._holds(rule.outer, x) and self._holds(rule.inner, x):
                return float(rule.cls)
        return float(self.default_class)

    def classify(self, x) -> int:
        return int(self.predict(x))

    def classes(self) -> list[int]:
        return sorted({r.cls for r in self.rules})


def _rule(r) -> Rule:
    if isinstance(r, dict):
        return Rule(tuple(r["outer"]), tuple(r["inner"]), r["class"])
    outer, inner, cls = r
    return Rule(tuple(outer), tuple(inner), cls)


class ConceptToy(Model):
    """Linear concept bottleneck ``f(x) = head(H x)``.

    ``head`` is a C-vector (scalar output, thresholded for classes) or an
    ``(n_classes, C)`` matrix whose argmax is the class.
    """

    capabilities = frozenset({GRADIENT, CONCURRENT_SAFE})

    def __init__(self, h, head, threshold: float = 0.0):
        self.H = np.array(h, dtype=float)
        if self.H.ndim != 2:
            raise InvalidInputError("concept map must be a (C, K) matrix")
        self.head = np.array(head, dtype=float)
        if self.head.shape[-1] != self.H.shape[0] or self.head.ndim not in (1, 2):
            raise InvalidInputError("head does not match the number of concepts")
        self.dim = self.H.shape[1]
        self.threshold = float(threshold)

    @property
    def n_outputs(self) -> int:
        return 1 if self.head.ndim == 1 else self.head.shape[0]

    def concepts(self, x) -> np.ndarray:
        return self.H @ as_vector(x, self.dim)

    def concepts_batch(self, X) -> np.ndarray:
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.H.T

    def predict(self, x) -> float:
        out = self.head @ self.concepts(x)
        return float(out if self.head.ndim == 1 else out[0])

    def gradient(self, x) -> np.ndarray:
        as_vector(x, self.dim)
        head = self.head if self.head.ndim == 1 else self.head[0]
        return self.H.T @ head

    def classify(self, x) -> int:
        out = self.head @ self.concepts(x)
        if self.head.ndim == 2:
            return int(np.argmax(out))
        return int(out > self.threshold)


# ---------------------------------------------------------------------------
# Random fixture generators
# ---------------------------------------------------------------------------


def lin3() -> LinearModel:
    """The running three-feature example ``f(x) = 2 x1 + x2``."""
    return LinearModel([2.0, 1.0, 0.0], 0.0)


def random_linear(rng: np.random.Generator, dim: int, bias: bool = True) -> LinearModel:
    w = rng.normal(size=dim)
    return LinearModel(w, float(rng.normal()) if bias else 0.0)


def random_mlp(rng: np.random.Generator, sizes: Sequence[int], act: str = "relu",
               bias: bool = True, output: int = 0) -> TinyMLP:
    """Random network with layer widths ``sizes`` (input first); the last layer is linear."""
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        W, b = init_layer(rng, fan_out, fan_in, bias)
        last = i == len(sizes) - 2
        layers.append((W, b, "identity" if last else act))
    return TinyMLP(layers, output=output)


def randomize_parameters(model: Model, mode: str = "all", layer: int | None = None,
                         seed: int = 0) -> Model:
    """Copy of ``model`` with selected layers re-drawn from the fixture initializer.

    ``mode`` is ``all``, ``layer`` (only ``layer``) or ``progressive``
    (``layer`` and every layer above it, top-down cascade).
    """
    model.require(PARAMETERS)
    params = model.parameter_layers()
    n = len(params)
    if mode == "all":
        chosen = range(n)
    elif mode in ("layer", "progressive"):
        if layer is None:
            raise InvalidInputError(f"mode {mode!r} needs a layer index")
        idx = layer + n if layer < 0 else layer
        if not 0 <= idx < n:
            raise InvalidInputError(f"layer index {layer} out of range for {n} layers")
        chosen = [idx] if mode == "layer" else range(idx, n)
    else:
        raise InvalidInputError(f"unknown randomization mode {mode!r}")
    rng = np.random.default_rng(seed)
    new = [(W.copy(), b.copy()) for W, b in params]
    for i in chosen:
        W, b = params[i]
        new[i] = init_layer(rng, W.shape[0], W.shape[1], bias=bool(np.any(b != 0)))
    return model.with_parameter_layers(new)
