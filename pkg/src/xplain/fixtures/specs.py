"""JSON model descriptions: build fixture models from plain dictionaries."""

from __future__ import annotations

import json
from pathlib import Path

from xplain.core import InvalidInputError, Model
from xplain.fixtures.models import ConceptToy, LinearModel, TinyMLP, TwoLevelDecisionSet


def model_from_spec(spec: dict) -> Model:
    """Build a model from ``{"type": linear | mlp | decision_set | concept, ...}``."""
    if not isinstance(spec, dict) or "type" not in spec:
        raise InvalidInputError("model spec must be an object with a 'type' field")
    kind = spec["type"]
    try:
        if kind == "linear":
            return LinearModel(spec["weights"], spec.get("bias", 0.0), spec.get("threshold", 0.0))
        if kind == "mlp":
            layers = [(l["w"], l["b"], l.get("act", "relu")) for l in spec["layers"]]
            return TinyMLP(layers, output=spec.get("output", 0),
                           representation_layer=spec.get("representation_layer", 0),
                           threshold=spec.get("threshold", 0.0))
        if kind == "decision_set":
            return TwoLevelDecisionSet(spec["rules"], spec.get("default_class", 0),
                                       spec.get("feature_names"), spec.get("dim"))
        if kind == "concept":
            return ConceptToy(spec["h"], spec["head"], spec.get("threshold", 0.0))
    except KeyError as exc:
        raise InvalidInputError(f"{kind} model spec is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed {kind} model spec: {exc}") from None
    raise InvalidInputError(f"unknown model type {kind!r}")


def load_model(path) -> Model:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"model spec {path} is not valid JSON: {exc}") from None
    return model_from_spec(spec)
