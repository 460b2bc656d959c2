"""Write the reference fixture suite (datasets, model specs, configs) to a directory."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from xplain.core import Dataset
from xplain.fixtures.models import ConceptToy, TwoLevelDecisionSet, lin3, random_linear, random_mlp
from xplain.io import save_dataset_csv

FIXTURES = ("lin3", "mlp", "decision_set", "concept", "k6")

DECISION_SET_SPEC = {
    "type": "decision_set",
    "feature_names": ["age", "income", "debt"],
    "default_class": 0,
    "rules": [
        {"outer": [["age", ">=", 30]], "inner": [["income", ">", 5], ["debt", "<=", 4]], "class": 1},
        {"outer": [["age", ">=", 30]], "inner": [["income", ">", 8]], "class": 1},
        {"outer": [["age", "<", 30]], "inner": [["debt", "<=", 1], ["income", ">", 3]], "class": 1},
    ],
}


def _groups(rng, n):
    return np.where(rng.random(n) < 0.5, "a", "b")


def _write(directory: Path, name: str, dataset: Dataset, model_spec: dict, config: dict) -> Path:
    save_dataset_csv(directory / f"{name}.csv", dataset)
    (directory / f"{name}.model.json").write_text(json.dumps(model_spec, indent=2) + "\n")
    cfg = {"dataset": f"{name}.csv", "model": f"{name}.model.json", **config}
    path = directory / f"{name}.config.json"
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path


def write_fixture_suite(directory, seed: int = 0) -> dict:
    """Create every fixture under ``directory``; returns ``{name: config path}``.

    Each config runs the default metric suite for its model.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = {}

    # LIN3 with a binary protected column that the model ignores
    n = 40
    X = np.column_stack([rng.normal(size=n), rng.normal(size=n), rng.integers(0, 2, size=n)]).round(3)
    X[0] = [1.0, 1.5, 0.0]
    m = lin3()
    ds = Dataset(X, [m.classify(r) for r in X], _groups(rng, n), ["a", "b", "s"])
    paths["lin3"] = _write(directory, "lin3", ds, m.to_spec(),
                           {"explainer": {"name": "gradient"}, "metrics": "default",
                            "protected": ["s"], "seed": seed, "row": 0})

    # two-logit ReLU network
    n = 40
    net = random_mlp(rng, [4, 6, 2])
    X = rng.normal(size=(n, 4)).round(3)
    ds = Dataset(X, [net.classify(r) for r in X], _groups(rng, n))
    paths["mlp"] = _write(directory, "mlp", ds, net.to_spec(),
                          {"explainer": {"name": "integrated-gradients", "params": {"steps": 32}},
                           "metrics": "default", "seed": seed, "row": 0})

    # decision set on integer-valued features
    n = 60
    X = rng.integers(0, 11, size=(n, 3)).astype(float)
    X[:, 0] = rng.integers(18, 60, size=n)
    X[0] = [45.0, 9.0, 2.0]
    dset = TwoLevelDecisionSet(DECISION_SET_SPEC["rules"], 0, DECISION_SET_SPEC["feature_names"])
    labels = np.array([dset.classify(r) for r in X])
    ds = Dataset(X, labels, _groups(rng, n), DECISION_SET_SPEC["feature_names"])
    # explain a row whose class differs from the baseline's, so the attribution is nonzero
    row = int(np.argmax(labels != dset.classify(X.mean(axis=0))))
    paths["decision_set"] = _write(directory, "decision_set", ds, DECISION_SET_SPEC,
                                   {"explainer": {"name": "shapley-exact", "params": {"baseline": "mean"}},
                                    "metrics": "default", "seed": seed, "row": row})

    # concept bottleneck with two concepts over four inputs
    n = 40
    H = np.array([[1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, -1.0]])
    toy = ConceptToy(H, [1.5, -0.5])
    X = rng.normal(size=(n, 4)).round(3)
    ds = Dataset(X, [toy.classify(r) for r in X], _groups(rng, n))
    paths["concept"] = _write(directory, "concept", ds,
                              {"type": "concept", "h": H.tolist(), "head": [1.5, -0.5]},
                              {"explainer": {"name": "gradient"}, "metrics": "default",
                               "seed": seed, "row": 0})

    # six-feature linear model used for the complexity trade-off curve
    n = 60
    lin = random_linear(rng, 6)
    X = rng.normal(size=(n, 6)).round(3)
    ds = Dataset(X, [lin.classify(r) for r in X], _groups(rng, n))
    paths["k6"] = _write(directory, "k6", ds, lin.to_spec(),
                         {"explainer": {"name": "lime", "params": {"n": 200}},
                          "metrics": "default", "seed": seed, "row": 0})
    return paths
