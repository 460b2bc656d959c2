import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from xplain.core import Dataset, InvalidInputError
from xplain.fixtures import models as fm
from xplain.io import dump_json, load_dataset_csv, load_report, save_dataset_csv
from xplain.registry import (
    EXPLAINERS,
    METRICS,
    EvalContext,
    context_capabilities,
    default_suite,
    make_explainer,
    resolve_params,
)


# --- dataset CSV ------------------------------------------------------------

def test_dataset_csv_round_trip(tmp_path):
    rows = np.random.default_rng(0).normal(size=(5, 3))
    d = Dataset(rows, labels=[0, 1, 1, 0, 1], groups=["a", "b", "a", "b", "a"], names=["p", "q", "r"])
    path = tmp_path / "d.csv"
    save_dataset_csv(path, d)
    back = load_dataset_csv(path, protected=["q"])
    assert_array_equal(back.rows, rows)
    assert back.labels.tolist() == [0, 1, 1, 0, 1]
    assert back.groups.tolist() == ["a", "b", "a", "b", "a"]
    assert back.names == ["p", "q", "r"] and back.protected == {1}


@pytest.mark.parametrize("text", [
    "a,b\n1,2\n3\n",
    "a,b\n1,x\n",
    "",
])
def test_malformed_dataset_rejected(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InvalidInputError):
        load_dataset_csv(path)


def test_unknown_protected_column(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidInputError):
        load_dataset_csv(path, protected=["c"])


def test_dump_json_rejects_nan():
    with pytest.raises(ValueError):
        dump_json({"v": float("nan")})


def test_load_report_validation(tmp_path):
    path = tmp_path / "r.json"
    path.write_text(json.dumps({"meta": {}, "results": [{"name": "x", "status": "ok"}]}))
    assert load_report(path)["results"][0]["name"] == "x"
    path.write_text(json.dumps({"meta": {}, "results": [{"value": 1}]}))
    with pytest.raises(InvalidInputError):
        load_report(path)


# --- registry ---------------------------------------------------------------

def test_metric_names_are_kebab_case():
    for name in METRICS:
        assert name == name.lower() and "_" not in name and " " not in name


def test_resolve_params_defaults_and_seed():
    entry = METRICS["average-sensitivity"]
    p = resolve_params(entry, {"n": 5}, seed=9)
    assert p["n"] == 5 and p["seed"] == 9
    assert resolve_params(entry, {"seed": 2}, seed=9)["seed"] == 2
    with pytest.raises(InvalidInputError):
        resolve_params(entry, {"nn": 5}, seed=0)


def test_make_explainer_binds_and_validates():
    fn, params = make_explainer("smoothgrad", {"sigma": 0.0}, seed=4)
    assert params == {"sigma": 0.0, "seed": 4}
    assert_array_equal(fn(fm.lin3(), np.ones(3)), [2, 1, 0])
    with pytest.raises(InvalidInputError):
        make_explainer("gradient", {"steps": 3}, seed=0)
    with pytest.raises(InvalidInputError):
        make_explainer("magic", {}, seed=0)
    fn, _ = make_explainer("input-x-gradient", {"baseline": "mean"}, 0,
                           Dataset(np.array([[0.0, 0.0, 0.0], [2.0, 2.0, 2.0]])), 3)
    assert_array_equal(fn(fm.lin3(), np.full(3, 3.0)), [4, 2, 0])


def _context(model, dataset, name="gradient"):
    fn, params = make_explainer(name, {}, 0, dataset, model.dim)
    return EvalContext(model, dataset, dataset.rows[0], fn, name, params, 0)


def test_default_suite_respects_capabilities():
    d = Dataset(np.random.default_rng(1).normal(size=(20, 3)))
    caps = context_capabilities(_context(fm.lin3(), d))
    assert {"gradient", "parameters", "blackbox"} <= caps
    assert "decision_set" not in caps and "labels" not in caps
    suite = default_suite(_context(fm.lin3(), d))
    assert suite
    for name in suite:
        assert METRICS[name].requires <= caps
    ds = fm.TwoLevelDecisionSet([{"outer": [[0, ">", 0]], "inner": [[1, ">", 0]], "class": 1}], dim=3)
    ds_suite = default_suite(_context(ds, d, "shapley-exact"))
    assert {"size", "max-width", "cognitive-chunks"} <= set(ds_suite)
    assert all("gradient" not in METRICS[n].requires for n in ds_suite)
    assert "size" not in suite


def test_explainer_registry_flags():
    assert EXPLAINERS["lime"].stochastic and not EXPLAINERS["lime"].needs_gradient
    assert not EXPLAINERS["shapley-exact"].needs_gradient
    assert EXPLAINERS["integrated-gradients"].params == ("baseline", "steps")
