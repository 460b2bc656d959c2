import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from xplain.core import (
    BaselineSpec,
    Dataset,
    ExampleSet,
    FunctionModel,
    InvalidInputError,
    MetricReport,
    Model,
    Surrogate,
    UnsupportedCapabilityError,
    as_vector,
    complement,
    feature_subset,
    mask_discard,
    mask_retain,
    proportion_count,
    rank_features,
    resolve_attribution,
    resolve_baseline,
    top_k_subset,
    top_proportion_subset,
)
from xplain.fixtures.models import LinearModel

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def vectors(min_size=1, max_size=8):
    return st.lists(finite, min_size=min_size, max_size=max_size).map(np.array)


# --- masking ---------------------------------------------------------------

def test_mask_retain_examples():
    x = np.ones(3)
    assert_array_equal(mask_retain(x, [0]), [1, 0, 0])
    assert_array_equal(mask_retain(x, []), [0, 0, 0])
    assert_array_equal(mask_retain(x, [1, 2], np.full(3, 9.0)), [9, 1, 1])


def test_mask_retain_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        mask_retain(np.ones(3), [0], np.zeros(2))
    with pytest.raises(InvalidInputError):
        mask_retain(np.ones(3), [3])
    with pytest.raises(InvalidInputError):
        mask_retain(np.array([1.0, np.nan]), [0])


def test_mask_discard_is_complement_retention():
    x = np.arange(1.0, 5.0)
    assert_array_equal(mask_discard(x, [1, 3]), mask_retain(x, complement([1, 3], 4)))


def test_feature_subset_validation():
    assert feature_subset([2, 0], 3) == (0, 2)
    with pytest.raises(InvalidInputError):
        feature_subset([0, 0], 3)
    with pytest.raises(InvalidInputError):
        feature_subset([-1], 3)


@given(vectors(), st.data())
def test_mask_partition_property(x, data):
    k = len(x)
    base = data.draw(vectors(k, k))
    subset = data.draw(st.sets(st.integers(0, k - 1)))
    a = mask_retain(x, subset, base)
    b = mask_retain(x, complement(subset, k), base)
    for i in range(k):
        if i in subset:
            assert a[i] == x[i] and b[i] == base[i]
        else:
            assert a[i] == base[i] and b[i] == x[i]
    assert_array_equal(mask_retain(x, range(k), base), x)
    assert_array_equal(mask_retain(x, [], base), base)


# --- ranking ---------------------------------------------------------------

def test_rank_features_examples():
    assert rank_features([2, 1, 0]) == [0, 1, 2]
    assert rank_features([0, 0, 0]) == [0, 1, 2]
    assert rank_features([1, 3, 3]) == [1, 2, 0]


def test_rank_features_nan_rejected():
    with pytest.raises(InvalidInputError):
        rank_features([1.0, np.nan])


def _oracle_rank(e):
    # selection sort with strict comparison keeps the lower index on ties
    remaining = list(range(len(e)))
    out = []
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if e[i] > e[best]:
                best = i
        out.append(best)
        remaining.remove(best)
    return out


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=9))
def test_rank_features_matches_selection_oracle(e):
    assert rank_features(np.array(e, dtype=float)) == _oracle_rank(e)


@given(vectors())
def test_rank_is_a_non_increasing_permutation(e):
    r = rank_features(e)
    assert sorted(r) == list(range(len(e)))
    assert np.all(np.diff(e[r]) <= 0)


def test_top_proportion_examples():
    e = [2, 1, 0]
    assert top_proportion_subset(e, 1 / 3) == (0,)
    assert top_proportion_subset(e, 0) == ()
    assert top_proportion_subset(e, 1) == (0, 1, 2)
    with pytest.raises(InvalidInputError):
        top_proportion_subset(e, 1.5)
    with pytest.raises(InvalidInputError):
        top_proportion_subset(e, -0.1)


def test_proportion_count_uses_ceiling():
    assert proportion_count(0.5, 3) == 2
    assert proportion_count(0.34, 3) == 2
    assert proportion_count(0.25, 4) == 1
    assert proportion_count(2 / 3, 3) == 2  # no spurious round-up from 2/3 * 3


@given(vectors(), st.floats(0, 1), st.floats(0, 1))
def test_top_proportion_nested(e, s1, s2):
    lo, hi = sorted([s1, s2])
    assert set(top_proportion_subset(e, lo)) <= set(top_proportion_subset(e, hi))
    assert len(top_proportion_subset(e, hi)) == math.ceil(hi * len(e) - 1e-9)


def test_top_k_subset_bounds():
    assert top_k_subset([0, 5, 1], 2) == (1, 2)
    with pytest.raises(InvalidInputError):
        top_k_subset([0, 5, 1], 4)


# --- models, datasets, baselines ----------------------------------------

def test_model_capability_errors():
    m = FunctionModel(lambda v: float(v.sum()), 2)
    assert not m.has("gradient")
    with pytest.raises(UnsupportedCapabilityError):
        m.gradient(np.zeros(2))
    with pytest.raises(UnsupportedCapabilityError):
        m.representation(np.zeros(2))


def test_function_model_with_gradient_and_batch():
    m = FunctionModel(lambda v: float(v @ v), 2, gradient=lambda v: 2 * v)
    assert m.has("gradient")
    assert_array_equal(m.gradient(np.array([1.0, 2.0])), [2, 4])
    assert_array_equal(m.predict_batch(np.eye(2)), [1, 1])
    assert m.classify(np.array([1.0, 0.0])) == 1


def test_as_vector_shape_and_finiteness():
    assert_array_equal(as_vector([1, 2]), [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        as_vector([1, 2], 3)
    with pytest.raises(InvalidInputError):
        as_vector([[1, 2]])
    with pytest.raises(InvalidInputError):
        as_vector([np.inf])


def test_dataset_validation_and_groups():
    d = Dataset(np.zeros((3, 2)), labels=[0, 1, 0], groups=["b", "a", "b"], names=["p", "q"],
                protected={1})
    assert d.dim == 2 and len(d) == 3
    assert d.group_values() == ["a", "b"]
    assert d.column("q") == 1
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((3, 2)), labels=[0, 1])
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[np.nan, 0.0]]))
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((2, 2)), protected={2})


def test_baselines():
    d = Dataset(np.array([[0.0, 2.0], [2.0, 4.0]]))
    assert_array_equal(resolve_baseline(None, 2), [0, 0])
    assert_array_equal(resolve_baseline("mean", 2, d), [1, 3])
    assert_array_equal(resolve_baseline(1.5, 2), [1.5, 1.5])
    assert_array_equal(resolve_baseline([4, 5], 2), [4, 5])
    assert_array_equal(BaselineSpec("constant", 2.0).resolve(2), [2, 2])
    assert_array_equal(BaselineSpec.parse({"kind": "custom", "value": [1, 2]}).resolve(2), [1, 2])
    with pytest.raises(InvalidInputError):
        resolve_baseline("mean", 2)
    with pytest.raises(InvalidInputError):
        resolve_baseline([1, 2, 3], 2)
    with pytest.raises(InvalidInputError):
        BaselineSpec("median")


def test_surrogate_and_resolve_attribution():
    s = Surrogate([1.0, -1.0], 0.5)
    assert s.predict(np.array([2.0, 1.0])) == 1.5
    assert_array_equal(s.gradient(np.zeros(2)), [1, -1])
    m = LinearModel([3.0, 4.0])
    assert_array_equal(resolve_attribution(lambda model, x: model.gradient(x), m, np.zeros(2)), [3, 4])
    with pytest.raises(InvalidInputError):
        resolve_attribution([1.0], m, np.zeros(2))


def test_example_set_indices_checked():
    d = Dataset(np.arange(6.0).reshape(3, 2))
    assert_array_equal(ExampleSet([2]).rows(d), [[4, 5]])
    with pytest.raises(InvalidInputError):
        ExampleSet([3]).rows(d)


def test_metric_report_round_trip():
    r = MetricReport("x", {"k": np.int64(2)}, value=np.float64(0.5), seed=3, n_samples=10,
                     details={"curve": np.array([1.0, np.nan])})
    d = r.to_dict()
    text = json.dumps(d, allow_nan=False)
    back = MetricReport.from_dict(json.loads(text))
    assert back.value == 0.5 and back.params == {"k": 2}
    assert back.details["curve"] == [1.0, None]


def test_model_base_is_abstract():
    class Bare(Model):
        dim = 1

    with pytest.raises(NotImplementedError):
        Bare().predict(np.zeros(1))


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=2, max_size=6))
def test_predict_batch_matches_predict(w):
    m = FunctionModel(lambda v: float(np.sin(v).sum()), len(w))
    X = np.array([w, list(reversed(w))])
    assert_array_equal(m.predict_batch(X), [m.predict(X[0]), m.predict(X[1])])
