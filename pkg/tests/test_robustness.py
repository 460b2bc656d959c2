import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from xplain import robustness as rb
from xplain.core import (
    GRADIENT,
    LOGITS,
    Dataset,
    DegenerateExplanationWarning,
    DegenerateSampleError,
    InvalidInputError,
    Model,
    UndefinedMetricError,
    UnsupportedCapabilityError,
)
from xplain.fixtures import explainers as ex
from xplain.fixtures import models as fm
from xplain.perturb import ConstantShift, Hyperbox, LpBall, PerturbationSpec, sample_region

LIN3 = fm.lin3()
X = np.array([1.0, 1.0, 1.0])
grad = ex.explain_gradient
ixg = ex.explain_input_x_gradient


def spec(region, n=1000, seed=0):
    return PerturbationSpec(region, n, seed)


def constant_explainer(model, x):
    return np.array([3.0, 1.0, 2.0])


# --- max sensitivity and local stability -----------------------------------

def test_max_sensitivity_examples():
    assert rb.max_sensitivity(grad, LIN3, X, spec(LpBall(2, 0.5))).value == 0.0
    r = 0.2
    res = rb.max_sensitivity(ixg, LIN3, X, spec(LpBall(np.inf, r), n=10_000))
    assert abs(res.value - r * math.sqrt(5)) <= 0.02 * r * math.sqrt(5)
    assert res.value <= r * math.sqrt(5) * (1 + 1e-12)
    assert rb.max_sensitivity(ixg, LIN3, X, spec(LpBall(2, 0.0))).value == 0.0


def test_max_sensitivity_witness_in_region_and_flagged():
    region = LpBall(2, 0.3)
    res = rb.max_sensitivity(ixg, LIN3, X, spec(region, n=500))
    assert region.contains(X, res.witness)
    assert res.flags["best-found"] is True
    assert res.estimator.startswith("search(")


def test_max_sensitivity_similarity_kind_reports_minimum():
    res = rb.max_sensitivity(grad, LIN3, X, spec(LpBall(2, 0.3), n=100), dist="cosine_similarity")
    assert math.isclose(res.value, 1.0, rel_tol=1e-12)


def test_local_stability_examples():
    res = rb.local_stability(ixg, LIN3, X, spec(LpBall(2, 0.5), n=10_000), lam=3.0)
    assert abs(res.value - 2.0) <= 0.04
    assert res.flags["lipschitz"] is True
    assert rb.local_stability(grad, LIN3, X, spec(LpBall(2, 0.5))).value == 0.0
    assert rb.local_stability(ixg, LIN3, X, spec(LpBall(2, 0.5)), lam=1.0).flags["lipschitz"] is False


def test_local_stability_degenerate_region():
    with pytest.raises(DegenerateSampleError):
        rb.local_stability(ixg, LIN3, X, spec(LpBall(2, 0.0)))


def test_lipschitz_global_check():
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(30, 3)))
    res = rb.lipschitz_global_check(ixg, LIN3, d, lam=2.5, n_pairs=200, seed=1)
    assert res.value <= 2.0 + 1e-12
    assert res.flags["lipschitz"] is True
    assert rb.lipschitz_global_check(grad, LIN3, d, lam=0.1, n_pairs=50).value == 0.0


# --- relative and representation stability --------------------------------

def test_relative_stability_ratio_example():
    w = np.array([2.0, 1.0])
    x, xp = np.array([1.0, 1.0]), np.array([1.1, 1.0])
    assert math.isclose(rb.relative_stability_ratio(w * x, w * xp, x, xp, p=2), 1.0, rel_tol=1e-12)


def test_relative_stability_zero_cases():
    assert rb.relative_stability(grad, LIN3, X, spec(LpBall(2, 0.3), n=200)).value == 0.0
    assert rb.relative_stability_ratio(np.ones(2), np.ones(2), np.ones(2), np.ones(2)) == 0.0


def test_relative_stability_zero_explanation_warns():
    with pytest.warns(DegenerateExplanationWarning):
        rb.relative_stability(ixg, LIN3, np.zeros(3), spec(LpBall(2, 0.3), n=20))


def test_guarded_divide_keeps_sign():
    out = rb.guarded_divide(np.array([1.0, 1.0, 1.0]), np.array([0.0, -1e-12, 2.0]), 1e-8)
    assert_array_equal(out, [1e8, -1e8, 0.5])


def test_representation_stability_identity_layer_matches_relative_stability():
    net = fm.TinyMLP([(np.eye(3), np.zeros(3), "identity"),
                      (np.array([[2.0, 1.0, 0.0]]), np.zeros(1), "identity")])
    s = spec(LpBall(2, 0.3), n=400, seed=3)
    a = rb.representation_stability(ixg, net, X, s).value
    b = rb.relative_stability(ixg, net, X, s).value
    assert abs(a - b) <= 1e-9
    assert rb.representation_stability(constant_explainer, net, X, s).value == 0.0


class LogitOnly(Model):
    capabilities = frozenset({GRADIENT, LOGITS})
    dim = 2

    def logits(self, x):
        return np.array([x[0] + 2 * x[1], x[0] * x[1]])

    def predict(self, x):
        return float(self.logits(x)[0])

    def gradient(self, x):
        return np.array([1.0, 2.0])


def test_representation_stability_falls_back_to_logits():
    m = LogitOnly()
    x = np.array([0.5, 2.0])
    s = spec(LpBall(2, 0.2), n=50, seed=4)
    res = rb.representation_stability(ixg, m, x, s, strategy="random", budget=51)
    assert res.flags["representation"] == "logits"
    e0, r0 = ixg(m, x), m.logits(x)
    brute = max(
        rb.relative_change(ixg(m, z), e0, 2, 1e-8) / max(rb.relative_change(m.logits(z), r0, 2, 1e-8), 1e-8)
        for z in np.vstack([x, sample_region(x, s)])
    )
    assert math.isfinite(res.value)
    assert res.value == brute


def test_representation_stability_unsupported():
    m = fm.TwoLevelDecisionSet([{"outer": [[0, ">", 0]], "inner": [[1, ">", 0]], "class": 1}], dim=2)
    with pytest.raises(UnsupportedCapabilityError):
        rb.representation_stability(grad, m, np.zeros(2))


# --- average sensitivity ----------------------------------------------------

def test_average_sensitivity_examples():
    res = rb.average_sensitivity(grad, LIN3, X, spec(LpBall(2, 0.3), n=100))
    assert res.value == 0.0 and res.stderr == 0.0
    one = rb.average_sensitivity(ixg, LIN3, X, spec(LpBall(2, 0.3), n=1, seed=5))
    assert one.stderr is None
    assert one.value == rb.average_sensitivity(ixg, LIN3, X, spec(LpBall(2, 0.3), n=1, seed=5)).value


def test_average_sensitivity_matches_large_monte_carlo():
    res = rb.average_sensitivity(ixg, LIN3, X, spec(LpBall(np.inf, 0.1), n=2000, seed=6))
    rng = np.random.default_rng(99)
    d = rng.uniform(-0.1, 0.1, size=(1_000_000, 3))
    brute = np.linalg.norm(d * np.array([2.0, 1.0, 0.0]), axis=1).mean()
    assert abs(res.value - brute) <= 3 * res.stderr


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.sampled_from([1, 2, np.inf]))
def test_max_dominates_mean_on_shared_samples(seed, p):
    rng = np.random.default_rng(seed)
    net = fm.random_mlp(rng, [3, 5, 1], act="softplus")
    x = rng.normal(size=3)
    n = 60
    s = spec(LpBall(p, 0.5), n=n, seed=seed)
    mx = rb.max_sensitivity(grad, net, x, s, strategy="random", budget=n + 1).value
    avg = rb.average_sensitivity(grad, net, x, s).value
    assert mx >= avg
    assert mx >= 0 and avg >= 0


# --- adversarial dissimilarity ---------------------------------------------

def test_topk_objective_with_constant_explainer():
    res = rb.adversarial_dissimilarity(constant_explainer, LIN3, X, spec(LpBall(2, 0.5), n=50),
                                       "topk", k=2)
    assert res.value == -5.0


def test_targeted_objective_bound():
    # feature 2 has zero weight; input x gradient keeps its attribution at 0 everywhere
    res = rb.adversarial_dissimilarity(ixg, LIN3, X, spec(LpBall(np.inf, 0.5), n=200),
                                       "targeted", subset=[2])
    assert res.value == 0.0
    res = rb.adversarial_dissimilarity(ixg, LIN3, X, spec(LpBall(np.inf, 0.5), n=2000),
                                       "targeted", subset=[1])
    assert res.value <= 1.0 * 1.5 + 1e-12
    assert res.value >= 1.5 * 0.98


def test_center_of_mass_objective():
    assert rb.adversarial_dissimilarity(constant_explainer, LIN3, X, spec(LpBall(2, 0.5), n=30),
                                        "center_of_mass").value == 0.0
    assert rb.center_of_mass([0.0, 0.0, 4.0]) == 2.0
    assert rb.center_of_mass([1.0, -1.0]) == 0.5
    with pytest.raises(UndefinedMetricError):
        rb.center_of_mass([0.0, 0.0])


def test_adversarial_objective_validation():
    with pytest.raises(InvalidInputError):
        rb.adversarial_dissimilarity(grad, LIN3, X, spec(LpBall(2, 0.1)), "topk", k=4)
    with pytest.raises(InvalidInputError):
        rb.adversarial_dissimilarity(grad, LIN3, X, spec(LpBall(2, 0.1)), "targeted", subset=[])
    with pytest.raises(InvalidInputError):
        rb.adversarial_dissimilarity(grad, LIN3, X, spec(LpBall(2, 0.1)), "saliency")


# --- input invariance, hyperbox precision, fairness ------------------------

def test_input_invariance_examples():
    assert rb.input_invariance(grad, LIN3, X, 1.0) == 0.0
    assert rb.input_invariance(ixg, LIN3, X, 1.0, p=2) == math.sqrt(5)
    assert rb.input_invariance(ixg, LIN3, X, 1.0, p=1) == 3.0
    assert rb.input_invariance(ixg, LIN3, X, 0.0) == 0.0
    with pytest.raises(InvalidInputError):
        rb.input_invariance(ixg, LIN3, X, 1.0, p=3)


def test_hyperbox_precision_examples():
    only_x = Dataset(np.array([[1.0, 1.0, 1.0], [5.0, 5.0, 5.0]]))
    box = Hyperbox.around(X, 0.1)
    assert rb.hyperbox_precision(LIN3, X, box, only_x, lam=1e-9) == 1.0
    const = fm.LinearModel(np.zeros(3), 2.0)
    rng = np.random.default_rng(7)
    d = Dataset(X + rng.uniform(-0.15, 0.15, size=(200, 3)))
    assert rb.hyperbox_precision(const, X, box, d, lam=1e-9) == 1.0
    lam = 0.05
    count = total = 0
    for row in d.rows:
        if all(abs(row - X) <= 0.1):
            total += 1
            count += abs(LIN3.predict(row) - LIN3.predict(X)) < lam
    assert rb.hyperbox_precision(LIN3, X, box, d, lam) == count / total
    signed = rb.hyperbox_precision(LIN3, X, box, d, lam, variant="signed")
    assert signed >= count / total


def test_hyperbox_precision_empty_box():
    d = Dataset(np.array([[5.0, 5.0, 5.0]]))
    with pytest.raises(UndefinedMetricError):
        rb.hyperbox_precision(LIN3, X, Hyperbox.around(X, 0.1), d, 0.1)


def test_counterfactual_fairness_examples():
    d = Dataset(np.array([[1.0, 1.0, 0.0], [0.0, 2.0, 1.0]]), protected={2})
    assert rb.counterfactual_fairness_gap(grad, LIN3, X, 2, dataset=d) == 0.0
    uses = fm.LinearModel([1.0, 0.0, 3.0])
    x = np.array([1.0, 1.0, 0.0])
    gap = rb.counterfactual_fairness_gap(constant_explainer, uses, x, 2, values=[1.0])
    assert gap == 3.0
    with pytest.raises(InvalidInputError):
        rb.counterfactual_fairness_gap(grad, LIN3, X, 1, dataset=d)


@settings(max_examples=30)
@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.floats(-5, 5))
def test_fairness_zero_when_protected_unused(x, v):
    m = fm.LinearModel([1.5, -0.5, 0.0], 0.3)
    assert rb.counterfactual_fairness_gap(ixg, m, np.array(x), 2, values=[v]) == 0.0


# --- model perturbations ----------------------------------------------------

def test_model_randomization_examples():
    assert rb.model_randomization_sensitivity(grad, LIN3, LIN3, X) == 0.0
    other = fm.LinearModel([0.0, 0.0, 1.0])
    assert rb.model_randomization_sensitivity(grad, LIN3, other, X) == math.sqrt(6)
    assert rb.model_randomization_sensitivity(ixg, LIN3, LIN3, X, dist="spearman") == 1.0


def _two_logit_net():
    W = np.array([[1.0, 0.0, 2.0], [0.0, 3.0, -1.0]])
    return fm.TinyMLP([(W, np.zeros(2), "identity")])


def test_fooling_loss_bounds():
    net = _two_logit_net()
    rng = np.random.default_rng(8)
    for _ in range(10):
        x = rng.normal(size=3)
        loss = rb.fooling_loss(ixg, net, net, x, 0, 1)
        src = ex.explain_input_x_gradient(net.select_output(0), x)
        assert loss <= 0.0
        from xplain.simdist import spearman
        expect = spearman(src, ex.explain_input_x_gradient(net.select_output(1), x)) - 1.0
        assert math.isclose(loss, expect, abs_tol=1e-12)


def test_adversarial_model_sensitivity_window_and_errors():
    net = _two_logit_net()
    rows = np.random.default_rng(9).normal(size=(20, 3))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert rb.adversarial_model_sensitivity(ixg, net, net, rows, 0, 1, (-2.0, 0.0)) == 1.0
        assert rb.adversarial_model_sensitivity(ixg, net, net, rows, 0, 1, (0.5, 1.0)) == 0.0
    with pytest.raises(InvalidInputError):
        rb.adversarial_model_sensitivity(ixg, net, net, rows, 0, 0, (0, 1))
    with pytest.raises(UndefinedMetricError):
        rb.adversarial_model_sensitivity(ixg, net, net, np.empty((0, 3)), 0, 1, (0, 1))


# --- explainer hyperparameters ---------------------------------------------

def test_explainer_config_sensitivity_examples():
    f = ex.explain_smoothgrad
    assert rb.explainer_config_sensitivity(f, {"sigma": 0.3}, {"sigma": 0.3}, LIN3, X) == 0.0
    assert rb.explainer_config_sensitivity(f, {"sigma": 0.0}, {"sigma": 0.5}, LIN3, X) == 0.0
    x = np.array([1.0, 2.0, 3.0])
    mean = np.array([0.5, -1.0, 4.0])
    v = rb.explainer_config_sensitivity(ex.explain_integrated_gradients, {"baseline": np.zeros(3)},
                                        {"baseline": mean}, LIN3, x)
    assert math.isclose(v, np.linalg.norm(np.array([2.0, 1.0, 0.0]) * mean), rel_tol=1e-12)


def test_explainer_config_grid_reports_worst_pair():
    grid = [{"baseline": np.zeros(3)}, {"baseline": np.ones(3)}, {"baseline": np.full(3, 3.0)}]
    value, pair = rb.explainer_config_grid(ex.explain_input_x_gradient, grid, LIN3, X)
    assert pair == (0, 2)
    assert math.isclose(value, 3 * math.sqrt(5))
    with pytest.raises(InvalidInputError):
        rb.explainer_config_grid(ex.explain_input_x_gradient, grid[:1], LIN3, X)


# --- properties -------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_seed_determinism(seed):
    rng = np.random.default_rng(seed)
    net = fm.random_mlp(rng, [3, 4, 1], act="softplus")
    x = rng.normal(size=3)
    s = spec(LpBall(2, 0.4), n=80, seed=seed)
    a = rb.max_sensitivity(grad, net, x, s)
    b = rb.max_sensitivity(grad, net, x, s)
    assert a.value == b.value
    assert_array_equal(a.witness, b.witness)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(["lp", "mse"]))
def test_norm_based_values_non_negative_and_zero_for_constant(seed, dist):
    rng = np.random.default_rng(seed)
    net = fm.random_mlp(rng, [3, 4, 1])
    x = rng.normal(size=3)
    s = spec(ConstantShift(0.3), seed=seed)
    assert rb.max_sensitivity(grad, net, x, s, dist).value >= 0
    assert rb.average_sensitivity(constant_explainer, net, x, s, dist).value == 0.0
