import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_array_equal

from xplain.core import InvalidInputError, NumericError
from xplain.fixtures.explainers import explain_gradient
from xplain.fixtures.models import lin3
from xplain.perturb import (
    ConstantShift,
    GroupFlip,
    Hyperbox,
    LpBall,
    PerturbationSpec,
    eval_targeted_loss,
    flip_group,
    region_from_dict,
    sample_region,
    worst_case_search,
)

NORMS = [1, 2, np.inf]


def test_degenerate_ball_gives_copies():
    x = np.array([1.0, -2.0, 3.0])
    pts = sample_region(x, PerturbationSpec(LpBall(2, 0.0), n=5))
    assert_array_equal(pts, np.tile(x, (5, 1)))


def test_inf_ball_membership():
    x = np.array([1.0, -2.0, 3.0])
    pts = sample_region(x, PerturbationSpec(LpBall(np.inf, 0.1), n=500, seed=3))
    assert np.all(np.abs(pts - x) <= 0.1)


@pytest.mark.parametrize("p", NORMS)
def test_ball_samples_inside_and_deterministic(p):
    x = np.arange(4.0)
    spec = PerturbationSpec(LpBall(p, 0.3), n=2000, seed=11)
    pts = sample_region(x, spec)
    assert pts.shape == (2000, 4)
    assert np.all(np.linalg.norm(pts - x, ord=p, axis=1) <= 0.3 * (1 + 1e-12))
    assert_array_equal(pts, sample_region(x, spec))


@pytest.mark.parametrize("p", NORMS)
def test_ball_samples_are_uniform_in_volume(p):
    # for a uniform sample in a K-dimensional norm ball, P(|d| <= r/2) = 2^-K
    k, n = 3, 40_000
    pts = sample_region(np.zeros(k), PerturbationSpec(LpBall(p, 1.0), n=n, seed=5))
    frac = np.mean(np.linalg.norm(pts, ord=p, axis=1) <= 0.5)
    expect = 0.5 ** k
    assert abs(frac - expect) <= 4 * np.sqrt(expect * (1 - expect) / n)


@pytest.mark.parametrize("p", NORMS)
def test_ball_sample_mean_is_the_anchor(p):
    x = np.array([0.5, -1.0])
    pts = sample_region(x, PerturbationSpec(LpBall(p, 1.0), n=10_000, seed=7))
    se = pts.std(axis=0, ddof=1) / np.sqrt(len(pts))
    assert np.all(np.abs(pts.mean(axis=0) - x) <= 3.5 * se)


def test_unsupported_norm_rejected():
    with pytest.raises(InvalidInputError):
        LpBall(3, 1.0)
    with pytest.raises(InvalidInputError):
        LpBall(2, -1.0)
    with pytest.raises(InvalidInputError):
        PerturbationSpec(LpBall(2, 1.0), n=0)


def test_hyperbox_sampling_and_anchor_check():
    x = np.array([0.0, 1.0])
    box = Hyperbox([-1.0, 0.5], [0.5, 2.0])
    pts = sample_region(x, PerturbationSpec(box, n=300, seed=1))
    assert all(box.contains(x, p) for p in pts)
    with pytest.raises(InvalidInputError):
        sample_region(np.array([5.0, 1.0]), PerturbationSpec(box))
    with pytest.raises(InvalidInputError):
        Hyperbox([1.0], [0.0])


def test_flip_group_examples():
    x = np.array([1.0, 0.0, 1.0])
    assert_array_equal(flip_group(x, 1, 1.0), [1, 1, 1])
    assert_array_equal(flip_group(x, 1, 0.0), x)
    with pytest.raises(InvalidInputError):
        flip_group(x, 3, 1.0)


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=6), st.data())
def test_flip_group_locality(x, data):
    x = np.array(x)
    j = data.draw(st.integers(0, len(x) - 1))
    v = data.draw(st.floats(-1e3, 1e3))
    out = flip_group(x, j, v)
    assert out[j] == v
    assert_array_equal(np.delete(out, j), np.delete(x, j))


def test_finite_regions_enumerate():
    x = np.array([1.0, 0.0])
    flips = sample_region(x, PerturbationSpec(GroupFlip(1, (0.0, 1.0))))
    assert_array_equal(flips, [[1, 0], [1, 1]])
    shifts = sample_region(x, PerturbationSpec(ConstantShift(0.5)))
    assert_array_equal(shifts, [[1.5, 0.5], [0.5, -0.5]])


@pytest.mark.parametrize("d", [
    {"lp": 2, "r": 0.1},
    {"lp": "inf", "r": 0.5},
    {"box": {"lower": [0, 0], "upper": [1, 1]}},
    {"flip": {"feature": 0, "values": [0, 1]}},
    {"shift": 0.25},
])
def test_spec_json_round_trip(d):
    spec = PerturbationSpec(region_from_dict(d), n=7, seed=3)
    back = PerturbationSpec.from_dict(spec.to_dict())
    assert back == spec


# --- search -----------------------------------------------------------------

def test_constant_objective_returns_value_at_x():
    x = np.array([0.2, 0.3])
    res = worst_case_search(lambda z: 4.0, x, LpBall(2, 1.0), budget=100)
    assert res.value == 4.0
    assert_array_equal(res.x, x)
    assert res.label == "best-found"


@pytest.mark.parametrize("strategy", ["random", "refine"])
def test_distance_objective_reaches_radius(strategy):
    x = np.array([1.0, -1.0, 0.5])
    r = 0.7
    res = worst_case_search(lambda z: float(np.linalg.norm(z - x)), x, LpBall(2, r),
                            strategy=strategy, budget=10_000, seed=2)
    assert res.value <= r * (1 + 1e-12)
    assert res.value >= 0.98 * r


def test_linear_objective_finds_inf_ball_corner():
    rng = np.random.default_rng(4)
    for _ in range(10):
        g = rng.normal(size=5)
        x = rng.normal(size=5)
        r = 0.3
        res = worst_case_search(lambda z: float(g @ z), x, LpBall(np.inf, r), budget=10_000, seed=1)
        assert abs(res.value - g @ (x + np.sign(g) * r)) <= 1e-9


def test_gradient_ascent_strategy():
    x = np.zeros(3)
    g = np.array([1.0, -2.0, 0.5])
    res = worst_case_search(lambda z: float(g @ z), x, LpBall(2, 1.0), strategy="gradient",
                            budget=200, gradient=lambda z: g)
    assert abs(res.value - np.linalg.norm(g)) <= 1e-6


def test_search_nan_objective_raises():
    with pytest.raises(NumericError):
        worst_case_search(lambda z: float("nan"), np.zeros(2), LpBall(2, 1.0), budget=10)


def test_search_unknown_strategy():
    with pytest.raises(InvalidInputError):
        worst_case_search(lambda z: 0.0, np.zeros(2), LpBall(2, 1.0), strategy="annealing")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), st.sampled_from(NORMS), st.sampled_from(["random", "refine"]))
def test_search_invariants(seed, p, strategy):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=3)
    c = rng.normal(size=3)
    objective = lambda z: float(np.sin(z @ c) + z[0] ** 2)
    region = LpBall(p, 0.5)
    res = worst_case_search(objective, x, region, strategy=strategy, budget=300, seed=seed)
    assert region.contains(x, res.x)
    assert res.value == objective(res.x)
    values = [v for _, v in res.trace]
    assert values == sorted(values)
    assert res.evaluations <= 300
    again = worst_case_search(objective, x, region, strategy=strategy, budget=300, seed=seed)
    assert_array_equal(again.x, res.x)


# --- targeted loss ----------------------------------------------------------

def test_targeted_loss_examples():
    m = lin3()
    x = np.array([1.0, 1.0, 1.0])
    target = explain_gradient(m, x)
    assert eval_targeted_loss(m, explain_gradient, x, x, target, lam=3.0) == 0.0
    x2 = np.array([2.0, 1.0, 1.0])
    t2 = np.array([0.0, 0.0, 0.0])
    assert eval_targeted_loss(m, explain_gradient, x2, x, t2, lam=0.0) == 5.0
    # explanation term is constant for a linear model; the output term adds lam * (f(x') - f(x))^2
    assert eval_targeted_loss(m, explain_gradient, x2, x, t2, lam=1.0) == 5.0 + 4.0
    with pytest.raises(InvalidInputError):
        eval_targeted_loss(m, explain_gradient, x2, x, np.zeros(2), lam=1.0)
