"""Fidelity of explanations to the model they explain.

Masks follow :func:`xplain.core.mask_retain`: ``x_S`` keeps the features in
``S`` and sets the rest to the baseline (zero unless given). Top-ranked sets
come from :func:`xplain.core.rank_features`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from xplain.core import (
    Dataset,
    DegenerateSampleError,
    ExampleSet,
    InvalidInputError,
    Model,
    UndefinedMetricError,
    ZeroVarianceWarning,
    as_vector,
    complement,
    mask_retain,
    proportion_count,
    rank_features,
    resolve_attribution,
    resolve_baseline,
    top_k_subset,
)
from xplain.fixtures.explainers import LocalSample, LRPResult, local_sample
from xplain.fixtures.fitting import fit_softmax
from xplain.perturb import PerturbationSpec, sample_region
from xplain.simdist import pearson, spearman

SUBSET_ENUMERATION_CAP = 1000

# ---------------------------------------------------------------------------
# Function-based fidelity
# ---------------------------------------------------------------------------

LOSSES = ("mse", "zero_one", "accuracy", "auroc")
LOWER_IS_BETTER = {"mse": True, "zero_one": True, "accuracy": False, "auroc": False}


def _outputs(explanation, rows: np.ndarray) -> np.ndarray:
    return np.asarray(explanation.predict_batch(rows), dtype=float)


def _classes(model, rows: np.ndarray) -> np.ndarray:
    return np.array([model.classify(r) for r in rows])


def auroc(scores, labels) -> float:
    """Probability that a random positive outscores a random negative (ties count one half)."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    pos, neg = scores[labels], scores[~labels]
    if len(pos) == 0 or len(neg) == 0:
        raise UndefinedMetricError("AUROC needs both classes among the reference labels")
    diff = pos[:, None] - neg[None, :]
    return float((np.sum(diff > 0) + 0.5 * np.sum(diff == 0)) / diff.size)


def pointwise_losses(explanation, model: Model, rows, loss: str = "mse") -> np.ndarray:
    """Per-row loss between model and explanation (``mse`` or ``zero_one``)."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if loss == "mse":
        return (model.predict_batch(rows) - _outputs(explanation, rows)) ** 2
    if loss == "zero_one":
        return (_classes(model, rows) != _classes(explanation, rows)).astype(float)
    raise InvalidInputError(f"loss {loss!r} has no per-row form")


def loss_based_fidelity(explanation, model: Model, dataset, loss: str = "mse") -> float:
    """Average quality of a surrogate or decision set against the model over the dataset.

    ``mse`` and ``zero_one`` are losses, ``accuracy`` and ``auroc`` are scores.
    AUROC treats the explanation output as a probability for the model's class.
    """
    rows = dataset.rows if isinstance(dataset, Dataset) else np.atleast_2d(np.asarray(dataset, dtype=float))
    if len(rows) == 0:
        raise InvalidInputError("dataset is empty")
    if loss in ("mse", "zero_one"):
        return float(np.mean(pointwise_losses(explanation, model, rows, loss)))
    if loss == "accuracy":
        return 1.0 - float(np.mean(pointwise_losses(explanation, model, rows, "zero_one")))
    if loss == "auroc":
        scores = _outputs(explanation, rows)
        if np.any(scores < 0) or np.any(scores > 1):
            raise InvalidInputError("AUROC needs probabilistic explanation outputs in [0, 1]")
        return auroc(scores, _classes(model, rows))
    raise InvalidInputError(f"unknown fidelity loss {loss!r}")


def local_accuracy(explanation, model: Model, dataset, tol: float = 1e-9) -> list[int]:
    """Rows where the explanation output does not match the model output in value."""
    rows = dataset.rows if isinstance(dataset, Dataset) else np.atleast_2d(np.asarray(dataset, dtype=float))
    diff = np.abs(model.predict_batch(rows) - _outputs(explanation, rows))
    return [int(i) for i in np.flatnonzero(diff > tol)]


def _perturbation_points(x, sample, sigma, n, seed):
    """Points and weights for infidelity: a LocalSample, a PerturbationSpec or raw rows."""
    if sample is None:
        sample = local_sample(x, sigma, n, seed)
    if isinstance(sample, LocalSample):
        return sample.points, sample.weights
    if isinstance(sample, PerturbationSpec):
        pts = sample_region(x, sample)
        return pts, np.ones(len(pts))
    pts = np.atleast_2d(np.asarray(sample, dtype=float))
    return pts, np.ones(len(pts))


def local_infidelity(explanation, model: Model, x, sample=None, weighted: bool = False,
                     sigma: float = 0.5, n: int = 1000, seed: int = 0) -> float:
    """Mean of ``((x' - x).E - (f(x') - f(x)))^2`` over perturbations ``x'``.

    ``sample`` may be a LocalSample, a PerturbationSpec or an array of points;
    by default ``n`` Gaussian points of scale ``sigma`` are drawn. With
    ``weighted`` the LocalSample kernel weights replace the uniform average.
    """
    x = as_vector(x, model.dim)
    e = resolve_attribution(explanation, model, x)
    pts, w = _perturbation_points(x, sample, sigma, n, seed)
    if not weighted:
        w = np.ones(len(pts))
    p = w / w.sum()
    r = (pts - x) @ e - (model.predict_batch(pts) - model.predict(x))
    return float(p @ (r * r))


def disagreement(decision_set, model: Model, dataset) -> int:
    """Sum over rules m of the rows where the set disagrees with the model and outputs c_m."""
    rows = dataset.rows if isinstance(dataset, Dataset) else np.atleast_2d(np.asarray(dataset, dtype=float))
    pred = np.array([decision_set.classify(r) for r in rows])
    mismatch = pred != _classes(model, rows)
    return int(sum(np.sum(mismatch & (pred == rule.cls)) for rule in decision_set.rules))


# ---------------------------------------------------------------------------
# Attribution fidelity
# ---------------------------------------------------------------------------


def _setup(explainer, model, x, baseline):
    x = as_vector(x, model.dim)
    x0 = resolve_baseline(baseline, model.dim)
    return x, x0, resolve_attribution(explainer, model, x)


def ablation_fidelity(mode: str, explainer, model: Model, x, s: float, baseline=None,
                      signed: bool = False) -> float:
    """Output change from discarding (``discard_top``) or keeping only (``retain_top``)
    the top ``ceil(sK)`` features."""
    x, x0, e = _setup(explainer, model, x, baseline)
    top = top_k_subset(e, proportion_count(s, model.dim))
    if mode == "discard_top":
        xm = mask_retain(x, complement(top, model.dim), x0)
    elif mode == "retain_top":
        xm = mask_retain(x, top, x0)
    else:
        raise InvalidInputError(f"unknown ablation mode {mode!r}")
    d = model.predict(x) - model.predict(xm)
    return float(d if signed else abs(d))


@dataclass
class FidelityCurve:
    grid: np.ndarray
    values: np.ndarray
    auc: float
    mode: str = ""

    def to_csv(self) -> str:
        lines = ["s,value"] + [f"{s!r},{v!r}" for s, v in zip(self.grid.tolist(), self.values.tolist())]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"mode": self.mode, "grid": self.grid.tolist(), "values": self.values.tolist(),
                "auc": self.auc}


def trapezoid_auc(grid, values) -> float:
    return float(np.trapezoid(values, grid)) if len(grid) > 1 else 0.0


def perturbation_curve(mode: str, explainer, model: Model, x, baseline=None, grid=None) -> FidelityCurve:
    """Deletion (``f(x_{E/s})``) or insertion (``f(x_{E_s})``) curve with trapezoidal AUC."""
    x, x0, e = _setup(explainer, model, x, baseline)
    k = model.dim
    if grid is None:
        grid = np.arange(k + 1) / k
    grid = np.asarray(grid, dtype=float)
    counts = np.rint(grid * k)
    if np.any(np.abs(grid * k - counts) > 1e-9) or np.any(grid < 0) or np.any(grid > 1):
        raise InvalidInputError("curve grid must be a subset of {0, 1/K, ..., 1}")
    if np.any(np.diff(grid) <= 0):
        raise InvalidInputError("curve grid must be strictly increasing")
    order = rank_features(e)
    values = []
    for c in counts.astype(int):
        top = order[:c]
        if mode == "deletion":
            xm = mask_retain(x, complement(top, k), x0)
        elif mode == "insertion":
            xm = mask_retain(x, top, x0)
        else:
            raise InvalidInputError(f"unknown curve mode {mode!r}")
        values.append(model.predict(xm))
    values = np.array(values)
    return FidelityCurve(grid, values, trapezoid_auc(grid, values), mode)


@dataclass
class SubsetRobustnessResult:
    value: float
    censored: bool
    subset: tuple
    witness: np.ndarray | None = None


def _first_flip(model, x, c0, u, max_radius, levels=48):
    """Smallest ``t`` on a geometric grid with a class flip at ``x + t u``, refined by bisection."""
    ts = max_radius * 2.0 ** -np.arange(levels - 1, -1, -1, dtype=float)
    lo = 0.0
    for t in ts:
        if model.classify(x + t * u) != c0:
            hi = t
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                if model.classify(x + mid * u) != c0:
                    hi = mid
                else:
                    lo = mid
            return hi
        lo = t
    return None


def subset_robustness(explainer, model: Model, x, s: float, max_radius: float | None = None,
                      n_directions: int = 64, seed: int = 0) -> SubsetRobustnessResult:
    """Best-found smallest l2 perturbation supported on the top ``ceil(sK)`` features
    that changes the model's class.

    Candidate directions are the model gradient restricted to the subset (both
    signs), random directions, and local random refinements of the best one.
    Along each direction the flip point is bracketed on a geometric grid and
    bisected. If no flip is found within ``max_radius`` the result is censored
    at ``max_radius``.
    """
    x = as_vector(x, model.dim)
    e = resolve_attribution(explainer, model, x)
    subset = top_k_subset(e, proportion_count(s, model.dim))
    if max_radius is None:
        max_radius = 10.0 * max(1.0, float(np.linalg.norm(x)))
    if not subset:
        return SubsetRobustnessResult(float(max_radius), True, subset)
    idx = list(subset)
    c0 = model.classify(x)
    rng = np.random.default_rng(seed)

    def embed(v):
        u = np.zeros(model.dim)
        u[idx] = v
        n = np.linalg.norm(u)
        return u / n if n > 0 else None

    directions = []
    if model.has("gradient"):
        g = embed(np.asarray(model.gradient(x))[idx])
        if g is not None:
            directions += [g, -g]
    directions += [embed(rng.normal(size=len(idx))) for _ in range(n_directions)]
    best, best_u = None, None
    for u in directions:
        if u is None:
            continue
        t = _first_flip(model, x, c0, u, max_radius if best is None else best)
        if t is not None and (best is None or t < best):
            best, best_u = t, u
    if best is None:
        return SubsetRobustnessResult(float(max_radius), True, subset)
    # random local refinement of the best direction with shrinking spread
    spread = 0.5
    while spread > 1e-4 and len(idx) > 1:
        improved = False
        for _ in range(8):
            u = embed(best_u[idx] + spread * rng.normal(size=len(idx)))
            t = _first_flip(model, x, c0, u, best)
            if t is not None and t < best:
                best, best_u, improved = t, u, True
        if not improved:
            spread /= 2.0
    return SubsetRobustnessResult(float(best), False, subset, x + best * best_u)


def auc_robustness(explainer, model: Model, x, max_radius: float | None = None, seed: int = 0):
    """Area under subset robustness over ``s = 1/K, ..., 1``; returns a FidelityCurve."""
    k = model.dim
    grid = np.arange(1, k + 1) / k
    vals = np.array([subset_robustness(explainer, model, x, s, max_radius, seed=seed).value
                     for s in grid])
    return FidelityCurve(grid, vals, trapezoid_auc(grid, vals), "subset-robustness")


def missingness_check(explanation, x, baseline=None, tol: float = 1e-12) -> list[int]:
    """Features equal to their baseline value whose attribution exceeds ``tol``."""
    x = as_vector(x)
    e = as_vector(explanation, len(x), "attribution")
    x0 = resolve_baseline(baseline, len(x))
    simplified = x != x0
    return [int(k) for k in np.flatnonzero(~simplified & (np.abs(e) > tol))]


def _pair_loss(name: str):
    if name == "squared":
        return lambda a, b: (a - b) ** 2
    if name == "absolute":
        return lambda a, b: np.abs(a - b)
    if name == "zero_one":
        return lambda a, b: (a != b).astype(float)
    raise InvalidInputError(f"unknown loss {name!r}")


def non_representativeness(examples, model: Model, x, loss: str = "squared",
                           dataset: Dataset | None = None) -> float:
    """Mean loss between the model output at ``x`` and at each exemplar."""
    if isinstance(examples, ExampleSet):
        if dataset is None:
            raise InvalidInputError("an ExampleSet needs the dataset it indexes")
        rows = examples.rows(dataset)
    else:
        rows = np.atleast_2d(np.asarray(examples, dtype=float))
    if rows.size == 0:
        raise InvalidInputError("example set is empty")
    x = as_vector(x, model.dim)
    return float(np.mean(_pair_loss(loss)(model.predict(x), model.predict_batch(rows))))


def concept_faithfulness(concept_model, model: Model, validation: Dataset, steps: int = 500) -> float:
    """``(best head accuracy on concepts - 1/C) / (model accuracy - 1/C)``, clipped at 0.

    The best head is the better of the concept model's own head and a
    logistic head fitted on the concept scores, so the value is a lower bound
    on the supremum over heads.
    """
    if validation.labels is None:
        raise InvalidInputError("concept faithfulness needs labels")
    classes, y = np.unique(validation.labels, return_inverse=True)
    n_classes = len(classes)
    if n_classes < 2:
        raise DegenerateSampleError("labels contain a single class")
    labels = classes[y]
    a_r = 1.0 / n_classes
    rows = validation.rows
    model_acc = float(np.mean(_classes(model, rows) == labels))
    denom = model_acc - a_r
    if denom <= 0:
        raise DegenerateSampleError("model accuracy does not exceed chance")
    concepts = concept_model.concepts_batch(rows)
    W, b = fit_softmax(concepts, y, n_classes, steps=steps)
    fit_acc = float(np.mean(np.argmax(concepts @ W.T + b, axis=1) == y))
    head_acc = float(np.mean(_classes(concept_model, rows) == labels))
    return max(0.0, (max(fit_acc, head_acc) - a_r) / denom)


def ordering_score(mode: str, explainer, model: Model, x, baseline=None) -> float:
    """Sufficiency or necessity ordering over the ``K+`` positively attributed features."""
    x, x0, e = _setup(explainer, model, x, baseline)
    k_pos = int(np.sum(e > 0))
    f0 = model.predict(x0)
    k = model.dim
    if mode == "sufficiency":
        cap = model.predict(mask_retain(x, top_k_subset(e, k_pos), x0))
        terms = [min(model.predict(mask_retain(x, top_k_subset(e, j), x0)), cap) - f0
                 for j in range(k_pos + 1)]
    elif mode == "necessity":
        terms = [max(model.predict(mask_retain(x, complement(top_k_subset(e, j), k), x0)) - f0, 0.0)
                 for j in range(k_pos + 1)]
    else:
        raise InvalidInputError(f"unknown ordering mode {mode!r}")
    return float(np.mean(terms))


def _correlate(a, b, method: str) -> float:
    if method == "pearson":
        return pearson(a, b)
    if method == "spearman":
        return spearman(a, b)
    raise InvalidInputError(f"unknown correlation {method!r}")


def single_feature_monotonicity(direction: str, explainer, model: Model, x, baseline=None,
                                method: str = "pearson") -> float:
    """Correlation of attributions with the output when each feature alone is removed
    (``decrease``, negated) or alone retained (``increase``)."""
    x, x0, e = _setup(explainer, model, x, baseline)
    k = model.dim
    if direction == "decrease":
        out = [model.predict(mask_retain(x, complement([i], k), x0)) for i in range(k)]
        return -_correlate(e, out, method) + 0.0
    if direction == "increase":
        out = [model.predict(mask_retain(x, [i], x0)) for i in range(k)]
        return _correlate(e, out, method)
    raise InvalidInputError(f"unknown direction {direction!r}")


def _subsets(k: int, size: int, n_subsets: int, seed: int, cap: int):
    """All size-``size`` subsets when there are at most ``cap``, else distinct random ones."""
    total = math.comb(k, size)
    if total <= cap:
        return list(combinations(range(k), size)), "exact"
    rng = np.random.default_rng(seed)
    want = min(n_subsets, total)
    seen, out = set(), []
    while len(out) < want:
        s = tuple(sorted(rng.choice(k, size=size, replace=False).tolist()))
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out, f"monte-carlo({want})"


def attribution_faithfulness(explainer, model: Model, x, s: float, n_subsets: int = 100,
                             seed: int = 0, baseline=None,
                             cap: int = SUBSET_ENUMERATION_CAP) -> float:
    """Pearson correlation over subsets S of (sum of E over S, f(x) - f(x with S removed))."""
    x, x0, e = _setup(explainer, model, x, baseline)
    k = model.dim
    size = proportion_count(s, k)
    if size < 1:
        raise InvalidInputError("retention proportion selects no features")
    subsets, _ = _subsets(k, size, n_subsets, seed, cap)
    fx = model.predict(x)
    attr = [float(np.sum(e[list(S)])) for S in subsets]
    delta = [fx - model.predict(mask_retain(x, complement(S, k), x0)) for S in subsets]
    if len(subsets) < 2:
        warnings.warn("a single subset gives no correlation; value set to 0", ZeroVarianceWarning,
                      stacklevel=2)
        return 0.0
    return pearson(attr, delta)


def resampled_losses(model: Model, x, dataset: Dataset, n: int = 100, seed: int = 0,
                     loss: str = "squared") -> np.ndarray:
    """Per-feature mean loss when that feature alone is redrawn from its empirical marginal."""
    x = as_vector(x, model.dim)
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    rng = np.random.default_rng(seed)
    lf = _pair_loss(loss)
    fx = model.predict(x)
    out = np.empty(model.dim)
    for i in range(model.dim):
        X = np.tile(x, (n, 1))
        X[:, i] = rng.choice(dataset.rows[:, i], size=n, replace=True)
        out[i] = float(np.mean(lf(fx, model.predict_batch(X))))
    return out


def spearman_monotonicity(explainer, model: Model, x, dataset: Dataset, loss: str = "squared",
                          n: int = 100, seed: int = 0) -> float:
    """Spearman correlation of ``|E_i|`` with the loss from resampling feature ``i``."""
    e = resolve_attribution(explainer, model, as_vector(x, model.dim))
    return spearman(np.abs(e), resampled_losses(model, x, dataset, n, seed, loss))


def non_sensitivity(explainer, model: Model, x, dataset: Dataset, tau: float = 1e-8,
                    n: int = 100, seed: int = 0, loss: str = "squared") -> int:
    """Size of the symmetric difference between zero-attribution and no-effect features."""
    if tau < 0:
        raise InvalidInputError("tau must be >= 0")
    e = resolve_attribution(explainer, model, as_vector(x, model.dim))
    zero_attr = set(np.flatnonzero(np.abs(e) <= tau).tolist())
    no_effect = set(np.flatnonzero(resampled_losses(model, x, dataset, n, seed, loss) <= tau).tolist())
    return len(zero_attr ^ no_effect)


def monotonic_consistency_check(explainer, model_a: Model, model_b: Model, x, baseline=None,
                                tol: float = 0.0) -> list[int]:
    """Features whose removal hurts one model at least as much but whose attribution is lower."""
    if model_a.dim != model_b.dim:
        raise InvalidInputError("models differ in input dimension")
    x = as_vector(x, model_a.dim)
    x0 = resolve_baseline(baseline, model_a.dim)
    ea = resolve_attribution(explainer, model_a, x)
    eb = resolve_attribution(explainer, model_b, x)
    k = model_a.dim
    out = []
    for i in range(k):
        xi = mask_retain(x, complement([i], k), x0)
        da = model_a.predict(x) - model_a.predict(xi)
        db = model_b.predict(x) - model_b.predict(xi)
        if (da >= db - tol and ea[i] < eb[i] - tol) or (db >= da - tol and eb[i] < ea[i] - tol):
            out.append(i)
    return out


@dataclass
class ProportionalityResult:
    value: float
    top_set: tuple
    bottom_set: tuple
    target: float
    crossing_excess: tuple = field(default=(0.0, 0.0))


def _accumulate(order, e, target, slack):
    chosen, acc = [], 0.0
    for i in order:
        if acc >= target - slack:
            break
        chosen.append(i)
        acc += e[i]
    return tuple(chosen), acc - target


def proportionality_gap(mode: str, explainer, model: Model, x, s: float,
                        baseline=None) -> ProportionalityResult:
    """Compare the top and bottom feature sets each carrying a fraction ``s`` of the attribution.

    Both sets grow greedily (from the top and from the bottom of the ranking)
    until their attribution first reaches ``s * total``; ``crossing_excess``
    reports how far each overshoots. ``sufficiency`` compares the retained
    sets, ``necessity`` their complements.
    """
    if not 0 < s < 1:
        raise InvalidInputError("s must lie strictly between 0 and 1")
    x, x0, e = _setup(explainer, model, x, baseline)
    if np.any(e < 0):
        raise InvalidInputError("proportionality needs non-negative attributions")
    k = model.dim
    target = s * float(e.sum())
    slack = 1e-12 * max(1.0, float(e.sum()))
    order = rank_features(e)
    s1, ex1 = _accumulate(order, e, target, slack)
    s2, ex2 = _accumulate(order[::-1], e, target, slack)
    if mode == "sufficiency":
        a, b = mask_retain(x, s1, x0), mask_retain(x, s2, x0)
    elif mode == "necessity":
        a = mask_retain(x, complement(s1, k), x0)
        b = mask_retain(x, complement(s2, k), x0)
    else:
        raise InvalidInputError(f"unknown proportionality mode {mode!r}")
    return ProportionalityResult(abs(model.predict(a) - model.predict(b)), tuple(sorted(s1)),
                                 tuple(sorted(s2)), target, (ex1, ex2))


def summation_to_delta_residual(explanation, model: Model, x, baseline=None) -> float:
    """``|sum E - (f(x) - f(x0))|``."""
    x, x0, e = _setup(explanation, model, x, baseline)
    return abs(float(np.sum(e)) - (model.predict(x) - model.predict(x0)))


def sensitivity_n_residual(explanation, model: Model, x, n: int, n_subsets: int = 100,
                           seed: int = 0, baseline=None, cap: int = SUBSET_ENUMERATION_CAP) -> float:
    """Max over size-``n`` subsets S of ``|sum_S E - (f(x) - f(x with S removed))|``."""
    x, x0, e = _setup(explanation, model, x, baseline)
    k = model.dim
    if not 1 <= n <= k:
        raise InvalidInputError(f"n={n} outside 1..{k}")
    subsets, _ = _subsets(k, n, n_subsets, seed, cap)
    fx = model.predict(x)
    return max(abs(float(np.sum(e[list(S)])) - (fx - model.predict(mask_retain(x, complement(S, k), x0))))
               for S in subsets)


def relevance_conservation_check(result: LRPResult, model: Model, x) -> list[float]:
    """Per-layer ``|sum_i R_i - f(x)|``, input layer first."""
    fx = model.predict(x)
    return [abs(float(np.sum(r)) - fx) for r in result.relevances]


# ---------------------------------------------------------------------------
# Pertinent positives / negatives
# ---------------------------------------------------------------------------

MAX_PERTINENT_FEATURES = 12


def _minimal_subset(k, candidates, accept):
    for size in range(len(candidates) + 1):
        for S in combinations(candidates, size):
            if accept(S):
                return tuple(S)
    return None


def pertinent_positive(model: Model, x, baseline=None):
    """Smallest feature set whose retention alone (rest at baseline) keeps the class."""
    x = as_vector(x, model.dim)
    if model.dim > MAX_PERTINENT_FEATURES:
        raise InvalidInputError(f"pertinent search is exponential; K <= {MAX_PERTINENT_FEATURES}")
    x0 = resolve_baseline(baseline, model.dim)
    c0 = model.classify(x)
    return _minimal_subset(model.dim, list(range(model.dim)),
                           lambda S: model.classify(mask_retain(x, S, x0)) == c0)


def pertinent_negative(model: Model, x, present, baseline=None):
    """Smallest set of baseline-valued (absent) features whose switch to ``present``
    values changes the class; None when no such set exists."""
    x = as_vector(x, model.dim)
    if model.dim > MAX_PERTINENT_FEATURES:
        raise InvalidInputError(f"pertinent search is exponential; K <= {MAX_PERTINENT_FEATURES}")
    x0 = resolve_baseline(baseline, model.dim)
    present = as_vector(present, model.dim, "present")
    c0 = model.classify(x)
    absent = [int(i) for i in np.flatnonzero(x == x0)]

    def flips(S):
        z = x.copy()
        z[list(S)] = present[list(S)]
        return model.classify(z) != c0

    found = _minimal_subset(model.dim, absent, flips)
    return found if found else None
