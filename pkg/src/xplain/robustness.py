"""Sensitivity of explanations to input, group, model and hyperparameter perturbations.

An explainer is any callable ``explainer(model, x) -> K-vector``. Max-type
metrics run :func:`xplain.perturb.worst_case_search` and report best-found
values, which are lower bounds on the true maxima. With a similarity kind
(spearman, ssim, ...) the search looks for the least similar explanation and
the reported value is that minimum similarity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from xplain.core import (
    LOGITS,
    REPRESENTATION,
    Dataset,
    DegenerateExplanationWarning,
    DegenerateSampleError,
    InvalidInputError,
    Model,
    UndefinedMetricError,
    UnsupportedCapabilityError,
    as_vector,
    rank_features,
    resolve_attribution,
)
from xplain.perturb import (
    ConstantShift,
    Hyperbox,
    LpBall,
    PerturbationSpec,
    flip_group,
    sample_region,
    worst_case_search,
)
from xplain.simdist import DistanceKind, explanation_distance, spearman


@dataclass
class SensitivityResult:
    value: float
    witness: np.ndarray | None = None
    estimator: str = "exact"
    n: int | None = None
    seed: int | None = None
    stderr: float | None = None
    flags: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _spec(spec) -> PerturbationSpec:
    if spec is None:
        return PerturbationSpec()
    if isinstance(spec, dict):
        return PerturbationSpec.from_dict(spec)
    return spec


def _search_max(score, x, spec: PerturbationSpec, strategy, budget, minimize=False):
    """Run the search on ``score`` (negated when minimizing) and wrap the result."""
    budget = spec.n if budget is None else budget
    objective = (lambda z: -score(z)) if minimize else score
    res = worst_case_search(objective, x, spec.region, strategy=strategy, budget=budget,
                            seed=spec.seed)
    value = -res.value if minimize else res.value
    return SensitivityResult(value, res.x, f"search({res.evaluations})", res.evaluations,
                             spec.seed, flags={"best-found": True, "strategy": res.strategy})


def max_sensitivity(explainer, model: Model, x, spec=None, dist="lp", strategy: str = "refine",
                    budget: int | None = None) -> SensitivityResult:
    """Largest change ``dist(E(f,x'), E(f,x))`` over the region (least similarity for similarity kinds)."""
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    kind = DistanceKind.parse(dist)
    e0 = resolve_attribution(explainer, model, x)

    def score(z):
        return explanation_distance(kind, resolve_attribution(explainer, model, z), e0)

    return _search_max(score, x, spec, strategy, budget, minimize=kind.is_similarity)


def _region_is_point(region) -> bool:
    if isinstance(region, LpBall):
        return region.r == 0
    if isinstance(region, Hyperbox):
        return region.lower == region.upper
    if isinstance(region, ConstantShift):
        return region.c == 0
    return False


def local_stability(explainer, model: Model, x, spec=None, lam: float | None = None,
                    strategy: str = "refine", budget: int | None = None) -> SensitivityResult:
    """Largest ratio ``|E(f,x) - E(f,x')| / |x - x'|`` (l2 norms) over the region.

    With ``lam`` given, ``flags["lipschitz"]`` records whether the ratio stays
    below it.
    """
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    if _region_is_point(spec.region):
        raise DegenerateSampleError("region contains only x; the stability ratio is undefined")
    e0 = resolve_attribution(explainer, model, x)

    def ratio(z):
        dx = np.linalg.norm(z - x)
        if dx == 0:
            return 0.0
        return float(np.linalg.norm(resolve_attribution(explainer, model, z) - e0) / dx)

    res = _search_max(ratio, x, spec, strategy, budget)
    if lam is not None:
        res.flags["lipschitz"] = bool(res.value <= lam)
    return res


def lipschitz_global_check(explainer, model: Model, dataset: Dataset, lam: float,
                           n_pairs: int = 1000, seed: int = 0) -> SensitivityResult:
    """Sample point pairs from the convex hull of the dataset and test the Lipschitz bound."""
    rng = np.random.default_rng(seed)
    rows = dataset.rows
    if len(rows) < 1:
        raise InvalidInputError("dataset is empty")

    def hull_point():
        a, b = rows[rng.integers(len(rows))], rows[rng.integers(len(rows))]
        t = rng.uniform()
        return t * a + (1 - t) * b

    best, witness = 0.0, None
    for _ in range(n_pairs):
        p, q = hull_point(), hull_point()
        dx = np.linalg.norm(p - q)
        if dx == 0:
            continue
        r = float(np.linalg.norm(resolve_attribution(explainer, model, p)
                                 - resolve_attribution(explainer, model, q)) / dx)
        if r > best:
            best, witness = r, np.stack([p, q])
    return SensitivityResult(best, witness, f"monte-carlo({n_pairs})", n_pairs, seed,
                             flags={"lipschitz": bool(best <= lam), "best-found": True})


def guarded_divide(num: np.ndarray, den: np.ndarray, eps: float) -> np.ndarray:
    """Elementwise ``num / den`` with ``|den| < eps`` replaced by ``eps`` carrying den's sign."""
    den = np.where(np.abs(den) < eps, np.where(den < 0, -eps, eps), den)
    return num / den


def relative_change(new, old, p: float, eps: float) -> float:
    return float(np.linalg.norm(guarded_divide(old - new, old, eps), ord=p))


def relative_stability_ratio(e, e_prime, x, x_prime, p: float = 2, eps: float = 1e-8) -> float:
    num = relative_change(e_prime, e, p, eps)
    den = max(relative_change(x_prime, x, p, eps), eps)
    return num / den


def relative_stability(explainer, model: Model, x, spec=None, p: float = 2, eps: float = 1e-8,
                       strategy: str = "refine", budget: int | None = None) -> SensitivityResult:
    """Largest relative explanation change over relative input change."""
    if eps <= 0:
        raise InvalidInputError("eps must be positive")
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    e0 = resolve_attribution(explainer, model, x)
    if not np.any(e0):
        warnings.warn("explanation is identically zero; value relies on the eps guard",
                      DegenerateExplanationWarning, stacklevel=2)

    def score(z):
        return relative_stability_ratio(e0, resolve_attribution(explainer, model, z), x, z, p, eps)

    return _search_max(score, x, spec, strategy, budget)


def _representation_fn(model: Model):
    if model.has(REPRESENTATION):
        return model.representation
    if model.has(LOGITS):
        return model.logits
    raise UnsupportedCapabilityError("model exposes neither representations nor logits")


def representation_stability(explainer, model: Model, x, spec=None, p: float = 2,
                             eps: float = 1e-8, strategy: str = "refine",
                             budget: int | None = None) -> SensitivityResult:
    """As :func:`relative_stability` with the denominator on the internal representation.

    Models without representations fall back to their logits.
    """
    rep = _representation_fn(model)
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    e0 = resolve_attribution(explainer, model, x)
    r0 = np.asarray(rep(x), dtype=float)

    def score(z):
        num = relative_change(resolve_attribution(explainer, model, z), e0, p, eps)
        den = max(relative_change(np.asarray(rep(z), dtype=float), r0, p, eps), eps)
        return num / den

    res = _search_max(score, x, spec, strategy, budget)
    res.flags["representation"] = "representation" if model.has(REPRESENTATION) else "logits"
    return res


def average_sensitivity(explainer, model: Model, x, spec=None, dist="lp") -> SensitivityResult:
    """Monte-Carlo mean of ``dist(E(f,x), E(f,x'))`` over region samples, with its standard error."""
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    kind = DistanceKind.parse(dist)
    e0 = resolve_attribution(explainer, model, x)
    samples = sample_region(x, spec)
    values = np.array([explanation_distance(kind, e0, resolve_attribution(explainer, model, z))
                       for z in samples])
    n = len(values)
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else None
    return SensitivityResult(float(values.mean()), None, f"monte-carlo({n})", n, spec.seed, stderr)


def center_of_mass(e) -> float:
    """``sum_i i |E_i| / sum_i |E_i|`` with coordinate index as position."""
    w = np.abs(np.asarray(e, dtype=float))
    total = w.sum()
    if total == 0:
        raise UndefinedMetricError("center of mass of a zero explanation is undefined")
    return float(np.arange(len(w)) @ w / total)


def adversarial_dissimilarity(explainer, model: Model, x, spec=None, objective: str = "topk",
                              k: int = 1, subset=None, strategy: str = "refine",
                              budget: int | None = None) -> SensitivityResult:
    """Best-found attack objective over the region.

    ``topk``: minus the summed weight of the originally top-``k`` features.
    ``targeted``: summed weight of the features in ``subset``.
    ``center_of_mass``: shift of the attribution center of mass.
    """
    x = as_vector(x, model.dim)
    spec = _spec(spec)
    e0 = resolve_attribution(explainer, model, x)
    if objective == "topk":
        if not 1 <= k <= model.dim:
            raise InvalidInputError(f"k={k} outside 1..{model.dim}")
        idx = rank_features(e0)[:k]
        score = lambda z: -float(np.sum(resolve_attribution(explainer, model, z)[idx]))
    elif objective == "targeted":
        idx = sorted({int(i) for i in (subset or ())})
        if not idx:
            raise InvalidInputError("targeted objective needs a non-empty feature subset")
        if idx[0] < 0 or idx[-1] >= model.dim:
            raise InvalidInputError("targeted subset index out of range")
        score = lambda z: float(np.sum(resolve_attribution(explainer, model, z)[idx]))
    elif objective == "center_of_mass":
        c0 = center_of_mass(e0)
        score = lambda z: abs(center_of_mass(resolve_attribution(explainer, model, z)) - c0)
    else:
        raise InvalidInputError(f"unknown attack objective {objective!r}")
    res = _search_max(score, x, spec, strategy, budget)
    res.flags["objective"] = objective
    return res


def input_invariance(explainer, model: Model, x, c: float = 1.0, p: float = 2) -> float:
    """Largest ``|E(f, x + c*1) - E(f, x)|_p`` over both signs of the shift."""
    if p not in (1, 2):
        raise InvalidInputError("input invariance uses p = 1 or 2")
    x = as_vector(x, model.dim)
    e0 = resolve_attribution(explainer, model, x)
    return max(float(np.linalg.norm(resolve_attribution(explainer, model, x + s) - e0, ord=p))
               for s in (c, -c))


def hyperbox_precision(model: Model, x, box: Hyperbox, dataset: Dataset, lam: float,
                       variant: str = "absolute") -> float:
    """Fraction of dataset rows inside ``box`` whose prediction stays within ``lam`` of f(x).

    ``absolute`` tests ``|f(x') - f(x)| < lam``; ``signed`` tests ``f(x') - f(x) < lam``.
    """
    x = as_vector(x, model.dim)
    if variant not in ("absolute", "signed"):
        raise InvalidInputError(f"unknown precision variant {variant!r}")
    rows = dataset.rows
    lo, hi = np.array(box.lower), np.array(box.upper)
    inside = rows[np.all((rows >= lo) & (rows <= hi), axis=1)]
    if len(inside) == 0:
        raise UndefinedMetricError("no dataset rows fall inside the box")
    diff = model.predict_batch(inside) - model.predict(x)
    if variant == "absolute":
        diff = np.abs(diff)
    return float(np.mean(diff < lam))


def counterfactual_fairness_gap(explainer, model: Model, x, feature: int, values=None,
                                dist="lp", dataset: Dataset | None = None) -> float:
    """Max over flipped group values of ``| dist(E, E') - |f(x) - f(x')| |``."""
    x = as_vector(x, model.dim)
    if dataset is not None:
        if feature not in dataset.protected:
            raise InvalidInputError(f"feature {feature} is not marked protected in the dataset")
        if values is None:
            values = np.unique(dataset.rows[:, feature])
    if values is None:
        raise InvalidInputError("no target group values given")
    values = [float(v) for v in values if float(v) != x[feature]]
    if not values:
        return 0.0
    kind = DistanceKind.parse(dist)
    e0 = resolve_attribution(explainer, model, x)
    f0 = model.predict(x)
    gaps = []
    for v in values:
        xf = flip_group(x, feature, v)
        d = explanation_distance(kind, e0, resolve_attribution(explainer, model, xf))
        gaps.append(abs(d - abs(f0 - model.predict(xf))))
    return float(max(gaps))


def model_randomization_sensitivity(explainer, model: Model, perturbed: Model, x,
                                    dist="lp") -> float:
    """``dist(E(f,x), E(f',x))``; a distance should be large, a similarity small."""
    if model.dim != perturbed.dim:
        raise InvalidInputError("models differ in input dimension")
    x = as_vector(x, model.dim)
    return explanation_distance(dist, resolve_attribution(explainer, model, x),
                                resolve_attribution(explainer, perturbed, x))


def fooling_loss(explainer, model: Model, perturbed: Model, x, i: int, j: int) -> float:
    """``SRC(E(f',x,i), E(f,x,j)) - SRC(E(f,x,i), E(f',x,i))``."""
    fi, fj, gi = model.select_output(i), model.select_output(j), perturbed.select_output(i)
    e_fi = resolve_attribution(explainer, fi, x)
    e_fj = resolve_attribution(explainer, fj, x)
    e_gi = resolve_attribution(explainer, gi, x)
    return spearman(e_gi, e_fj) - spearman(e_fi, e_gi)


def adversarial_model_sensitivity(explainer, model: Model, perturbed: Model, validation,
                                  i: int, j: int, window) -> float:
    """Fraction of validation points whose fooling loss lies in ``[window[0], window[1]]``."""
    if i == j:
        raise InvalidInputError("logits i and j must differ")
    rows = validation.rows if isinstance(validation, Dataset) else np.asarray(validation, dtype=float)
    if rows.ndim != 2 or len(rows) == 0:
        raise UndefinedMetricError("validation set is empty")
    lo, hi = (float(w) for w in window)
    if lo > hi:
        raise InvalidInputError("window lower bound exceeds upper bound")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        losses = np.array([fooling_loss(explainer, model, perturbed, r, i, j) for r in rows])
    return float(np.mean((losses >= lo) & (losses <= hi)))


def explainer_config_sensitivity(family, config_a: dict, config_b: dict, model: Model, x,
                                 dist="lp") -> float:
    """``dist(E_a(f,x), E_b(f,x))`` for one explainer family under two configurations."""
    x = as_vector(x, model.dim)
    ea = as_vector(family(model, x, **config_a), model.dim)
    eb = as_vector(family(model, x, **config_b), model.dim)
    return explanation_distance(dist, ea, eb)


def explainer_config_grid(family, configs, model: Model, x, dist="lp"):
    """Worst pair over a configuration grid: ``(value, (index_a, index_b))``.

    Worst means the largest distance, or the smallest similarity.
    """
    configs = list(configs)
    if len(configs) < 2:
        raise InvalidInputError("a configuration grid needs at least two entries")
    kind = DistanceKind.parse(dist)
    x = as_vector(x, model.dim)
    expl = [as_vector(family(model, x, **c), model.dim) for c in configs]
    best, pair = None, None
    for a, b in combinations(range(len(configs)), 2):
        v = explanation_distance(kind, expl[a], expl[b])
        worse = best is None or (v < best if kind.is_similarity else v > best)
        if worse:
            best, pair = v, (a, b)
    return best, pair
