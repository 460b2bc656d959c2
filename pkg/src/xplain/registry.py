"""Name-keyed registries of explainers and metrics used by the command line harness.

A metric entry binds a kebab-case name to a function ``fn(ctx, **params)``
returning a :class:`Outcome`. ``requires`` lists what the evaluation context
must provide; ``default`` marks entries that run in the default suite when
their requirements are met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from pathlib import Path
from typing import Any, Callable

import numpy as np

from xplain import complexity as cx
from xplain import faithfulness as fa
from xplain import homogeneity as hg
from xplain import robustness as rb
from xplain.core import (
    GRADIENT,
    LOGITS,
    PARAMETERS,
    REPRESENTATION,
    Dataset,
    ExampleSet,
    InvalidInputError,
    Model,
    resolve_attribution,
    resolve_baseline,
)
from xplain.fixtures import explainers as ex
from xplain.fixtures.fitting import retrain_permuted_labels
from xplain.fixtures.models import ConceptToy, TinyMLP, TwoLevelDecisionSet, randomize_parameters
from xplain.fixtures.specs import load_model
from xplain.perturb import Hyperbox, PerturbationSpec, region_from_dict, worst_case_search
from xplain.simdist import alignment

# ---------------------------------------------------------------------------
# Explainers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplainerEntry:
    fn: Callable
    params: tuple
    stochastic: bool = False
    needs_gradient: bool = True


EXPLAINERS = {
    "gradient": ExplainerEntry(ex.explain_gradient, ()),
    "input-x-gradient": ExplainerEntry(ex.explain_input_x_gradient, ("baseline",)),
    "integrated-gradients": ExplainerEntry(ex.explain_integrated_gradients, ("baseline", "steps")),
    "smoothgrad": ExplainerEntry(ex.explain_smoothgrad, ("sigma", "n", "seed"), stochastic=True),
    "shapley-exact": ExplainerEntry(ex.explain_shapley_exact, ("baseline",), needs_gradient=False),
    "lrp": ExplainerEntry(ex.explain_lrp_attribution, ("epsilon",)),
    "lime": ExplainerEntry(ex.explain_lime, ("sigma", "n", "seed", "kernel_width", "lambda1", "lambda2"),
                           stochastic=True, needs_gradient=False),
}


def make_explainer(name: str, params: dict, seed: int, dataset: Dataset | None = None,
                   dim: int | None = None):
    """Bind explainer parameters; returns ``(callable(model, x), resolved params)``."""
    if name not in EXPLAINERS:
        raise InvalidInputError(f"unknown explainer {name!r}")
    entry = EXPLAINERS[name]
    params = dict(params)
    unknown = set(params) - set(entry.params)
    if unknown:
        raise InvalidInputError(f"explainer {name!r} has no parameter(s) {sorted(unknown)}")
    if entry.stochastic:
        params.setdefault("seed", seed)
    bound = dict(params)
    if "baseline" in bound and dim is not None:
        bound["baseline"] = resolve_baseline(bound["baseline"], dim, dataset)
    return partial(entry.fn, **bound), params


# ---------------------------------------------------------------------------
# Evaluation context and metric entries
# ---------------------------------------------------------------------------


@dataclass
class EvalContext:
    model: Model
    dataset: Dataset
    x: np.ndarray
    explainer: Callable
    explainer_name: str
    explainer_params: dict
    seed: int
    base_dir: Path = Path(".")

    def load(self, path) -> Model:
        p = Path(path)
        return load_model(p if p.is_absolute() else self.base_dir / p)

    def attribution(self) -> np.ndarray:
        return resolve_attribution(self.explainer, self.model, self.x)

    def spec(self, params) -> PerturbationSpec:
        region = region_from_dict(params.get("region", {"lp": 2, "r": 0.1}))
        return PerturbationSpec(region, int(params.get("n", 1000)), int(params.get("seed", self.seed)))


@dataclass
class Outcome:
    value: Any
    details: dict = field(default_factory=dict)
    n_samples: int | None = None
    estimator: str = "exact"


@dataclass(frozen=True)
class MetricEntry:
    name: str
    fn: Callable
    params: dict
    requires: frozenset = frozenset()
    stochastic: bool = False
    default: bool = True


METRICS: dict[str, MetricEntry] = {}


def metric(name, params=None, requires=(), stochastic=False, default=True):
    def deco(fn):
        METRICS[name] = MetricEntry(name, fn, dict(params or {}), frozenset(requires), stochastic, default)
        return fn
    return deco


def _is_decision_set(m):
    return isinstance(m, TwoLevelDecisionSet)


def context_capabilities(ctx: EvalContext) -> set:
    caps = {"attribution"}
    m = ctx.model
    if m.has(GRADIENT):
        caps.add("gradient")
    if m.has(PARAMETERS):
        caps.add("parameters")
    if m.has(LOGITS) and m.n_outputs > 1:
        caps.add("multilogit")
    if m.has(REPRESENTATION) or m.has(LOGITS):
        caps.add("representation")
    if isinstance(m, TinyMLP) and all(l.act in ("relu", "identity") for l in m.layers):
        caps.add("lrp")
    if _is_decision_set(m):
        caps.add("decision_set")
    else:
        caps.add("blackbox")
    if isinstance(m, ConceptToy):
        caps.add("concept")
    if ctx.dataset.labels is not None:
        caps.add("labels")
    if ctx.dataset.groups is not None and len(set(ctx.dataset.groups.tolist())) > 1:
        caps.add("groups")
    if ctx.dataset.protected:
        caps.add("protected")
    if ctx.explainer_name in ("input-x-gradient", "integrated-gradients", "shapley-exact"):
        caps.add("baseline_explainer")
    return caps


def default_suite(ctx: EvalContext) -> list[str]:
    caps = context_capabilities(ctx)
    return [n for n, e in METRICS.items() if e.default and e.requires <= caps]


def _search_outcome(res: rb.SensitivityResult, **extra) -> Outcome:
    details = {"witness": res.witness, **res.flags, **extra}
    if res.stderr is not None:
        details["stderr"] = res.stderr
    return Outcome(res.value, details, res.n, res.estimator)


REGION = {"region": {"lp": 2, "r": 0.1}, "n": 1000, "seed": None}
SEARCH = {**REGION, "strategy": "refine"}

# --------------------------- robustness ------------------------------------


@metric("max-sensitivity", {**SEARCH, "dist": "lp"}, stochastic=True)
def _max_sensitivity(ctx, **p):
    return _search_outcome(rb.max_sensitivity(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                              p["dist"], p["strategy"]))


@metric("local-stability", {**SEARCH, "lam": None}, stochastic=True)
def _local_stability(ctx, **p):
    return _search_outcome(rb.local_stability(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                              p["lam"], p["strategy"]))


@metric("lipschitz-globally-stable", {"lam": 1.0, "n": 200, "seed": None}, stochastic=True)
def _lipschitz_global(ctx, **p):
    res = rb.lipschitz_global_check(ctx.explainer, ctx.model, ctx.dataset, p["lam"], p["n"],
                                    p["seed"])
    return _search_outcome(res)


@metric("relative-stability", {**SEARCH, "p": 2, "eps": 1e-8}, stochastic=True)
def _relative_stability(ctx, **p):
    return _search_outcome(rb.relative_stability(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                                 p["p"], p["eps"], p["strategy"]))


@metric("representation-stability", {**SEARCH, "p": 2, "eps": 1e-8}, stochastic=True,
        requires=("representation",))
def _representation_stability(ctx, **p):
    return _search_outcome(rb.representation_stability(ctx.explainer, ctx.model, ctx.x,
                                                       ctx.spec(p), p["p"], p["eps"], p["strategy"]))


@metric("average-sensitivity", {**REGION, "dist": "lp"}, stochastic=True)
def _average_sensitivity(ctx, **p):
    return _search_outcome(rb.average_sensitivity(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                                  p["dist"]))


@metric("top-k-dissimilarity", {**SEARCH, "k": 1}, stochastic=True)
def _topk_dissimilarity(ctx, **p):
    return _search_outcome(rb.adversarial_dissimilarity(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                                        "topk", k=p["k"], strategy=p["strategy"]))


@metric("targeted-dissimilarity", {**SEARCH, "subset": None}, stochastic=True, default=False)
def _targeted_dissimilarity(ctx, **p):
    return _search_outcome(rb.adversarial_dissimilarity(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                                        "targeted", subset=p["subset"],
                                                        strategy=p["strategy"]))


@metric("center-of-mass-dissimilarity", SEARCH, stochastic=True)
def _com_dissimilarity(ctx, **p):
    return _search_outcome(rb.adversarial_dissimilarity(ctx.explainer, ctx.model, ctx.x, ctx.spec(p),
                                                        "center_of_mass", strategy=p["strategy"]))


@metric("targeted-regularizing-loss", {**SEARCH, "target": None, "lam": 1.0}, stochastic=True)
def _targeted_loss(ctx, **p):
    from xplain.perturb import eval_targeted_loss
    target = ctx.attribution() if p["target"] is None else np.asarray(p["target"], dtype=float)
    spec = ctx.spec(p)
    res = worst_case_search(
        lambda z: -eval_targeted_loss(ctx.model, ctx.explainer, z, ctx.x, target, p["lam"]),
        ctx.x, spec.region, p["strategy"], spec.n, spec.seed)
    return Outcome(-res.value, {"witness": res.x, "best-found": True}, res.evaluations,
                   f"search({res.evaluations})")


@metric("input-invariance", {"c": 1.0, "p": 2})
def _input_invariance(ctx, **p):
    return Outcome(rb.input_invariance(ctx.explainer, ctx.model, ctx.x, p["c"], p["p"]))


@metric("hyperbox-precision", {"half_width": 0.5, "lam": 0.05, "variant": "absolute"})
def _hyperbox_precision(ctx, **p):
    box = Hyperbox.around(ctx.x, p["half_width"])
    return Outcome(rb.hyperbox_precision(ctx.model, ctx.x, box, ctx.dataset, p["lam"], p["variant"]))


@metric("counterfactual-fairness", {"feature": None, "values": None, "dist": "lp"},
        requires=("protected",))
def _counterfactual_fairness(ctx, **p):
    feature = p["feature"] if p["feature"] is not None else min(ctx.dataset.protected)
    return Outcome(rb.counterfactual_fairness_gap(ctx.explainer, ctx.model, ctx.x, int(feature),
                                                  p["values"], p["dist"], ctx.dataset))


@metric("model-parameter-sensitivity", {"mode": "all", "layer": None, "seed": None, "dist": "lp"},
        requires=("parameters",), stochastic=True)
def _model_parameter_sensitivity(ctx, **p):
    other = randomize_parameters(ctx.model, p["mode"], p["layer"], p["seed"])
    return Outcome(rb.model_randomization_sensitivity(ctx.explainer, ctx.model, other, ctx.x,
                                                      p["dist"]), n_samples=1, estimator="randomized")


@metric("training-label-sensitivity", {"template": "linear", "seed": None, "dist": "lp"},
        requires=("labels", "gradient"), stochastic=True)
def _training_label_sensitivity(ctx, **p):
    other = retrain_permuted_labels(p["template"], ctx.dataset, p["seed"])
    return Outcome(rb.model_randomization_sensitivity(ctx.explainer, ctx.model, other, ctx.x,
                                                      p["dist"]), n_samples=1, estimator="permuted")


@metric("adversarial-sensitivity", {"i": 0, "j": 1, "window": None, "perturbed": None,
                                    "layer": -1, "seed": None, "rows": 20},
        requires=("multilogit", "parameters"), stochastic=True, default=False)
def _adversarial_sensitivity(ctx, **p):
    if p["window"] is None:
        raise InvalidInputError("adversarial-sensitivity needs an explicit window [lo, hi]")
    other = (ctx.load(p["perturbed"]) if p["perturbed"]
             else randomize_parameters(ctx.model, "layer", p["layer"], p["seed"]))
    rows = ctx.dataset.rows[: int(p["rows"])]
    return Outcome(rb.adversarial_model_sensitivity(ctx.explainer, ctx.model, other, rows,
                                                    p["i"], p["j"], p["window"]),
                   n_samples=len(rows), estimator="exact")


@metric("hyperparameter-sensitivity", {"grid": None, "dist": "lp"}, requires=("baseline_explainer",))
def _hyperparameter_sensitivity(ctx, **p):
    entry = EXPLAINERS[ctx.explainer_name]
    grid = p["grid"]
    if grid is None:
        grid = [{**ctx.explainer_params, "baseline": "zero"}, {**ctx.explainer_params, "baseline": "mean"}]
    configs = []
    for g in grid:
        fn, _ = make_explainer(ctx.explainer_name, g, ctx.seed, ctx.dataset, ctx.model.dim)
        configs.append(fn)
    family = lambda model, x, i: configs[i](model, x)
    value, pair = rb.explainer_config_grid(family, [{"i": i} for i in range(len(configs))],
                                           ctx.model, ctx.x, p["dist"])
    return Outcome(value, {"pair": list(pair), "grid": grid})


@metric("alignment")
def _alignment(ctx):
    return Outcome(alignment(ctx.x, ctx.attribution()))

# --------------------------- faithfulness ----------------------------------


def _surrogate(ctx, p):
    kind = p.get("surrogate", "linear")
    if kind == "linear":
        return ex.fit_best_subset_linear(ctx.model, ctx.dataset, ctx.model.dim)
    if kind == "best-subset":
        return ex.fit_best_subset_linear(ctx.model, ctx.dataset, int(p["size"]))
    if kind == "local-linear":
        return ex.fit_local_linear(ctx.model, ctx.x, seed=ctx.seed)
    if kind == "decision-set":
        return ctx.load(p["decision_set"])
    raise InvalidInputError(f"unknown surrogate {kind!r}")


SURROGATE = {"surrogate": "linear", "size": None, "decision_set": None}


@metric("loss-based-fidelity", {**SURROGATE, "loss": "mse"}, requires=("blackbox",))
def _loss_based_fidelity(ctx, **p):
    sur = _surrogate(ctx, p)
    return Outcome(fa.loss_based_fidelity(sur, ctx.model, ctx.dataset, p["loss"]),
                   {"surrogate": getattr(sur, "info", {}).get("subset")})


@metric("locally-accurate", {**SURROGATE, "tol": 1e-9}, requires=("blackbox",))
def _locally_accurate(ctx, **p):
    rows = fa.local_accuracy(_surrogate(ctx, p), ctx.model, ctx.dataset, p["tol"])
    return Outcome(len(rows), {"rows": rows})


@metric("local-infidelity", {"sigma": 0.5, "n": 1000, "seed": None, "weighted": False},
        stochastic=True)
def _local_infidelity(ctx, **p):
    v = fa.local_infidelity(ctx.explainer, ctx.model, ctx.x, None, p["weighted"], p["sigma"],
                            p["n"], p["seed"])
    return Outcome(v, n_samples=p["n"], estimator=f"monte-carlo({p['n']})")


@metric("lime-loss", {"sigma": None, "n": None, "seed": None, "lambda1": None, "lambda2": None},
        requires=("blackbox",), stochastic=True)
def _lime_loss(ctx, **p):
    base = dict(ctx.explainer_params) if ctx.explainer_name == "lime" else {}
    merged = {"sigma": 0.5, "n": 1000, "seed": ctx.seed, "lambda1": 0.0, "lambda2": 0.0, **base}
    merged.update({k: v for k, v in p.items() if v is not None})
    merged.pop("kernel_width", None)
    kw = base.get("kernel_width")
    protected = {j: np.unique(ctx.dataset.rows[:, j]).tolist() for j in ctx.dataset.protected}
    sur = ex.fit_local_linear(ctx.model, ctx.x, kernel_width=kw, protected=protected, **merged)
    info = sur.info
    return Outcome(info["infidelity"],
                   {"l1": info["l1"], "objective": info["infidelity"] + merged["lambda1"] * info["l1"],
                    "coef": sur.coef},
                   merged["n"], f"monte-carlo({merged['n']})")


@metric("disagreement", {"decision_set": None}, requires=("blackbox",), default=False)
def _disagreement(ctx, **p):
    ds = ctx.load(p["decision_set"])
    return Outcome(fa.disagreement(ds, ctx.model, ctx.dataset))


@metric("comprehensiveness", {"s": 0.25, "signed": False})
def _comprehensiveness(ctx, **p):
    return Outcome(fa.ablation_fidelity("discard_top", ctx.explainer, ctx.model, ctx.x, p["s"],
                                        None, p["signed"]))


@metric("insufficiency", {"s": 0.25, "signed": False})
def _insufficiency(ctx, **p):
    return Outcome(fa.ablation_fidelity("retain_top", ctx.explainer, ctx.model, ctx.x, p["s"],
                                        None, p["signed"]))


@metric("deletion-curve", {"grid": None})
def _deletion_curve(ctx, **p):
    c = fa.perturbation_curve("deletion", ctx.explainer, ctx.model, ctx.x, None, p["grid"])
    return Outcome(c.auc, {"curve": c.to_dict()})


@metric("insertion-curve", {"grid": None})
def _insertion_curve(ctx, **p):
    c = fa.perturbation_curve("insertion", ctx.explainer, ctx.model, ctx.x, None, p["grid"])
    return Outcome(c.auc, {"curve": c.to_dict()})


@metric("subset-robustness", {"s": 0.5, "max_radius": None, "n_directions": 64, "seed": None},
        stochastic=True)
def _subset_robustness(ctx, **p):
    r = fa.subset_robustness(ctx.explainer, ctx.model, ctx.x, p["s"], p["max_radius"],
                             p["n_directions"], p["seed"])
    return Outcome(r.value, {"censored": r.censored, "subset": list(r.subset)},
                   p["n_directions"], "search")


@metric("auc-robustness", {"max_radius": None, "seed": None}, stochastic=True)
def _auc_robustness(ctx, **p):
    c = fa.auc_robustness(ctx.explainer, ctx.model, ctx.x, p["max_radius"], p["seed"])
    return Outcome(c.auc, {"curve": c.to_dict()}, 64, "search")


@metric("missingness", {"tol": 1e-12})
def _missingness(ctx, **p):
    v = fa.missingness_check(ctx.attribution(), ctx.x, None, p["tol"])
    return Outcome(len(v), {"violations": v})


@metric("non-representativeness", {"examples": [0, 1, 2], "loss": "squared"})
def _non_representativeness(ctx, **p):
    ids = [i for i in p["examples"] if i < len(ctx.dataset)]
    return Outcome(fa.non_representativeness(ExampleSet(tuple(ids)), ctx.model, ctx.x, p["loss"],
                                             ctx.dataset))


@metric("concept-faithfulness", {"concept": None, "steps": 500}, requires=("labels", "concept"))
def _concept_faithfulness(ctx, **p):
    concept = ctx.load(p["concept"]) if p["concept"] else ctx.model
    return Outcome(fa.concept_faithfulness(concept, ctx.model, ctx.dataset, p["steps"]))


@metric("sufficiency-ordering")
def _sufficiency_ordering(ctx):
    return Outcome(fa.ordering_score("sufficiency", ctx.explainer, ctx.model, ctx.x))


@metric("necessity-ordering")
def _necessity_ordering(ctx):
    return Outcome(fa.ordering_score("necessity", ctx.explainer, ctx.model, ctx.x))


@metric("monotonic-decrease", {"method": "pearson"})
def _monotonic_decrease(ctx, **p):
    return Outcome(fa.single_feature_monotonicity("decrease", ctx.explainer, ctx.model, ctx.x,
                                                  None, p["method"]))


@metric("monotonic-increase", {"method": "pearson"})
def _monotonic_increase(ctx, **p):
    return Outcome(fa.single_feature_monotonicity("increase", ctx.explainer, ctx.model, ctx.x,
                                                  None, p["method"]))


@metric("attribution-faithfulness", {"s": 0.5, "n_subsets": 100, "seed": None}, stochastic=True)
def _attribution_faithfulness(ctx, **p):
    k = ctx.model.dim
    size = math.ceil(p["s"] * k - 1e-9)
    n = min(math.comb(k, size), p["n_subsets"]) if math.comb(k, size) > fa.SUBSET_ENUMERATION_CAP \
        else math.comb(k, size)
    v = fa.attribution_faithfulness(ctx.explainer, ctx.model, ctx.x, p["s"], p["n_subsets"], p["seed"])
    return Outcome(v, n_samples=n, estimator="exact" if n == math.comb(k, size) else f"monte-carlo({n})")


@metric("spearman-monotonicity", {"n": 100, "seed": None, "loss": "squared"}, stochastic=True)
def _spearman_monotonicity(ctx, **p):
    return Outcome(fa.spearman_monotonicity(ctx.explainer, ctx.model, ctx.x, ctx.dataset, p["loss"],
                                            p["n"], p["seed"]),
                   n_samples=p["n"], estimator=f"monte-carlo({p['n']})")


@metric("monotonic-consistency", {"other": None}, default=False)
def _monotonic_consistency(ctx, **p):
    other = ctx.load(p["other"])
    v = fa.monotonic_consistency_check(ctx.explainer, ctx.model, other, ctx.x)
    return Outcome(len(v), {"violations": v})


@metric("non-sensitivity", {"tau": 1e-8, "n": 100, "seed": None, "loss": "squared"},
        stochastic=True)
def _non_sensitivity(ctx, **p):
    return Outcome(fa.non_sensitivity(ctx.explainer, ctx.model, ctx.x, ctx.dataset, p["tau"],
                                      p["n"], p["seed"], p["loss"]),
                   n_samples=p["n"], estimator=f"monte-carlo({p['n']})")


@metric("sufficiency-proportionality-s", {"s": 0.3}, default=False)
def _sufficiency_proportionality(ctx, **p):
    r = fa.proportionality_gap("sufficiency", ctx.explainer, ctx.model, ctx.x, p["s"])
    return Outcome(r.value, {"top": list(r.top_set), "bottom": list(r.bottom_set),
                             "crossing_excess": list(r.crossing_excess)})


@metric("necessity-proportionality-s", {"s": 0.7}, default=False)
def _necessity_proportionality(ctx, **p):
    r = fa.proportionality_gap("necessity", ctx.explainer, ctx.model, ctx.x, p["s"])
    return Outcome(r.value, {"top": list(r.top_set), "bottom": list(r.bottom_set),
                             "crossing_excess": list(r.crossing_excess)})


@metric("summation-to-delta")
def _summation_to_delta(ctx):
    return Outcome(fa.summation_to_delta_residual(ctx.explainer, ctx.model, ctx.x))


@metric("sensitivity-n", {"n": 1, "n_subsets": 100, "seed": None}, stochastic=True)
def _sensitivity_n(ctx, **p):
    k = ctx.model.dim
    total = math.comb(k, p["n"])
    n = total if total <= fa.SUBSET_ENUMERATION_CAP else min(total, p["n_subsets"])
    return Outcome(fa.sensitivity_n_residual(ctx.explainer, ctx.model, ctx.x, p["n"],
                                             p["n_subsets"], p["seed"]),
                   n_samples=n, estimator="exact" if n == total else f"monte-carlo({n})")


@metric("relevance-conservation", {"epsilon": 0.0}, requires=("lrp",))
def _relevance_conservation(ctx, **p):
    res = ex.explain_lrp(ctx.model, ctx.x, p["epsilon"])
    layers = fa.relevance_conservation_check(res, ctx.model, ctx.x)
    return Outcome(max(layers), {"per_layer": layers, "bias_free": not ctx.model.has_bias})


@metric("pertinent-positives")
def _pertinent_positives(ctx):
    s = fa.pertinent_positive(ctx.model, ctx.x)
    return Outcome(None if s is None else len(s), {"subset": None if s is None else list(s)})


@metric("pertinent-negatives", {"present": None})
def _pertinent_negatives(ctx, **p):
    present = ctx.dataset.rows.max(axis=0) if p["present"] is None else p["present"]
    s = fa.pertinent_negative(ctx.model, ctx.x, present)
    return Outcome(None if s is None else len(s), {"subset": None if s is None else list(s)})

# --------------------------- complexity ------------------------------------


@metric("effective-complexity", {"eps": 0.01, "n": 100, "seed": None, "loss": "squared"},
        stochastic=True)
def _effective_complexity(ctx, **p):
    r = cx.effective_complexity(ctx.explainer, ctx.model, ctx.x, ctx.dataset, p["eps"], p["n"],
                                p["seed"], p["loss"])
    return Outcome(r.k, {"losses": r.losses, "attained": r.attained}, p["n"],
                   f"monte-carlo({p['n']})")


@metric("entropy-complexity")
def _entropy_complexity(ctx):
    return Outcome(cx.entropy_complexity(ctx.attribution()))


@metric("sparsity", {"tau": 0.0})
def _sparsity(ctx, **p):
    return Outcome(cx.sparsity(ctx.attribution(), p["tau"]))


@metric("senn-instability", {"h": "identity"}, requires=("gradient",))
def _senn_instability(ctx, **p):
    return Outcome(cx.senn_instability(ctx.model, ctx.explainer, p["h"], ctx.x))


def _rules(ctx, p):
    if p.get("decision_set"):
        return ctx.load(p["decision_set"])
    if _is_decision_set(ctx.model):
        return ctx.model
    raise InvalidInputError("rule metrics need a decision set")


def _rule_metric(field_name):
    def fn(ctx, **p):
        report = cx.rule_complexity(_rules(ctx, p))
        return Outcome(getattr(report, field_name), {"report": report.to_dict()})
    return fn


for _name, _field in [("size", "size"), ("max-width", "max_width"), ("num-preds", "num_preds"),
                      ("num-dsets", "num_dsets"), ("feature-overlap", "feature_overlap"),
                      ("cognitive-chunks", "cognitive_chunks")]:
    metric(_name, {"decision_set": None}, requires=("decision_set",))(_rule_metric(_field))

# --------------------------- homogeneity -----------------------------------


@metric("faithfulness-loss-per-group", {**SURROGATE, "loss": "mse"}, requires=("groups", "blackbox"))
def _per_group(ctx, **p):
    t = hg.fidelity_per_group(_surrogate(ctx, p), ctx.model, ctx.dataset, p["loss"])
    return Outcome(t.pooled, {"table": t.to_dict()})


@metric("max-faithfulness-gap", {**SURROGATE, "loss": "mse"}, requires=("groups", "blackbox"))
def _max_gap(ctx, **p):
    t = hg.fidelity_per_group(_surrogate(ctx, p), ctx.model, ctx.dataset, p["loss"])
    return Outcome(hg.fidelity_gaps(t)["max_gap"], {"table": t.to_dict()})


@metric("mean-faithfulness-gap", {**SURROGATE, "loss": "mse"}, requires=("groups", "blackbox"))
def _mean_gap(ctx, **p):
    t = hg.fidelity_per_group(_surrogate(ctx, p), ctx.model, ctx.dataset, p["loss"])
    return Outcome(hg.fidelity_gaps(t)["mean_gap"], {"table": t.to_dict()})


def resolve_params(entry: MetricEntry, given: dict, seed: int) -> dict:
    """Merge user parameters over the declared defaults; seeds default to the global seed."""
    unknown = set(given) - set(entry.params)
    if unknown:
        raise InvalidInputError(f"metric {entry.name!r} has no parameter(s) {sorted(unknown)}")
    params = {**entry.params, **given}
    if "seed" in params and params["seed"] is None:
        params["seed"] = seed
    return params
