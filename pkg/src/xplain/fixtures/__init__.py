"""Reference models, explainers and perturbed-model constructors."""

from xplain.fixtures.models import (
    ConceptToy,
    LinearModel,
    LogisticModel,
    Predicate,
    Rule,
    TinyMLP,
    TwoLevelDecisionSet,
    init_layer,
    lin3,
    random_linear,
    random_mlp,
    randomize_parameters,
)
from xplain.fixtures.explainers import (
    LocalSample,
    LRPResult,
    coalition_values,
    explain_gradient,
    explain_input_x_gradient,
    explain_integrated_gradients,
    explain_lime,
    explain_lrp,
    explain_lrp_attribution,
    explain_shapley_exact,
    explain_smoothgrad,
    fit_best_subset_linear,
    fit_local_linear,
    local_sample,
)
from xplain.fixtures.fitting import fit_softmax, least_squares, retrain_permuted_labels
from xplain.fixtures.specs import load_model, model_from_spec
