"""Metrics for evaluating machine-learning explanations.

Robustness, faithfulness, complexity and homogeneity metrics over flat
feature vectors, with reference models and explainers to cross-check them.
"""

__version__ = "0.1.0"

from xplain.core import (
    BaselineSpec,
    Dataset,
    ExampleSet,
    MetricReport,
    Model,
    Surrogate,
    mask_retain,
    rank_features,
    top_proportion_subset,
)
