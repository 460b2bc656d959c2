"""Group-wise fidelity and the gaps between groups."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from xplain.core import Dataset, InvalidInputError, Model
from xplain.faithfulness import LOWER_IS_BETTER, loss_based_fidelity


@dataclass
class GroupFidelityTable:
    groups: list
    values: np.ndarray
    sizes: np.ndarray
    pooled: float
    orientation: str = "loss"  # "loss": lower is better, "score": higher is better

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.sizes = np.asarray(self.sizes, dtype=int)
        if self.orientation not in ("loss", "score"):
            raise InvalidInputError(f"unknown orientation {self.orientation!r}")
        if len(self.groups) != len(self.values) or len(self.values) != len(self.sizes):
            raise InvalidInputError("groups, values and sizes differ in length")

    @property
    def unweighted(self) -> float:
        return float(np.mean(self.values))

    def to_dict(self) -> dict:
        return {
            "orientation": self.orientation,
            "pooled": self.pooled,
            "unweighted": self.unweighted,
            "groups": [{"group": g, "value": float(v), "size": int(n)}
                       for g, v, n in zip(self.groups, self.values, self.sizes)],
        }


def fidelity_per_group(explanation, model: Model, dataset: Dataset,
                       loss: str = "mse") -> GroupFidelityTable:
    """Fidelity restricted to each group's rows, plus the value over all rows.

    For averaged losses the pooled value equals the size-weighted mean of the
    group values.
    """
    if dataset.groups is None:
        raise InvalidInputError("dataset has no group column")
    groups = dataset.group_values()
    values, sizes = [], []
    for g in groups:
        mask = dataset.groups == g
        if not np.any(mask):
            raise InvalidInputError(f"group {g!r} is empty")
        values.append(loss_based_fidelity(explanation, model, dataset.rows[mask], loss))
        sizes.append(int(mask.sum()))
    pooled = loss_based_fidelity(explanation, model, dataset.rows, loss)
    orientation = "loss" if LOWER_IS_BETTER[loss] else "score"
    return GroupFidelityTable(groups, values, sizes, pooled, orientation)


def fidelity_gaps(table: GroupFidelityTable) -> dict:
    """``max_gap``: worst group's shortfall from the pooled value (positive means worse).
    ``mean_gap``: mean absolute difference over group pairs."""
    v = table.values
    g = len(v)
    if g < 2:
        raise InvalidInputError("fidelity gaps need at least two groups")
    shortfall = table.pooled - v if table.orientation == "score" else v - table.pooled
    pairs = sum(abs(a - b) for a, b in combinations(v.tolist(), 2))
    return {"max_gap": float(np.max(shortfall)), "mean_gap": float(2.0 * pairs / (g * (g - 1)))}
