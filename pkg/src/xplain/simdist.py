"""Distances and similarities between explanations.

Every kind is a pure function of two equal-length vectors. Similarity kinds
(larger means more alike) are listed in ``SIMILARITY_KINDS``; metrics that
maximize a change over a region minimize these instead.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from xplain.core import (
    InvalidInputError,
    UndefinedDirectionError,
    ZeroVarianceWarning,
    as_vector,
    rank_features,
)

KINDS = (
    "lp",
    "mse",
    "ssim",
    "pearson",
    "spearman",
    "kendall",
    "topk_intersection",
    "cosine_similarity",
    "cosine_dissimilarity",
)
SIMILARITY_KINDS = frozenset(
    {"ssim", "pearson", "spearman", "kendall", "topk_intersection", "cosine_similarity"}
)
NORMALIZED_BY_DEFAULT = frozenset({"ssim", "mse", "pearson"})


@dataclass(frozen=True)
class DistanceKind:
    name: str = "lp"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        name = self.name.replace("-", "_")
        if name not in KINDS:
            raise InvalidInputError(f"unknown distance kind {self.name!r}")
        object.__setattr__(self, "name", name)
        params = dict(self.params)
        if name == "ssim":
            for c in ("c1", "c2"):
                if params.get(c, 1e-4) <= 0:
                    raise InvalidInputError("SSIM constants must be positive")
        if name == "topk_intersection" and int(params.get("k", 1)) < 1:
            raise InvalidInputError("top-k intersection needs k >= 1")
        object.__setattr__(self, "params", params)

    @property
    def is_similarity(self) -> bool:
        return self.name in SIMILARITY_KINDS

    def __call__(self, a, b) -> float:
        return explanation_distance(self, a, b)

    def to_dict(self) -> dict:
        return {"name": self.name, **self.params}

    @classmethod
    def parse(cls, spec) -> "DistanceKind":
        """Accept a kind, a name such as ``"spearman"`` or ``{"name": ..., **params}``."""
        if spec is None:
            return cls()
        if isinstance(spec, DistanceKind):
            return spec
        if isinstance(spec, str):
            return cls(spec)
        if isinstance(spec, dict):
            params = dict(spec)
            name = params.pop("name", params.pop("kind", "lp"))
            return cls(name, params)
        raise InvalidInputError(f"cannot interpret {spec!r} as a distance kind")


def normalize_l1(a: np.ndarray) -> np.ndarray:
    total = np.sum(np.abs(a))
    return a / total if total > 0 else a


def average_ranks(a: np.ndarray) -> np.ndarray:
    """1-based ranks in ascending order, ties sharing their mean rank."""
    order = np.argsort(a, kind="stable")
    sorted_a = a[order]
    ranks = np.empty(len(a))
    i = 0
    while i < len(a):
        j = i
        while j + 1 < len(a) and sorted_a[j + 1] == sorted_a[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _zero_variance(what: str) -> float:
    warnings.warn(f"{what}: zero-variance series, correlation set to 0", ZeroVarianceWarning,
                  stacklevel=3)
    return 0.0


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a - a.mean()
    db = b - b.mean()
    na = np.sqrt(da @ da)
    nb = np.sqrt(db @ db)
    if na == 0 or nb == 0:
        return _zero_variance("pearson")
    return float(np.clip((da @ db) / (na * nb), -1.0, 1.0))


def spearman(a, b) -> float:
    """``1 - 6 sum d^2 / (K (K^2 - 1))`` on average ranks.

    Two constant series have identical ranks and score 1; a single constant
    series scores 0 with a warning.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    const_a = np.all(a == a[0])
    const_b = np.all(b == b[0])
    if const_a and const_b:
        warnings.warn("spearman: both series constant, ranks agree", ZeroVarianceWarning,
                      stacklevel=2)
        return 1.0
    if const_a or const_b:
        return _zero_variance("spearman")
    k = len(a)
    d = average_ranks(a) - average_ranks(b)
    return float(1.0 - 6.0 * float(d @ d) / (k * (k * k - 1)))


def kendall(a, b) -> float:
    """``(C - D) / (C + D)`` over pairs that are strictly ordered in both vectors."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sa = np.sign(a[:, None] - a[None, :])
    sb = np.sign(b[:, None] - b[None, :])
    prod = np.triu(sa * sb, 1)
    c = int(np.sum(prod > 0))
    d = int(np.sum(prod < 0))
    if c + d == 0:
        return _zero_variance("kendall")
    return (c - d) / (c + d)


def ssim(a, b, c1: float = 1e-4, c2: float = 1e-4) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2:
        raise InvalidInputError("SSIM needs at least two entries")
    mu_a, mu_b = a.mean(), b.mean()
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    cov = float(np.sum((a - mu_a) * (b - mu_b)) / (len(a) - 1))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float(num / den)


def topk_intersection(a, b, k: int, absolute: bool = False) -> int:
    """Number of shared features among the top ``k`` of each ranking."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not 1 <= k <= len(a):
        raise InvalidInputError(f"k={k} outside 1..{len(a)}")
    if absolute:
        a, b = np.abs(a), np.abs(b)
    return len(set(rank_features(a)[:k]) & set(rank_features(b)[:k]))


def _rescaled(a: np.ndarray, what: str) -> tuple[np.ndarray, float]:
    # divide by the largest magnitude first so tiny vectors do not underflow
    m = np.max(np.abs(a)) if a.size else 0.0
    if m == 0:
        raise UndefinedDirectionError(f"{what} with a zero vector is undefined")
    a = a / m
    return a, float(np.linalg.norm(a))


def cosine_similarity(a, b) -> float:
    a, na = _rescaled(np.asarray(a, dtype=float), "cosine similarity")
    b, nb = _rescaled(np.asarray(b, dtype=float), "cosine similarity")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def explanation_distance(kind, a, b, normalize: bool | None = None) -> float:
    """Compare two explanations under ``kind`` (a DistanceKind, name or dict)."""
    kind = DistanceKind.parse(kind)
    a = as_vector(a, name="a")
    b = as_vector(b, len(a), name="b")
    p = kind.params
    if normalize is None:
        normalize = p.get("normalize", kind.name in NORMALIZED_BY_DEFAULT)
    if normalize:
        a, b = normalize_l1(a), normalize_l1(b)
    name = kind.name
    if name == "lp":
        order = p.get("p", 2)
        order = np.inf if order in ("inf", "∞") else float(order)
        if order not in (1.0, 2.0, np.inf) and order <= 0:
            raise InvalidInputError(f"invalid norm order {order}")
        return float(np.linalg.norm(a - b, ord=order))
    if name == "mse":
        return float(np.mean((a - b) ** 2))
    if name == "ssim":
        return ssim(a, b, p.get("c1", 1e-4), p.get("c2", 1e-4))
    if name == "pearson":
        return pearson(a, b)
    if name == "spearman":
        return spearman(a, b)
    if name == "kendall":
        return float(kendall(a, b))
    if name == "topk_intersection":
        return float(topk_intersection(a, b, int(p.get("k", min(5, len(a)))),
                                       bool(p.get("absolute", False))))
    if name == "cosine_similarity":
        return cosine_similarity(a, b)
    return 1.0 - cosine_similarity(a, b)


def alignment(x, E) -> float:
    """``|x . E| / |E|``: length of the projection of ``x`` onto the explanation."""
    x = as_vector(x)
    E = as_vector(E, len(x), "E")
    E, norm = _rescaled(E, "alignment")
    return float(abs(x @ E) / norm)
