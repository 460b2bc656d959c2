"""Perturbation regions, samplers and a best-found worst-case search."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from xplain.core import InvalidInputError, NumericError, as_vector, resolve_attribution

DEFAULT_SAMPLES = 1000
DEFAULT_SEARCH_BUDGET = 10_000
_MEMBERSHIP_SLACK = 1e-12


@dataclass(frozen=True)
class LpBall:
    """Points within distance ``r`` of the anchor under the ``p``-norm (p in 1, 2, inf)."""

    p: float = 2
    r: float = 0.1

    def __post_init__(self):
        p = self.p
        if isinstance(p, str):
            p = math.inf if p in ("inf", "∞") else float(p)
        if p not in (1, 2, math.inf):
            raise InvalidInputError(f"unsupported norm p={self.p}; use 1, 2 or inf")
        if not self.r >= 0 or not math.isfinite(self.r):
            raise InvalidInputError("ball radius must be finite and >= 0")
        object.__setattr__(self, "p", float(p))

    def contains(self, anchor, x) -> bool:
        d = np.linalg.norm(np.asarray(x) - anchor, ord=self.p)
        return bool(d <= self.r * (1 + _MEMBERSHIP_SLACK) + _MEMBERSHIP_SLACK)

    def sample(self, anchor, n, rng) -> np.ndarray:
        k = len(anchor)
        if self.r == 0:
            return np.tile(anchor, (n, 1))
        if self.p == math.inf:
            return anchor + rng.uniform(-self.r, self.r, size=(n, k))
        if self.p == 2:
            d = rng.normal(size=(n, k))
            norms = np.linalg.norm(d, axis=1, keepdims=True)
            norms[norms == 0] = 1.0
            u = rng.uniform(size=(n, 1)) ** (1.0 / k)
            return anchor + self.r * u * d / norms
        # l1: uniform on the simplex from K+1 exponential spacings, random signs
        e = rng.exponential(size=(n, k + 1))
        w = e[:, :k] / e.sum(axis=1, keepdims=True)
        signs = rng.choice([-1.0, 1.0], size=(n, k))
        return anchor + self.r * w * signs

    def project(self, anchor, x) -> np.ndarray:
        d = x - anchor
        if self.p == math.inf:
            return anchor + np.clip(d, -self.r, self.r)
        norm = np.linalg.norm(d, ord=self.p)
        if norm <= self.r:
            return x
        return anchor + d * (self.r / norm)

    def diameter(self, anchor) -> np.ndarray:
        return np.full(len(anchor), 2.0 * self.r)

    def to_dict(self):
        return {"lp": "inf" if self.p == math.inf else int(self.p), "r": self.r}


@dataclass(frozen=True)
class Hyperbox:
    """Axis-aligned box ``lower <= x <= upper`` in absolute coordinates."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        if len(lo) != len(hi):
            raise InvalidInputError("box bounds differ in length")
        if any(a > b for a, b in zip(lo, hi)):
            raise InvalidInputError("box lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def around(cls, x, half_width) -> "Hyperbox":
        x = as_vector(x)
        hw = np.broadcast_to(np.asarray(half_width, dtype=float), x.shape)
        return cls(tuple(x - hw), tuple(x + hw))

    def contains(self, anchor, x) -> bool:
        x = np.asarray(x)
        return bool(np.all(x >= np.array(self.lower)) and np.all(x <= np.array(self.upper)))

    def check_anchor(self, anchor):
        if len(anchor) != len(self.lower):
            raise InvalidInputError("box dimension differs from the input")
        if not self.contains(anchor, anchor):
            raise InvalidInputError("box does not contain the anchor point")

    def sample(self, anchor, n, rng) -> np.ndarray:
        return rng.uniform(np.array(self.lower), np.array(self.upper), size=(n, len(anchor)))

    def project(self, anchor, x) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def diameter(self, anchor) -> np.ndarray:
        return np.array(self.upper) - np.array(self.lower)

    def to_dict(self):
        return {"box": {"lower": list(self.lower), "upper": list(self.upper)}}


@dataclass(frozen=True)
class GroupFlip:
    """Replace one (protected) coordinate by each of the listed values."""

    feature: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not self.values:
            raise InvalidInputError("group flip needs at least one target value")

    def contains(self, anchor, x) -> bool:
        x = np.asarray(x)
        others = np.delete(x, self.feature) == np.delete(anchor, self.feature)
        return bool(np.all(others) and (x[self.feature] in self.values or x[self.feature] == anchor[self.feature]))

    def sample(self, anchor, n, rng) -> np.ndarray:
        return np.array([flip_group(anchor, self.feature, v) for v in self.values])

    def to_dict(self):
        return {"flip": {"feature": self.feature, "values": list(self.values)}}


@dataclass(frozen=True)
class ConstantShift:
    """The two shifted copies ``x + c*1`` and ``x - c*1``."""

    c: float

    def contains(self, anchor, x) -> bool:
        d = np.asarray(x) - anchor
        return bool(np.allclose(d, d[0]) and abs(abs(d[0]) - abs(self.c)) <= 1e-12 * max(1, abs(self.c)))

    def sample(self, anchor, n, rng) -> np.ndarray:
        return np.array([anchor + self.c, anchor - self.c])

    def to_dict(self):
        return {"shift": self.c}


@dataclass(frozen=True)
class PerturbationSpec:
    region: object = field(default_factory=LpBall)
    n: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInputError("sampling budget must be >= 1")

    def to_dict(self) -> dict:
        return {"region": self.region.to_dict(), "n": self.n, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict, default_seed: int = 0) -> "PerturbationSpec":
        return cls(region_from_dict(d.get("region", {})), int(d.get("n", DEFAULT_SAMPLES)),
                   int(d.get("seed", default_seed)))


def region_from_dict(d: dict):
    """Parse ``{"lp": 2, "r": 0.1}``, ``{"box": {...}}``, ``{"flip": {...}}`` or ``{"shift": c}``."""
    if not isinstance(d, dict):
        raise InvalidInputError(f"region must be an object, got {d!r}")
    if "box" in d:
        return Hyperbox(d["box"]["lower"], d["box"]["upper"])
    if "flip" in d:
        return GroupFlip(int(d["flip"]["feature"]), tuple(d["flip"]["values"]))
    if "shift" in d:
        return ConstantShift(float(d["shift"]))
    return LpBall(d.get("lp", d.get("p", 2)), float(d.get("r", 0.1)))


def _check(x, region):
    if isinstance(region, Hyperbox):
        region.check_anchor(x)
    if isinstance(region, GroupFlip) and not 0 <= region.feature < len(x):
        raise InvalidInputError(f"flip feature {region.feature} out of range")


def sample_region(x, spec: PerturbationSpec) -> np.ndarray:
    """``spec.n`` points from the region around ``x``, deterministic in ``spec.seed``.

    Group flips and constant shifts enumerate their finite regions instead.
    """
    x = as_vector(x)
    _check(x, spec.region)
    rng = np.random.default_rng(spec.seed)
    return spec.region.sample(x, spec.n, rng)


def flip_group(x, feature: int, value: float) -> np.ndarray:
    x = as_vector(x)
    if not 0 <= feature < len(x):
        raise InvalidInputError(f"feature index {feature} out of range")
    out = x.copy()
    out[feature] = float(value)
    return out


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evaluations: int
    trace: list  # (evaluation index, value) at each strict improvement
    strategy: str
    label: str = "best-found"


class _Tracker:
    def __init__(self, objective, budget):
        self.objective = objective
        self.budget = budget
        self.used = 0
        self.best_x = None
        self.best = -math.inf
        self.trace = []

    @property
    def exhausted(self) -> bool:
        return self.used >= self.budget

    def offer(self, x) -> bool:
        v = float(self.objective(x))
        if math.isnan(v):
            raise NumericError("objective returned NaN")
        idx = self.used
        self.used += 1
        if v > self.best:
            self.best, self.best_x = v, np.array(x, dtype=float)
            self.trace.append((idx, v))
            return True
        return False


STRATEGIES = ("random", "refine", "gradient")


def worst_case_search(objective: Callable, x, region, strategy: str = "refine",
                      budget: int = DEFAULT_SEARCH_BUDGET, seed: int = 0,
                      gradient: Callable | None = None) -> SearchResult:
    """Best-found maximizer of ``objective`` over ``region`` around ``x``.

    ``random`` evaluates ``x`` and then ``budget - 1`` region samples.
    ``refine`` spends half the budget on random samples and the rest on
    coordinate moves with step halving, projected back into the region.
    ``gradient`` runs projected gradient ascent from the best random sample
    (``gradient`` must return the objective's gradient). The result is a lower
    bound on the true maximum.
    """
    x = as_vector(x)
    if strategy not in STRATEGIES:
        raise InvalidInputError(f"unknown search strategy {strategy!r}")
    if budget < 1:
        raise InvalidInputError("search budget must be >= 1")
    _check(x, region)
    finite = isinstance(region, (GroupFlip, ConstantShift))
    t = _Tracker(objective, budget)
    t.offer(x)
    if finite:
        for cand in region.sample(x, 0, None):
            if t.exhausted:
                break
            t.offer(cand)
        return SearchResult(t.best_x, t.best, t.used, t.trace, "enumerate")
    n_random = budget - 1 if strategy == "random" else max(0, budget // 2 - 1)
    if n_random:
        for cand in region.sample(x, n_random, np.random.default_rng(seed)):
            t.offer(cand)
    if strategy == "refine":
        _refine(t, x, region)
    elif strategy == "gradient":
        if gradient is None:
            raise InvalidInputError("gradient strategy needs the objective's gradient")
        _ascend(t, x, region, gradient)
    return SearchResult(t.best_x, t.best, t.used, t.trace, strategy)


def _refine(t: _Tracker, anchor, region):
    step = region.diameter(anchor).astype(float)
    if not np.any(step > 0):
        return
    floor = 1e-12 * max(1.0, float(np.max(step)))
    k = len(anchor)
    while not t.exhausted and np.max(step) > floor:
        improved = False
        for j in range(k):
            if step[j] <= 0:
                continue
            for sign in (1.0, -1.0):
                if t.exhausted:
                    return
                cand = t.best_x.copy()
                cand[j] += sign * step[j]
                if t.offer(region.project(anchor, cand)):
                    improved = True
                    break
        if not improved:
            step = step / 2.0


def _ascend(t: _Tracker, anchor, region, gradient):
    scale = float(np.max(region.diameter(anchor)))
    if scale == 0:
        return
    lr = scale / 4.0
    cur = t.best_x.copy()
    while not t.exhausted and lr > 1e-12 * scale:
        g = np.asarray(gradient(cur), dtype=float)
        gn = np.linalg.norm(g)
        if gn == 0 or not np.isfinite(gn):
            break
        cand = region.project(anchor, cur + lr * g / gn)
        if t.offer(cand):
            cur = cand
        else:
            lr /= 2.0
            cur = t.best_x.copy()


def eval_targeted_loss(model, explainer, x_prime, x, x_target, lam: float = 0.0) -> float:
    """``|E(f,x') - target|^2 + lam (f(x') - f(x))^2``; minimize it (or maximize its negation)."""
    e = resolve_attribution(explainer, model, x_prime)
    target = as_vector(x_target, model.dim, "target")
    d = model.predict(x_prime) - model.predict(x)
    return float(np.sum((e - target) ** 2) + lam * d * d)
