"""Differentially private descriptive statistics.

Sensitivities are computed internally from caller-supplied global bounds;
data falling outside the bounds is clipped before the statistic is computed.
Each release returns a :class:`StatResult` carrying the value together with
the metadata (sensitivity, mechanism, budget) a ledger needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mechanisms import (PURE, BudgetAllocation, PrivacyBudget, RandomSource,
                         SensitivitySpec, exponential_mechanism,
                         gaussian_mechanism, laplace_mechanism)

LAPLACE = "laplace"
GAUSSIAN = "gaussian"
BOUNDED = "bounded"
UNBOUNDED = "unbounded"
BOTH = "both"


@dataclass(frozen=True)
class Bounds:
    lower: float
    upper: float

    def __post_init__(self):
        if not (self.lower < self.upper):
            raise ValueError("lower bound must be strictly below upper bound")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class StatRequest:
    budget: PrivacyBudget
    mechanism: str = LAPLACE
    neighbor: str = BOUNDED

    def __post_init__(self):
        if self.mechanism not in (LAPLACE, GAUSSIAN):
            raise ValueError("mechanism must be 'laplace' or 'gaussian'")
        if self.neighbor not in (BOUNDED, UNBOUNDED, BOTH):
            raise ValueError("neighbor must be 'bounded', 'unbounded', or "
                             "'both'")
        if self.mechanism == LAPLACE and self.budget.variant != PURE:
            raise ValueError("the Laplace mechanism requires a pure budget")
        if self.mechanism == GAUSSIAN and self.budget.delta <= 0.0:
            raise ValueError("the Gaussian mechanism requires delta > 0")


@dataclass(frozen=True)
class HistogramSpec:
    breaks: object = 10  # bin count or explicit ascending edges
    normalize: bool = False
    allow_negative: bool = False

    def edges_for(self, x: np.ndarray) -> np.ndarray:
        if np.isscalar(self.breaks):
            count = int(self.breaks)
            if count < 1:
                raise ValueError("bin count must be at least 1")
            lo, hi = float(np.min(x)), float(np.max(x))
            if lo == hi:
                lo, hi = lo - 0.5, hi + 0.5
            return np.linspace(lo, hi, count + 1)
        edges = np.asarray(self.breaks, dtype=np.float64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("explicit breaks must be >= 2 strictly "
                             "ascending edges")
        return edges


@dataclass(frozen=True)
class StatResult:
    statistic: str
    value: object
    sensitivity: float
    mechanism: str
    neighbor: str
    epsilon: float
    delta: float
    detail: dict = field(default_factory=dict)


def clip(x, bounds: Bounds) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size == 0:
        raise ValueError("cannot clip an empty vector")
    return np.clip(x, bounds.lower, bounds.upper)


def _neighbors(req: StatRequest) -> list[str]:
    return [BOUNDED, UNBOUNDED] if req.neighbor == BOTH else [req.neighbor]


def _privatize(values: np.ndarray, joint_sensitivity: float,
               req: StatRequest, rng: RandomSource,
               neighbor: str) -> np.ndarray:
    """Release a vector whose joint l1 (or l2) sensitivity is known.

    Splitting the joint sensitivity evenly across coordinates makes the
    mechanisms' default composition reproduce iid noise calibrated to the
    joint value (scale joint/eps per coordinate for Laplace, one sigma from
    the composite l2 for Gaussian).
    """
    n = values.shape[0]
    if req.mechanism == LAPLACE:
        sens = SensitivitySpec("l1", np.full(n, joint_sensitivity / n),
                               neighbor)
        return laplace_mechanism(values, req.budget, sens, None, rng)
    sens = SensitivitySpec("l2", np.full(n, joint_sensitivity / math.sqrt(n)),
                           neighbor)
    return gaussian_mechanism(values, req.budget, sens, None, rng)


def _scalar_release(statistic: str, value: float, sensitivity, req: StatRequest,
                    rng: RandomSource, detail: dict | None = None):
    results = []
    for neighbor in _neighbors(req):
        delta = sensitivity(neighbor) if callable(sensitivity) else sensitivity
        noisy = _privatize(np.array([value]), delta, req, rng, neighbor)
        results.append(StatResult(statistic, float(noisy[0]), delta,
                                  req.mechanism, neighbor,
                                  req.budget.epsilon, req.budget.delta,
                                  detail or {}))
    return results[0] if len(results) == 1 else tuple(results)


def mean_dp(x, bounds: Bounds, req: StatRequest, rng: RandomSource):
    clipped = clip(x, bounds)
    n = clipped.size
    sensitivity = bounds.width / n  # same for both neighbor models
    return _scalar_release("mean", float(clipped.mean()), sensitivity, req,
                           rng, {"n": n})


def var_dp(x, bounds: Bounds, req: StatRequest, rng: RandomSource):
    clipped = clip(x, bounds)
    n = clipped.size
    if n < 2:
        raise ValueError("variance needs at least 2 observations")
    sensitivity = bounds.width ** 2 / n
    return _scalar_release("var", float(clipped.var(ddof=1)), sensitivity,
                           req, rng, {"n": n})


def sd_dp(x, bounds: Bounds, req: StatRequest, rng: RandomSource):
    """sqrt of the privatized variance; negative draws floor at 0 first.

    Post-processing of a single variance release, so no extra budget."""
    released = var_dp(x, bounds, req, rng)
    singles = released if isinstance(released, tuple) else (released,)
    out = tuple(
        StatResult("sd", math.sqrt(max(r.value, 0.0)), r.sensitivity,
                   r.mechanism, r.neighbor, r.epsilon, r.delta, r.detail)
        for r in singles)
    return out if isinstance(released, tuple) else out[0]


def cov_dp(x1, x2, bounds1: Bounds, bounds2: Bounds, req: StatRequest,
           rng: RandomSource):
    c1 = clip(x1, bounds1)
    c2 = clip(x2, bounds2)
    if c1.size != c2.size:
        raise ValueError("covariance inputs must have equal length")
    n = c1.size
    if n < 2:
        raise ValueError("covariance needs at least 2 observations")
    sensitivity = bounds1.width * bounds2.width / n
    value = float(np.cov(c1, c2, ddof=1)[0, 1])
    return _scalar_release("cov", value, sensitivity, req, rng, {"n": n})


def pooled_var_sensitivity(width: float, n_max: int, total_n: int,
                           n_groups: int) -> float:
    return width ** 2 * (n_max - 1) / (n_max * (total_n - n_groups))


def pooled_var_dp(groups, bounds: Bounds, req: StatRequest, rng: RandomSource,
                  approx_n_max: bool = False):
    clipped = [clip(g, bounds) for g in groups]
    if len(clipped) < 2:
        raise ValueError("pooled variance needs at least 2 groups")
    sizes = [g.size for g in clipped]
    if min(sizes) < 2:
        raise ValueError("every group needs at least 2 observations")
    total_n, k = sum(sizes), len(sizes)
    n_max = total_n if approx_n_max else max(sizes)
    value = sum((g.size - 1) * g.var(ddof=1) for g in clipped) / (total_n - k)
    sensitivity = pooled_var_sensitivity(bounds.width, n_max, total_n, k)
    return _scalar_release("pooled_var", float(value), sensitivity, req, rng,
                           {"n": total_n, "groups": k, "n_max": n_max})


def pooled_cov_dp(pairs, bounds1: Bounds, bounds2: Bounds, req: StatRequest,
                  rng: RandomSource, approx_n_max: bool = False):
    groups = []
    for pair in pairs:
        arr = np.asarray(pair, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("each pooled-covariance group must be a "
                             "two-column matrix")
        groups.append(np.column_stack([clip(arr[:, 0], bounds1),
                                       clip(arr[:, 1], bounds2)]))
    if len(groups) < 2:
        raise ValueError("pooled covariance needs at least 2 groups")
    sizes = [g.shape[0] for g in groups]
    if min(sizes) < 2:
        raise ValueError("every group needs at least 2 observations")
    total_n, k = sum(sizes), len(sizes)
    n_max = total_n if approx_n_max else max(sizes)
    value = sum((g.shape[0] - 1) * np.cov(g[:, 0], g[:, 1], ddof=1)[0, 1]
                for g in groups) / (total_n - k)
    sensitivity = (bounds1.width * bounds2.width * (n_max - 1)
                   / (n_max * (total_n - k)))
    return _scalar_release("pooled_cov", float(value), sensitivity, req, rng,
                           {"n": total_n, "groups": k, "n_max": n_max})


def count_sensitivity(neighbor: str, mechanism: str) -> float:
    """Joint sensitivity of a count vector (histogram or contingency table).

    A modified record moves two cells by one each (l1 = 2, l2 = sqrt(2));
    an added/removed record moves one cell by one (l1 = l2 = 1).
    """
    if neighbor == BOUNDED:
        return 2.0 if mechanism == LAPLACE else math.sqrt(2.0)
    return 1.0


def _release_counts(statistic: str, counts: np.ndarray, req: StatRequest,
                    rng: RandomSource, allow_negative: bool, detail: dict,
                    postprocess=None):
    results = []
    for neighbor in _neighbors(req):
        sensitivity = count_sensitivity(neighbor, req.mechanism)
        noisy = _privatize(counts.astype(np.float64), sensitivity, req, rng,
                           neighbor)
        if not allow_negative:
            noisy = np.maximum(noisy, 0.0)
        value = postprocess(noisy) if postprocess is not None else noisy
        results.append(StatResult(statistic, value, sensitivity,
                                  req.mechanism, neighbor,
                                  req.budget.epsilon, req.budget.delta,
                                  detail))
    return results[0] if len(results) == 1 else tuple(results)


def histogram_dp(x, spec: HistogramSpec, req: StatRequest, rng: RandomSource):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.size == 0:
        raise ValueError("histogram needs at least one observation")
    edges = spec.edges_for(x)
    # Values outside explicit edges land in the end bins.
    counts, _ = np.histogram(np.clip(x, edges[0], edges[-1]), bins=edges)

    postprocess = None
    if spec.normalize:
        widths = np.diff(edges)

        def postprocess(noisy):
            total = noisy.sum()
            if total <= 0.0:
                return noisy
            return noisy / (total * widths)

    return _release_counts("histogram", counts, req, rng,
                           spec.allow_negative, {"edges": edges}, postprocess)


def table_dp(factors, categories, req: StatRequest,
             rng: RandomSource, allow_negative: bool = False):
    """Multiway contingency table over declared category sets."""
    if len(factors) != len(categories):
        raise ValueError("one category set per factor is required")
    lengths = {len(f) for f in factors}
    if len(lengths) != 1:
        raise ValueError("factors must have equal length")
    shape = tuple(len(c) for c in categories)
    index_arrays = []
    for factor, cats in zip(factors, categories):
        lookup = {c: i for i, c in enumerate(cats)}
        try:
            index_arrays.append(np.array([lookup[v] for v in factor]))
        except KeyError as exc:
            raise ValueError(f"unknown category label: {exc.args[0]!r}")
    counts = np.zeros(shape, dtype=np.float64)
    np.add.at(counts, tuple(index_arrays), 1.0)

    flat = counts.ravel()
    released = _release_counts("table", flat, req, rng, allow_negative,
                               {"categories": categories},
                               postprocess=lambda c: c.reshape(shape))
    return released


def quantile_dp(x, q: float, budget: PrivacyBudget, bounds: Bounds,
                uniform_sampling: bool = True,
                rng: RandomSource | None = None) -> StatResult:
    """Private quantile via the exponential mechanism over sorted-data
    intervals, with interval lengths as the base measure."""
    if not (0.0 <= q <= 1.0):
        raise ValueError("quantile must lie in [0, 1]")
    if budget.variant != PURE:
        raise ValueError("quantile release requires a pure budget")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    n = x.size
    z = np.concatenate([[bounds.lower], np.sort(clip(x, bounds))
                        if n else np.empty(0), [bounds.upper]])
    lengths = np.diff(z)
    idx = np.arange(n + 1, dtype=np.float64)
    utility = -np.abs(idx - q * n)
    measure = lengths if np.any(lengths > 0.0) else None
    i = exponential_mechanism(utility, budget, 1.0, measure, rng)
    if uniform_sampling:
        value = float(z[i] + rng.uniform() * (z[i + 1] - z[i]))
    else:
        value = float(z[i])
    return StatResult("quantile", value, 1.0, "exponential", BOUNDED,
                      budget.epsilon, budget.delta,
                      {"q": q, "n": n, "interval_index": i})


def median_dp(x, budget: PrivacyBudget, bounds: Bounds,
              uniform_sampling: bool = True,
              rng: RandomSource | None = None) -> StatResult:
    return quantile_dp(x, 0.5, budget, bounds, uniform_sampling, rng)
