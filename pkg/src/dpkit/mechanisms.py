"""Core randomized mechanisms: Laplace, Gaussian, and exponential.

All randomness flows through a seedable :class:`RandomSource`, so every
mechanism is a pure function of (inputs, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

PURE = "pure"
APPROXIMATE = "approximate"
PROBABILISTIC = "probabilistic"
_VARIANTS = (PURE, APPROXIMATE, PROBABILISTIC)


class RandomSource:
    """Seedable stream of uniform variates strictly inside (0, 1).

    Identical seed implies an identical output sequence. Single-consumer:
    callers running concurrently must each own their instance.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, size=None):
        # Dyadic midpoints (k + 0.5) / 2^53 are uniform and never hit 0 or 1.
        ints = self._gen.integers(0, 1 << 53, size=size)
        return (ints + 0.5) * 2.0 ** -53

    def normal(self, size=None):
        """Standard normals via the inverse CDF of one uniform each."""
        u = np.atleast_1d(self.uniform(size=size))
        z = _kernels.normal_quantile(u)
        return z if size is not None else float(z[0])


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    delta: float = 0.0
    variant: str = PURE

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ValueError(f"unknown DP variant: {self.variant!r}")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")
        if not (0.0 <= self.delta < 1.0):
            raise ValueError("delta must lie in [0, 1)")
        if (self.delta == 0.0) != (self.variant == PURE):
            raise ValueError("delta must be 0 exactly when the variant is pure")


@dataclass(frozen=True)
class SensitivitySpec:
    norm: str  # "l1" or "l2"
    per_coordinate: np.ndarray
    neighbor: str = "bounded"  # "bounded" or "unbounded"

    def __post_init__(self):
        if self.norm not in ("l1", "l2"):
            raise ValueError("norm must be 'l1' or 'l2'")
        if self.neighbor not in ("bounded", "unbounded"):
            raise ValueError("neighbor must be 'bounded' or 'unbounded'")
        arr = np.atleast_1d(np.asarray(self.per_coordinate, dtype=np.float64))
        if arr.size == 0:
            raise ValueError("sensitivity vector must be nonempty")
        if np.any(arr < 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("sensitivities must be finite and nonnegative")
        object.__setattr__(self, "per_coordinate", arr)


@dataclass(frozen=True)
class BudgetAllocation:
    proportions: np.ndarray

    def __post_init__(self):
        arr = np.atleast_1d(np.asarray(self.proportions, dtype=np.float64))
        if np.any(arr <= 0.0):
            raise ValueError("allocation proportions must be positive")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise ValueError("allocation proportions must sum to 1")
        object.__setattr__(self, "proportions", arr)


def _check_lengths(values, sens, alloc):
    n = values.shape[0]
    if sens.per_coordinate.shape[0] != n:
        raise ValueError("sensitivity vector length does not match values")
    if alloc is not None and alloc.proportions.shape[0] != n:
        raise ValueError("allocation length does not match values")


def laplace_mechanism(values, budget: PrivacyBudget,
                      sens: SensitivitySpec,
                      alloc: BudgetAllocation | None = None,
                      rng: RandomSource | None = None) -> np.ndarray:
    """Add Lap(0, delta_i / eps_i) noise per coordinate.

    Default allocation splits the budget proportionally to the per-coordinate
    sensitivities, so every coordinate gets the scale sum(delta)/eps. An
    explicit allocation sets eps_i = eps * alloc_i.
    """
    if budget.variant != PURE:
        raise ValueError("Laplace mechanism requires a pure-DP budget")
    if sens.norm != "l1":
        raise ValueError("Laplace mechanism requires l1 sensitivities")
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    _check_lengths(values, sens, alloc)

    delta = sens.per_coordinate
    if alloc is None:
        total = delta.sum()
        # eps_i = eps * delta_i / total  =>  scale_i = total / eps
        scales = np.where(delta > 0.0, total / budget.epsilon, 0.0)
    else:
        eps_i = budget.epsilon * alloc.proportions
        scales = np.where(delta > 0.0, delta / eps_i, 0.0)

    noise = _kernels.laplace_noise(rng.uniform(values.shape[0]), scales)
    return values + noise


def gaussian_sigma(budget: PrivacyBudget, delta2f: float) -> float:
    """Noise standard deviation calibrated for the Gaussian mechanism."""
    if budget.variant == PURE:
        raise ValueError("Gaussian mechanism needs delta > 0")
    if delta2f < 0.0:
        raise ValueError("sensitivity must be nonnegative")
    if delta2f == 0.0:
        return 0.0
    eps, dlt = budget.epsilon, budget.delta
    if budget.variant == APPROXIMATE:
        if eps >= 1.0:
            raise ValueError(
                "approximate-DP Gaussian calibration requires epsilon < 1; "
                "use the probabilistic variant for larger budgets")
        return delta2f * math.sqrt(2.0 * math.log(1.25 / dlt)) / eps
    q = _kernels.normal_quantile(np.array([dlt / 2.0]))[0]
    return delta2f * (math.sqrt(q * q + 2.0 * eps) - q) / (2.0 * eps)


def gaussian_mechanism(values, budget: PrivacyBudget,
                       sens: SensitivitySpec,
                       alloc: BudgetAllocation | None = None,
                       rng: RandomSource | None = None) -> np.ndarray:
    """Add N(0, sigma_i^2) noise per coordinate.

    Without an allocation, sigma is calibrated once against the composite
    sensitivity sqrt(sum(delta_i^2)). With an allocation, coordinate i gets
    its own (eps * alloc_i, delta * alloc_i) budget and its own sensitivity.
    """
    if budget.variant not in (APPROXIMATE, PROBABILISTIC):
        raise ValueError("Gaussian mechanism requires an approximate or "
                         "probabilistic budget")
    if sens.norm != "l2":
        raise ValueError("Gaussian mechanism requires l2 sensitivities")
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    _check_lengths(values, sens, alloc)

    delta = sens.per_coordinate
    if alloc is None:
        composite = math.sqrt(float(delta @ delta))
        sigmas = np.full(values.shape[0], gaussian_sigma(budget, composite))
    else:
        sigmas = np.empty(values.shape[0])
        for i, prop in enumerate(alloc.proportions):
            sub = PrivacyBudget(budget.epsilon * prop, budget.delta * prop,
                                budget.variant)
            sigmas[i] = gaussian_sigma(sub, float(delta[i]))

    z = _kernels.normal_quantile(rng.uniform(values.shape[0]))
    return values + sigmas * z


def exponential_mechanism(utility, budget: PrivacyBudget, sens_u: float,
                          measure=None,
                          rng: RandomSource | None = None) -> int:
    """Select an index with probability proportional to
    measure_i * exp(eps * u_i / (2 * sens_u)).

    Uses max-subtraction before exponentiation, so utility ranges spanning
    [-1e6, 1e6] are handled without overflow.
    """
    if budget.variant != PURE:
        raise ValueError("exponential mechanism requires a pure-DP budget")
    if sens_u < 0.0:
        raise ValueError("utility sensitivity must be nonnegative")
    utility = np.atleast_1d(np.asarray(utility, dtype=np.float64))
    if utility.size == 0:
        raise ValueError("utility vector must be nonempty")
    if measure is None:
        measure = np.ones(utility.shape[0])
    else:
        measure = np.atleast_1d(np.asarray(measure, dtype=np.float64))
        if measure.shape != utility.shape:
            raise ValueError("measure length does not match utility")
        if np.any(measure < 0.0):
            raise ValueError("measure weights must be nonnegative")
        if not np.any(measure > 0.0):
            raise ValueError("measure must not be all zero")

    # Shift by the best attainable utility (measure > 0), so the exponent is
    # nonpositive wherever it matters and never overflows.
    active = measure > 0.0
    shifted = utility - utility[active].max()
    if sens_u == 0.0:
        if np.any(utility != utility[0]):
            raise ValueError("zero utility sensitivity with non-constant "
                             "utility is ill-defined")
        weights = measure.astype(np.float64)
    else:
        weights = np.zeros(utility.shape[0])
        weights[active] = measure[active] * np.exp(
            budget.epsilon * shifted[active] / (2.0 * sens_u))

    cumulative = np.cumsum(weights)
    total = cumulative[-1]
    if not (total > 0.0) or not math.isfinite(total):
        raise ValueError("selection weights degenerate (all zero or "
                         "non-finite)")
    u = float(rng.uniform())
    # First index whose cumulative weight reaches u * total.
    return int(np.searchsorted(cumulative, u * total, side="left"))
