"""Common-mean estimators of the form ``gamma * mean1 + (1 - gamma) * mean2``.

Every weight rule is available in two shapes:

* a scalar function (``gamma_graybill_deal`` and friends) that validates its
  inputs, raises a specific exception on failure and returns a
  :class:`GammaWeight`;
* a vectorised ``weights`` method on the matching estimator spec class,
  used by the resampling fast paths, which returns NaN where the weight is
  undefined instead of raising.

The scalar functions evaluate through the vectorised code so both routes
produce bit-identical numbers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from twojack.core_stats import Sample, SummaryStats, require_variances, summarize
from twojack.errors import (
    BothVariancesZero,
    NonPositiveVariance,
    OutOfDomain,
    StatisticEvaluationError,
    TooFewObservations,
    UnbalancedDesign,
    ZeroDenominator,
)

FRACTION_TOL = 1e-12


class Branch(enum.Enum):
    ORDERED = "ordered"  # var1 <= var2, ties included
    UNORDERED = "unordered"


class TildeRule(enum.Enum):
    FLOOR = "floor"
    REFLECT = "reflect"
    MIDPOINT = "midpoint"


@dataclass(frozen=True, eq=False)
class TwoSampleData:
    sample1: Sample
    sample2: Sample

    def __post_init__(self):
        for name in ("sample1", "sample2"):
            value = getattr(self, name)
            if not isinstance(value, Sample):
                object.__setattr__(self, name, Sample(value))

    @classmethod
    def from_arrays(cls, x1, x2) -> "TwoSampleData":
        return cls(Sample(x1), Sample(x2))

    @property
    def x1(self) -> np.ndarray:
        return self.sample1.values

    @property
    def x2(self) -> np.ndarray:
        return self.sample2.values

    @property
    def n1(self) -> int:
        return len(self.sample1)

    @property
    def n2(self) -> int:
        return len(self.sample2)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def balanced(self) -> bool:
        return self.n1 == self.n2

    def swapped(self) -> "TwoSampleData":
        return TwoSampleData(self.sample2, self.sample1)

    def __eq__(self, other):
        if not isinstance(other, TwoSampleData):
            return NotImplemented
        return self.sample1 == other.sample1 and self.sample2 == other.sample2

    def __hash__(self):
        return hash((self.sample1, self.sample2))


@dataclass(frozen=True)
class GammaInputs:
    """Argument vector of a weight rule: sample fractions, unbiased variances, means."""

    frac1: float
    frac2: float
    var1: float
    var2: float
    mean1: float
    mean2: float

    def __post_init__(self):
        if not (0.0 < self.frac1 < 1.0 and 0.0 < self.frac2 < 1.0):
            raise OutOfDomain("sample fractions must lie in (0, 1)")
        if abs(self.frac1 + self.frac2 - 1.0) > FRACTION_TOL:
            raise OutOfDomain("sample fractions must sum to 1")
        if self.var1 < 0 or self.var2 < 0:
            raise OutOfDomain("variances must be non-negative")

    @classmethod
    def from_summaries(cls, s1: SummaryStats, s2: SummaryStats) -> "GammaInputs":
        n = s1.n + s2.n
        return cls(s1.n / n, s2.n / n, s1.var_unbiased, s2.var_unbiased, s1.mean, s2.mean)

    @classmethod
    def from_data(cls, data: TwoSampleData) -> "GammaInputs":
        s1, s2 = summarize(data.sample1), summarize(data.sample2)
        require_variances(s1, "sample 1")
        require_variances(s2, "sample 2")
        return cls.from_summaries(s1, s2)

    @property
    def branch(self) -> Branch:
        return Branch.ORDERED if self.var1 <= self.var2 else Branch.UNORDERED


@dataclass(frozen=True)
class GammaWeight:
    value: float
    branch: Branch
    rule: str
    out_of_range: bool = False


@dataclass(frozen=True)
class CommonMeanEstimate:
    value: float
    gamma: GammaWeight
    inputs: GammaInputs


# --------------------------------------------------------------------------
# vectorised weight kernels (NaN marks an undefined weight)


def _gd_kernel(frac1, frac2, var1, var2):
    num = frac1 * var2
    with np.errstate(invalid="ignore", divide="ignore"):
        return num / (num + frac2 * var1)


def _ordered(var1, var2):
    return np.asarray(var1) <= np.asarray(var2)


def unit_psi(var1, var2, dist2):
    """The constant function 1, the simplest admissible Kubokawa ``psi``."""
    return np.ones_like(np.asarray(var1, dtype=float) + np.asarray(dist2, dtype=float))


class EstimatorSpec:
    """Base class: a named weight rule ``gamma(frac1, frac2, var1, var2, mean1, mean2)``."""

    name = "abstract"
    convex = True
    location_equivariant = True

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        raise NotImplementedError

    def gamma(self, inputs: GammaInputs) -> GammaWeight:
        raise NotImplementedError

    def statistic(self) -> "CommonMeanStatistic":
        return CommonMeanStatistic(self)


def _scalar(spec: EstimatorSpec, inputs: GammaInputs) -> float:
    return float(
        spec.weights(
            np.float64(inputs.frac1),
            np.float64(inputs.frac2),
            np.float64(inputs.var1),
            np.float64(inputs.var2),
            np.float64(inputs.mean1),
            np.float64(inputs.mean2),
        )
    )


def _check_not_both_zero(inputs: GammaInputs):
    if inputs.var1 == 0 and inputs.var2 == 0:
        raise BothVariancesZero("both sample variances are zero; the weight is 0/0")


@dataclass(frozen=True)
class KnownVariance(EstimatorSpec):
    sigma1_sq: float
    sigma2_sq: float
    name = "known-variance"

    def __post_init__(self):
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise NonPositiveVariance("known variances must be positive")

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        g = _gd_kernel(frac1, frac2, self.sigma1_sq, self.sigma2_sq)
        return g * np.ones_like(np.asarray(var1, dtype=float))

    def gamma(self, inputs):
        return GammaWeight(_scalar(self, inputs), inputs.branch, self.name)


@dataclass(frozen=True)
class GraybillDeal(EstimatorSpec):
    name = "gd"

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        return _gd_kernel(frac1, frac2, var1, var2)

    def gamma(self, inputs):
        return gamma_graybill_deal(inputs)


@dataclass(frozen=True)
class ElfessiUnbalanced(EstimatorSpec):
    """GD on the ordered branch, sample-size weights ``n1/n`` otherwise.

    This is the estimator reported as "Nair's estimator" in the data
    analyses; ``nair`` is accepted as an alias on the command line.
    """

    name = "nair"

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        gd = _gd_kernel(frac1, frac2, var1, var2)
        return np.where(_ordered(var1, var2), gd, frac1)

    def gamma(self, inputs):
        return gamma_elfessi_unbalanced(inputs)


@dataclass(frozen=True)
class ElfessiBalanced(EstimatorSpec):
    name = "elfessi3"

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        if np.any(np.abs(np.asarray(frac1) - 0.5) > FRACTION_TOL):
            raise UnbalancedDesign("this estimator is defined for n1 == n2 only")
        gd = _gd_kernel(frac1, frac2, var1, var2)
        with np.errstate(invalid="ignore", divide="ignore"):
            alt = var1 / (var1 + var2)
        return np.where(_ordered(var1, var2), gd, alt)

    def gamma(self, inputs):
        return gamma_elfessi_balanced(inputs)


@dataclass(frozen=True)
class FixedWeight(EstimatorSpec):
    weight: float
    name = "fixed"

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        return np.full_like(np.asarray(var1, dtype=float), float(self.weight))

    def gamma(self, inputs):
        return GammaWeight(float(self.weight), inputs.branch, self.name)

    @property
    def convex(self):
        return 0.0 <= self.weight <= 1.0


@dataclass(frozen=True)
class Kubokawa(EstimatorSpec):
    """``1 - a / (b * R * psi(var1, var2, (mean1 - mean2)**2))``.

    ``R = (b * var2 + c * (mean1 - mean2)**2) / var1``.  ``psi`` must accept
    numpy arrays.  Weights are returned unclamped unless ``clamp`` is set.
    """

    a: float
    b: float
    c: float
    psi: Callable = field(default=unit_psi, compare=False)
    clamp: bool = False
    name = "kubokawa"
    convex = False
    location_equivariant = False

    def __post_init__(self):
        if self.a < 0 or self.c < 0 or not self.b > 0:
            raise OutOfDomain("Kubokawa constants need a >= 0, b > 0, c >= 0")

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        var1 = np.asarray(var1, dtype=float)
        dist2 = (np.asarray(mean1) - np.asarray(mean2)) ** 2
        with np.errstate(invalid="ignore", divide="ignore"):
            r = (self.b * var2 + self.c * dist2) / var1
            den = self.b * r * self.psi(var1, var2, dist2)
            g = 1.0 - self.a / den
        g = np.where((var1 == 0) | (den == 0) | ~np.isfinite(den), np.nan, g)
        if self.clamp:
            g = np.clip(g, 0.0, 1.0)
        return g

    def gamma(self, inputs):
        return gamma_kubokawa(inputs, self.a, self.b, self.c, self.psi, clamp=self.clamp)


def _tilde(rule: TildeRule, frac1, g):
    if rule is TildeRule.FLOOR:
        return np.broadcast_to(frac1, np.shape(g)).astype(float)
    if rule is TildeRule.REFLECT:
        return 2.0 * frac1 - g
    return 1.5 * frac1 - 0.5 * g


@dataclass(frozen=True)
class ChangPlus(EstimatorSpec):
    """Replace the base weight by a modified one whenever it falls below ``n1/n``."""

    base: EstimatorSpec
    tilde_rule: TildeRule = TildeRule.FLOOR

    @property
    def name(self):
        return f"chang:{self.base.name}"

    @property
    def convex(self):
        return self.base.convex

    @property
    def location_equivariant(self):
        return self.base.location_equivariant

    def weights(self, frac1, frac2, var1, var2, mean1, mean2):
        g = self.base.weights(frac1, frac2, var1, var2, mean1, mean2)
        return np.where(g >= frac1, g, _tilde(self.tilde_rule, frac1, g))

    def gamma(self, inputs):
        return gamma_chang_plus(self.base.gamma(inputs), inputs.frac1, self.tilde_rule)


# --------------------------------------------------------------------------
# scalar weight rules


def gamma_graybill_deal(inputs: GammaInputs) -> GammaWeight:
    """Inverse-variance weight ``n1*var2 / (n1*var2 + n2*var1)``."""
    _check_not_both_zero(inputs)
    return GammaWeight(_scalar(GraybillDeal(), inputs), inputs.branch, "gd")


def gamma_elfessi_unbalanced(inputs: GammaInputs) -> GammaWeight:
    if inputs.branch is Branch.ORDERED:
        _check_not_both_zero(inputs)
    return GammaWeight(_scalar(ElfessiUnbalanced(), inputs), inputs.branch, "nair")


def gamma_elfessi_balanced(inputs: GammaInputs) -> GammaWeight:
    if abs(inputs.frac1 - 0.5) > FRACTION_TOL:
        raise UnbalancedDesign("this estimator is defined for n1 == n2 only")
    _check_not_both_zero(inputs)
    return GammaWeight(_scalar(ElfessiBalanced(), inputs), inputs.branch, "elfessi3")


def gamma_kubokawa(inputs: GammaInputs, a, b, c, psi=unit_psi, clamp=False) -> GammaWeight:
    if inputs.var1 == 0:
        raise ZeroDenominator("var1 is zero, R is undefined")
    dist2 = (inputs.mean1 - inputs.mean2) ** 2
    r = (b * inputs.var2 + c * dist2) / inputs.var1
    psi_value = float(psi(np.float64(inputs.var1), np.float64(inputs.var2), np.float64(dist2)))
    if not psi_value > 0:
        raise OutOfDomain("psi must be positive")
    if b * r * psi_value == 0:
        raise ZeroDenominator("b * R * psi is zero")
    raw = _scalar(Kubokawa(a, b, c, psi), inputs)
    value = min(max(raw, 0.0), 1.0) if clamp else raw
    return GammaWeight(value, inputs.branch, "kubokawa", out_of_range=not 0.0 <= raw <= 1.0)


def gamma_chang_plus(gamma_n: GammaWeight, frac1: float, tilde_rule=TildeRule.FLOOR) -> GammaWeight:
    """Raise a weight below ``frac1`` into ``[frac1, 2*frac1 - gamma_n]``."""
    if not 0.0 < frac1 < 1.0:
        raise OutOfDomain("frac1 must lie in (0, 1)")
    tilde_rule = TildeRule(tilde_rule)
    g = gamma_n.value
    if g >= frac1:
        value = g
    else:
        value = float(_tilde(tilde_rule, frac1, np.float64(g)))
        assert frac1 <= value <= 2.0 * frac1 - g + 1e-15
    return GammaWeight(value, gamma_n.branch, f"chang:{gamma_n.rule}", gamma_n.out_of_range)


# --------------------------------------------------------------------------
# estimates


def _combine(gamma, mean1, mean2):
    return gamma * mean1 + (1.0 - gamma) * mean2


def estimate_known_variance(inputs: GammaInputs, sigma1sq: float, sigma2sq: float) -> CommonMeanEstimate:
    """Minimum-variance unbiased combination when both variances are known."""
    gamma = KnownVariance(sigma1sq, sigma2sq).gamma(inputs)
    return CommonMeanEstimate(_combine(gamma.value, inputs.mean1, inputs.mean2), gamma, inputs)


def estimate_common_mean(data: TwoSampleData, spec: EstimatorSpec) -> CommonMeanEstimate:
    inputs = GammaInputs.from_data(data)
    gamma = spec.gamma(inputs)
    return CommonMeanEstimate(_combine(gamma.value, inputs.mean1, inputs.mean2), gamma, inputs)


# --------------------------------------------------------------------------
# the two-sample statistic used by the resampling module


def _downdated_moments(x: np.ndarray):
    """Means and unbiased variances of all leave-one-out subsamples of ``x``.

    Removing ``x_j`` shifts the mean by ``-d_j/(n-1)`` and lowers the sum of
    squared deviations by ``d_j**2 * n/(n-1)``, with ``d_j = x_j - mean``.
    """
    n = x.size
    s = summarize(x)
    d = x - s.mean
    ss = s.var_biased * n
    means = s.mean - d / (n - 1)
    ss_out = np.maximum(ss - d * d * (n / (n - 1)), 0.0)
    return means, ss_out / (n - 2)


class CommonMeanStatistic:
    """Callable two-sample statistic ``(x1, x2) -> estimate`` for one spec.

    Besides plain evaluation it offers vectorised paths that the jackknife
    and bootstrap use when available: ``batch`` over stacked resamples,
    ``leave_one_out`` and ``leave_pair_out``.
    """

    def __init__(self, spec: EstimatorSpec):
        self.spec = spec

    def __repr__(self):
        return f"CommonMeanStatistic({self.spec!r})"

    def __call__(self, x1, x2) -> float:
        s1, s2 = summarize(x1), summarize(x2)
        if s1.n < 2 or s2.n < 2:
            raise TooFewObservations("each sample needs at least 2 observations")
        inputs = GammaInputs.from_summaries(s1, s2)
        return _combine(self.spec.gamma(inputs).value, s1.mean, s2.mean)

    evaluate = __call__

    def from_moments(self, n1, n2, mean1, mean2, var1, var2) -> np.ndarray:
        n = n1 + n2
        g = self.spec.weights(n1 / n, n2 / n, var1, var2, mean1, mean2)
        return _combine(g, mean1, mean2)

    def batch(self, x1s: np.ndarray, x2s: np.ndarray) -> np.ndarray:
        """Evaluate on each row pair of two stacked arrays; NaN marks failures."""
        n1, n2 = x1s.shape[1], x2s.shape[1]
        return self.from_moments(
            n1, n2, x1s.mean(axis=1), x2s.mean(axis=1), x1s.var(axis=1, ddof=1), x2s.var(axis=1, ddof=1)
        )

    def _full_moments(self, x):
        s = summarize(x)
        return s.mean, s.var_unbiased

    def leave_one_out(self, x1, x2):
        x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
        n1, n2 = x1.size, x2.size
        if n1 < 3 or n2 < 3:
            raise TooFewObservations("leave-one-out needs at least 3 observations per sample")
        m1, v1 = self._full_moments(x1)
        m2, v2 = self._full_moments(x2)
        lm1, lv1 = _downdated_moments(x1)
        lm2, lv2 = _downdated_moments(x2)
        loo1 = self.from_moments(n1 - 1, n2, lm1, m2, lv1, v2)
        loo2 = self.from_moments(n1, n2 - 1, m1, lm2, v1, lv2)
        _raise_on_nan(np.concatenate([loo1, loo2]))
        return loo1, loo2

    def leave_pair_out(self, x1, x2):
        x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
        n = x1.size
        if n < 3:
            raise TooFewObservations("leave-one-pair-out needs at least 3 pairs")
        lm1, lv1 = _downdated_moments(x1)
        lm2, lv2 = _downdated_moments(x2)
        loo = self.from_moments(n - 1, n - 1, lm1, lm2, lv1, lv2)
        _raise_on_nan(loo)
        return loo


def _raise_on_nan(values):
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise StatisticEvaluationError("weight undefined on reduced data", index=int(bad[0]))


def statistic_for(spec: EstimatorSpec) -> CommonMeanStatistic:
    return CommonMeanStatistic(spec)


def pooled_mean(x1, x2) -> float:
    """Grand mean of both samples, ``(n1*mean1 + n2*mean2) / n``."""
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    return math.fsum(np.concatenate([x1, x2])) / (x1.size + x2.size)
