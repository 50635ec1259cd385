"""Per-sample summary statistics and the sample-variance linearization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from twojack.errors import EmptySample, NonFiniteValue, TooFewObservations


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered, finite, non-empty vector of measurements.

    The values are copied into a read-only float array on construction.
    """

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if arr.size == 0:
            raise EmptySample("sample has no observations")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("sample contains NaN or infinite values")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self):
        return self.values.size

    def __iter__(self):
        return iter(self.values.tolist())

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash(self.values.tobytes())

    def __repr__(self):
        return f"Sample(n={len(self)})"


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    var_biased: float
    var_unbiased: float

    @property
    def degenerate(self) -> bool:
        """True when every observation is identical (variance 0)."""
        return self.var_biased == 0.0


def _as_array(sample) -> np.ndarray:
    if isinstance(sample, Sample):
        return sample.values
    return Sample(sample).values


def summarize(sample: Sample | np.ndarray) -> SummaryStats:
    """Mean and both variance conventions of one sample.

    Uses a two-pass computation: the mean first, then the sum of squared
    deviations from it.  For a single observation the variances are
    reported as NaN; the estimators reject such samples before use.
    """
    x = _as_array(sample)
    n = x.size
    mean = math.fsum(x) / n
    if n == 1:
        return SummaryStats(1, mean, math.nan, math.nan)
    ss = math.fsum((x - mean) ** 2)
    return SummaryStats(n, mean, ss / n, ss / (n - 1))


def require_variances(stats: SummaryStats, label: str = "sample") -> None:
    if stats.n < 2:
        raise TooFewObservations(f"{label} needs at least 2 observations, got {stats.n}")


def linearization_decomposition(sample, mu: float, sigma2: float) -> tuple[float, float]:
    """Split ``S_n^2 - sigma2`` into a linear average and a quadratic remainder.

    Returns ``(linear_part, remainder)`` with::

        linear_part = mean((x - mu)**2 - sigma2)
        remainder   = mean(x - mu)**2

    so that ``var_biased - sigma2 == linear_part - remainder`` holds as an
    algebraic identity for any ``mu`` and ``sigma2``.
    """
    x = _as_array(sample)
    if not (math.isfinite(mu) and math.isfinite(sigma2)):
        raise NonFiniteValue("mu and sigma2 must be finite")
    d = x - mu
    n = x.size
    linear_part = math.fsum(d * d) / n - sigma2
    remainder = (math.fsum(d) / n) ** 2
    return linear_part, remainder
