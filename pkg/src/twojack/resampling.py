"""Jackknife and bootstrap variance estimation for two-sample statistics.

A *two-sample statistic* is any callable ``statistic(x1, x2) -> float``
that is symmetric within each sample.  Objects may additionally provide
``leave_one_out(x1, x2)``, ``leave_pair_out(x1, x2)`` and
``batch(x1s, x2s)``; these are used as fast paths when present (see
:class:`twojack.estimators.CommonMeanStatistic`).  Passing ``fast=False``
forces the direct recomputation path, which is kept as a reference.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from twojack.errors import (
    DataError,
    EstimatorError,
    InvalidD,
    StatisticEvaluationError,
    TooFewObservations,
    UnbalancedDesign,
)
from twojack.estimators import TwoSampleData
from twojack.streams import substream

DEFAULT_ENUMERATION_LIMIT = 100_000
DEFAULT_MAX_RETRIES = 100


class Norming(enum.Enum):
    """Divisor convention for the pseudo-value variances.

    ``UNBIASED`` divides by ``n_i - 1`` (factor ``(N-1)/N`` in paired mode),
    ``PLUGIN`` divides by ``n_i`` (factor ``((N-1)/N)**2``).
    """

    UNBIASED = "unbiased"
    PLUGIN = "plugin"

    @property
    def ddof(self) -> int:
        return 1 if self is Norming.UNBIASED else 0


class Centering(enum.Enum):
    """How the unequal-size pseudo-values are combined into one variance.

    ``PER_SAMPLE`` centres each sample's pseudo-values at their own mean and
    mixes the two variances with weights ``n_i/n``.  ``POOLED`` takes the
    variance of all ``n`` pseudo-values around their common mean, the
    classical one-sample jackknife applied to the concatenated data.
    """

    PER_SAMPLE = "per-sample"
    POOLED = "pooled"


@dataclass(frozen=True, eq=False)
class JackknifeReport:
    mode: str  # "unequal", "paired" or "delete-d"
    norming: Norming | None
    estimate: float
    n: int
    sigma_sq: float
    variance: float
    tau1_sq: float | None = None
    tau2_sq: float | None = None
    pseudo: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    replicates: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    n1: int | None = None
    centering: Centering | None = None
    d: int | None = None
    exact: bool = True
    evaluations: int = 0

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)

    @property
    def pseudo1(self) -> np.ndarray:
        return self.pseudo[: self.n1] if self.mode == "unequal" else self.pseudo

    @property
    def pseudo2(self) -> np.ndarray | None:
        return self.pseudo[self.n1 :] if self.mode == "unequal" else None


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    variance: float
    B: int
    replicates: np.ndarray = field(repr=False)
    retries: int = 0
    seed: int | None = None

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def _map(func, items, executor):
    if executor is None:
        return [func(i) for i in items]
    return list(executor.map(func, items))


def _guarded(statistic, x1, x2, index):
    try:
        value = float(statistic(x1, x2))
    except (EstimatorError, DataError, ZeroDivisionError, FloatingPointError) as exc:
        raise StatisticEvaluationError(str(exc), index=index) from exc
    if not math.isfinite(value):
        raise StatisticEvaluationError("statistic returned a non-finite value", index=index)
    return value


def as_data(data) -> TwoSampleData:
    if isinstance(data, TwoSampleData):
        return data
    x1, x2 = data
    return TwoSampleData.from_arrays(x1, x2)


def _var(values: np.ndarray, ddof: int) -> float:
    return float(np.var(values, ddof=ddof)) if values.size > ddof else math.nan


# --------------------------------------------------------------------------
# leave-one-out, unequal sizes


def leave_one_out_values(statistic, data, *, fast=True, executor=None):
    """All ``n`` leave-one-out statistics, sample 1 deletions first."""
    data = as_data(data)
    x1, x2 = data.x1, data.x2
    if fast and hasattr(statistic, "leave_one_out"):
        loo1, loo2 = statistic.leave_one_out(x1, x2)
        return np.concatenate([loo1, loo2])

    n1 = data.n1

    def one(i):
        if i < n1:
            return _guarded(statistic, np.delete(x1, i), x2, i)
        return _guarded(statistic, x1, np.delete(x2, i - n1), i)

    return np.array(_map(one, range(data.n), executor), dtype=float)


def jackknife_unequal(
    statistic,
    data,
    norming: Norming = Norming.UNBIASED,
    centering: Centering = Centering.PER_SAMPLE,
    *,
    fast: bool = True,
    executor=None,
) -> JackknifeReport:
    """Leave-one-out jackknife for two samples of possibly unequal size.

    Pseudo-values are ``n*T - (n-1)*T_{-i}`` over all ``n = n1 + n2``
    deletions.  With per-sample centering the asymptotic variance estimate
    is ``(n1/n) tau1 + (n2/n) tau2``; ``variance`` is that divided by ``n``.
    """
    data = as_data(data)
    norming, centering = Norming(norming), Centering(centering)
    n1, n2, n = data.n1, data.n2, data.n
    if n1 < 2 or n2 < 2:
        raise TooFewObservations("each sample needs at least 2 observations")
    estimate = float(statistic(data.x1, data.x2))
    loo = leave_one_out_values(statistic, data, fast=fast, executor=executor)
    pseudo = n * estimate - (n - 1) * loo

    # variances of the pseudo-values, computed from the leave-outs to avoid
    # the cancellation in n*T - (n-1)*T_{-i}
    scale = (n - 1) ** 2
    ddof = norming.ddof
    tau1 = scale * _var(loo[:n1], ddof)
    tau2 = scale * _var(loo[n1:], ddof)
    if centering is Centering.PER_SAMPLE:
        sigma_sq = (n1 / n) * tau1 + (n2 / n) * tau2
    else:
        sigma_sq = scale * _var(loo, ddof)
    return JackknifeReport(
        mode="unequal",
        norming=norming,
        estimate=estimate,
        n=n,
        sigma_sq=sigma_sq,
        variance=sigma_sq / n,
        tau1_sq=tau1,
        tau2_sq=tau2,
        pseudo=pseudo,
        replicates=loo,
        n1=n1,
        centering=centering,
        evaluations=n + 1,
    )


# --------------------------------------------------------------------------
# leave-one-pair-out, equal sizes


def _require_balanced(data: TwoSampleData):
    if not data.balanced:
        raise UnbalancedDesign(f"paired deletion needs n1 == n2, got {data.n1} and {data.n2}")


def leave_pair_out_values(statistic, data, *, fast=True, executor=None):
    data = as_data(data)
    _require_balanced(data)
    x1, x2 = data.x1, data.x2
    if fast and hasattr(statistic, "leave_pair_out"):
        return np.asarray(statistic.leave_pair_out(x1, x2), dtype=float)

    def one(i):
        return _guarded(statistic, np.delete(x1, i), np.delete(x2, i), i)

    return np.array(_map(one, range(data.n1), executor), dtype=float)


def jackknife_paired(
    statistic, data, norming: Norming = Norming.UNBIASED, *, fast: bool = True, executor=None
) -> JackknifeReport:
    """Leave-one-pair-out jackknife for balanced designs.

    ``Var(T_N) = f_N * sum((T_{N,-i} - mean)**2)`` with ``f_N = (N-1)/N``
    (unbiased) or ``((N-1)/N)**2`` (plug-in).
    """
    data = as_data(data)
    _require_balanced(data)
    norming = Norming(norming)
    N = data.n1
    if N < 2:
        raise TooFewObservations("paired jackknife needs at least 2 pairs")
    estimate = float(statistic(data.x1, data.x2))
    loo = leave_pair_out_values(statistic, data, fast=fast, executor=executor)
    ss = float(np.sum((loo - loo.mean()) ** 2))
    factor = (N - 1) / N
    if norming is Norming.PLUGIN:
        factor *= factor
    variance = factor * ss
    return JackknifeReport(
        mode="paired",
        norming=norming,
        estimate=estimate,
        n=N,
        sigma_sq=N * variance,
        variance=variance,
        tau1_sq=N * variance,
        pseudo=N * estimate - (N - 1) * loo,
        replicates=loo,
        n1=N,
        evaluations=N + 1,
    )


def jackknife(statistic, data, norming=Norming.UNBIASED, centering=Centering.PER_SAMPLE, **kwargs):
    """Paired jackknife for balanced data, leave-one-out otherwise."""
    data = as_data(data)
    if data.balanced:
        return jackknife_paired(statistic, data, norming, **kwargs)
    return jackknife_unequal(statistic, data, norming, centering, **kwargs)


# --------------------------------------------------------------------------
# delete-d


def _sample_subsets(N: int, d: int, count: int, rng: np.random.Generator) -> list[tuple[int, ...]]:
    """``count`` distinct size-``d`` subsets of ``range(N)``, uniformly at random."""
    seen: set[tuple[int, ...]] = set()
    chosen = []
    while len(chosen) < count:
        subset = tuple(sorted(rng.choice(N, size=d, replace=False).tolist()))
        if subset not in seen:
            seen.add(subset)
            chosen.append(subset)
    return chosen


def _evaluate_retained(statistic, x1, x2, retained: np.ndarray) -> np.ndarray:
    if hasattr(statistic, "batch"):
        out = []
        for start in range(0, len(retained), 10_000):
            idx = retained[start : start + 10_000]
            out.append(np.asarray(statistic.batch(x1[idx], x2[idx]), dtype=float))
        values = np.concatenate(out)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            raise StatisticEvaluationError("statistic undefined on retained subset", index=int(bad[0]))
        return values
    return np.array([_guarded(statistic, x1[idx], x2[idx], k) for k, idx in enumerate(retained)])


def delete_d_jackknife(
    statistic,
    data,
    d: int,
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT,
    rng: np.random.Generator | None = None,
) -> JackknifeReport:
    """Delete-d jackknife over pairs, ``(r / (d * C(N, d))) * sum((T^(s) - T_N)**2)``.

    All ``C(N, d)`` subsets are enumerated when that count does not exceed
    ``enumeration_limit``; otherwise ``enumeration_limit`` distinct subsets
    are drawn uniformly with ``rng`` and the average is used in place of
    the full sum.  ``variance`` estimates ``Var(T_N)``.
    """
    data = as_data(data)
    _require_balanced(data)
    N = data.n1
    if not 1 <= d <= N - 2:
        raise InvalidD(f"d must satisfy 1 <= d <= N - 2 = {N - 2}, got {d}")
    if enumeration_limit < 1:
        raise InvalidD("enumeration_limit must be at least 1")
    r = N - d
    total = math.comb(N, d)
    exact = total <= enumeration_limit
    if exact:
        deleted = list(itertools.combinations(range(N), d))
    else:
        if rng is None:
            raise InvalidD(f"C({N}, {d}) = {total} exceeds the enumeration limit; an rng is required")
        deleted = _sample_subsets(N, d, enumeration_limit, rng)
    everything = set(range(N))
    retained = np.array([sorted(everything.difference(s)) for s in deleted], dtype=np.intp)

    estimate = float(statistic(data.x1, data.x2))
    values = _evaluate_retained(statistic, data.x1, data.x2, retained)
    variance = (r / d) * float(np.mean((values - estimate) ** 2))
    return JackknifeReport(
        mode="delete-d",
        norming=None,
        estimate=estimate,
        n=N,
        sigma_sq=N * variance,
        variance=variance,
        replicates=values,
        n1=N,
        d=d,
        exact=exact,
        evaluations=len(values) + 1,
    )


# --------------------------------------------------------------------------
# bootstrap


def _bootstrap_one(statistic, x1, x2, rng, index, max_retries):
    n1, n2 = x1.size, x2.size
    for attempt in range(max_retries + 1):
        i1 = rng.integers(0, n1, size=n1)
        i2 = rng.integers(0, n2, size=n2)
        try:
            return _guarded(statistic, x1[i1], x2[i2], index), attempt
        except StatisticEvaluationError:
            continue
    raise StatisticEvaluationError(f"no valid resample after {max_retries} retries", index=index)


def bootstrap_variance(
    statistic,
    data,
    B: int,
    *,
    seed: int | None = None,
    rng: np.random.Generator | None = None,
    executor=None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> BootstrapResult:
    """Nonparametric two-sample bootstrap variance.

    Each replicate resamples ``n1`` values from sample 1 and ``n2`` from
    sample 2 with replacement; the result is the unbiased sample variance
    of the ``B`` replicate statistics.

    Exactly one source of randomness must be given.  With ``seed`` every
    replicate ``b`` owns the substream ``(seed, b)`` and replicates may be
    evaluated through ``executor`` in any order.  With ``rng`` all indices
    are drawn from that generator in one block (rows in replicate order),
    which is much faster for statistics offering ``batch``.

    A replicate on which the statistic fails is redrawn, at most
    ``max_retries`` times, from the same stream.
    """
    data = as_data(data)
    if B < 2:
        raise TooFewObservations("the bootstrap needs B >= 2")
    if (seed is None) == (rng is None):
        raise ValueError("pass exactly one of seed= or rng=")
    x1, x2 = data.x1, data.x2
    n1, n2 = data.n1, data.n2

    if seed is not None:
        results = _map(
            lambda b: _bootstrap_one(statistic, x1, x2, substream(seed, b), b, max_retries),
            range(B),
            executor,
        )
        replicates = np.array([t for t, _ in results], dtype=float)
        retries = sum(k for _, k in results)
    else:
        i1 = rng.integers(0, n1, size=(B, n1))
        i2 = rng.integers(0, n2, size=(B, n2))
        if hasattr(statistic, "batch"):
            replicates = np.asarray(statistic.batch(x1[i1], x2[i2]), dtype=float)
        else:
            replicates = np.empty(B)
            for b in range(B):
                try:
                    replicates[b] = _guarded(statistic, x1[i1[b]], x2[i2[b]], b)
                except StatisticEvaluationError:
                    replicates[b] = math.nan
        retries = 0
        for b in np.flatnonzero(~np.isfinite(replicates)):
            value, attempts = _bootstrap_one(statistic, x1, x2, rng, int(b), max_retries - 1)
            replicates[b] = value
            retries += attempts + 1

    return BootstrapResult(
        variance=float(np.var(replicates, ddof=1)),
        B=B,
        replicates=replicates,
        retries=retries,
        seed=seed,
    )
