"""Monte Carlo coverage study for common-mean confidence intervals.

Replication ``r`` draws its two samples from substream ``(seed, r, 0)``;
randomised variance methods use ``(seed, r, *method.stream_key)``.  Results
therefore do not depend on the number of worker processes or on the order
in which methods are listed, and every method sees the same data in a
given replication.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from twojack.core_stats import Sample
from twojack.errors import DataError, EstimatorError, InvalidModel
from twojack.estimators import EstimatorSpec, GraybillDeal
from twojack.inference import VarianceMethod, ZStyle, estimate_sd, z_value
from twojack.streams import GENERATOR, substream

DEFAULT_SHAPES = {4: 1.5, 5: 2.5}
MODEL_NAMES = {1: "normal", 2: "t(5)", 3: "uniform(-5,5)", 4: "gamma(1.5)", 5: "gamma(2.5)"}
_T_SCALE = math.sqrt(5 / 3)
_U_SCALE = math.sqrt(25 / 3)


@dataclass(frozen=True)
class SimulationModel:
    """Location-scale family ``mu + sigma_i * noise`` for populations 1 and 2.

    Models 1 to 3 use unit-variance noise (normal, t(5), uniform).  The gamma
    models 4 and 5 follow ``mu + sigma_i * (G - a*sigma_i)`` with
    ``G ~ Gamma(shape=a, scale=sigma_i)``, whose variance is ``a*sigma_i**4``.
    """

    id: int
    mu: float = 10.0
    sigma1: float = 1.0
    sigma2: float = 2.0
    shape: float | None = None

    def __post_init__(self):
        if self.id not in MODEL_NAMES:
            raise InvalidModel(f"model must be one of 1..5, got {self.id}")
        if not (self.sigma1 > 0 and self.sigma2 > 0):
            raise InvalidModel("sigma1 and sigma2 must be positive")
        if self.sigma1 > self.sigma2:
            raise InvalidModel("the study assumes ordered variances, sigma1 <= sigma2")
        if self.id in DEFAULT_SHAPES:
            shape = DEFAULT_SHAPES[self.id] if self.shape is None else self.shape
            if not shape > 0:
                raise InvalidModel("gamma shape must be positive")
            object.__setattr__(self, "shape", float(shape))

    @property
    def name(self) -> str:
        return MODEL_NAMES[self.id]

    def sigma(self, population: int) -> float:
        if population not in (1, 2):
            raise InvalidModel(f"population must be 1 or 2, got {population}")
        return self.sigma1 if population == 1 else self.sigma2

    def variance(self, population: int) -> float:
        s = self.sigma(population)
        if self.id in DEFAULT_SHAPES:
            return self.shape * s**4
        return s * s


def _draw(model: SimulationModel, population: int, N: int, rng: np.random.Generator) -> np.ndarray:
    s = model.sigma(population)
    if model.id == 1:
        noise = rng.standard_normal(N)
    elif model.id == 2:
        noise = rng.standard_t(5, N) / _T_SCALE
    elif model.id == 3:
        noise = rng.uniform(-5.0, 5.0, N) / _U_SCALE
    else:
        a = model.shape
        return model.mu + s * (rng.gamma(a, s, N) - a * s)
    return model.mu + s * noise


def draw_sample(model: SimulationModel, population: int, N: int, rng: np.random.Generator) -> Sample:
    if N < 1:
        raise DataError("N must be at least 1")
    return Sample(_draw(model, population, N, rng))


def draw_pair(model: SimulationModel, N: int, seed: int, replication: int):
    """Both samples of one replication, from substream ``(seed, replication, 0)``."""
    rng = substream(seed, replication, 0)
    x1 = _draw(model, 1, N, rng)
    x2 = _draw(model, 2, N, rng)
    return x1, x2


@dataclass(frozen=True, eq=False)
class CoverageResult:
    model: int
    N: int
    method: str
    coverage: float
    reps: int
    seed: int
    mean_ci_width: float
    failures: int = 0
    evaluations_per_rep: int = 0
    generator: str = GENERATOR
    hits: np.ndarray = field(default=None, repr=False)

    @property
    def standard_error(self) -> float:
        return math.sqrt(self.coverage * (1 - self.coverage) / max(self.reps, 1))


def _run_chunk(model, N, start, stop, methods, estimator, seed, z):
    count = stop - start
    hits = np.zeros((count, len(methods)), dtype=bool)
    widths = np.zeros((count, len(methods)))
    failed = np.zeros(count, dtype=bool)
    statistic = estimator.statistic()
    for k, r in enumerate(range(start, stop)):
        x1, x2 = draw_pair(model, N, seed, r)
        try:
            center = statistic(x1, x2)
            for j, method in enumerate(methods):
                rng = substream(seed, r, *method.stream_key)
                half = z * estimate_sd(method, (x1, x2), estimator, rng=rng)
                hits[k, j] = center - half <= model.mu <= center + half
                widths[k, j] = 2 * half
        except (EstimatorError, DataError):
            failed[k] = True
    return hits, widths, failed


def _chunks(reps: int, workers: int):
    size = max(1, min(1000, math.ceil(reps / (4 * max(workers, 1)))))
    return [(s, min(s + size, reps)) for s in range(0, reps, size)]


def coverage_experiment(
    model: SimulationModel,
    N: int,
    reps: int,
    methods,
    estimator: EstimatorSpec | None = None,
    seed: int = 0,
    level: float = 0.95,
    z_style: ZStyle | str = ZStyle.EXACT,
    workers: int = 1,
) -> list[CoverageResult]:
    """Empirical coverage of ``center +- z*sd`` intervals for the common mean.

    Replications in which the estimator or a method fails are excluded and
    counted in ``failures``.
    """
    if reps < 1:
        raise DataError("reps must be at least 1")
    if N < 2:
        raise DataError("N must be at least 2")
    estimator = estimator or GraybillDeal()
    methods = [m if isinstance(m, VarianceMethod) else VarianceMethod.parse(m) for m in methods]
    z = z_value(level, z_style)
    chunks = _chunks(reps, workers)
    args = [(model, N, a, b, methods, estimator, seed, z) for a, b in chunks]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, *zip(*args)))
    else:
        parts = [_run_chunk(*a) for a in args]
    hits = np.concatenate([p[0] for p in parts])
    widths = np.concatenate([p[1] for p in parts])
    failed = np.concatenate([p[2] for p in parts])
    ok = ~failed
    valid = int(ok.sum())

    results = []
    for j, method in enumerate(methods):
        h = hits[ok, j]
        results.append(
            CoverageResult(
                model=model.id,
                N=N,
                method=method.label,
                coverage=float(h.mean()) if valid else math.nan,
                reps=valid,
                seed=seed,
                mean_ci_width=float(widths[ok, j].mean()) if valid else math.nan,
                failures=int(failed.sum()),
                evaluations_per_rep=method.evaluations(N, N),
                hits=h,
            )
        )
    return results


def paired_coverage_test(first: CoverageResult, second: CoverageResult) -> float:
    """One-sided exact sign test on discordant replications.

    Returns the p-value for the alternative "``second`` covers more often
    than ``first``".  Both results must come from the same replications.
    """
    if first.hits is None or second.hits is None or first.hits.shape != second.hits.shape:
        raise DataError("paired comparison needs per-replication hits from the same runs")
    only_second = int(np.sum(second.hits & ~first.hits))
    only_first = int(np.sum(first.hits & ~second.hits))
    discordant = only_first + only_second
    if discordant == 0:
        return 1.0
    return float(stats.binomtest(only_second, discordant, 0.5, alternative="greater").pvalue)


def misordering_probability(model: SimulationModel, N: int, reps: int, seed: int = 0) -> float:
    """Frequency of ``var1 > var2`` (unbiased sample variances) over ``reps`` replications."""
    if N < 2:
        raise DataError("N must be at least 2")
    if reps < 1:
        raise DataError("reps must be at least 1")
    count = 0
    for r in range(reps):
        x1, x2 = draw_pair(model, N, seed, r)
        count += np.var(x1, ddof=1) > np.var(x2, ddof=1)
    return count / reps


def coverage_table(
    models,
    Ns,
    reps: int,
    Bs,
    seed: int = 0,
    sigma1: float = 1.0,
    sigma2: float = 2.0,
    estimator: EstimatorSpec | None = None,
    workers: int = 1,
    level: float = 0.95,
    z_style: ZStyle | str = ZStyle.EXACT,
) -> list[dict]:
    """Rows of ``model, N, jackknife coverage, bootstrap coverage per B``."""
    methods = [VarianceMethod("jackknife")] + [VarianceMethod("bootstrap", B=B) for B in Bs]
    rows = []
    for m in models:
        model = SimulationModel(m, sigma1=sigma1, sigma2=sigma2)
        for N in Ns:
            results = coverage_experiment(model, N, reps, methods, estimator, seed, level, z_style, workers)
            row = {"model": m, "N": N, "reps": results[0].reps, "failures": results[0].failures}
            row.update({r.method: r.coverage for r in results})
            rows.append(row)
    return rows
