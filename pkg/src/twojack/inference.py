"""Normal-theory variance estimates and confidence intervals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from twojack import resampling
from twojack.core_stats import require_variances, summarize
from twojack.errors import OutOfDomain
from twojack.estimators import EstimatorSpec, GammaInputs, TwoSampleData
from twojack.resampling import Centering, Norming
from twojack.streams import substream


class ZStyle(enum.Enum):
    EXACT = "exact"
    PAPER = "paper"  # z = 1.96 at the 95% level, as printed in published tables


@dataclass(frozen=True)
class PopulationParams:
    lambda1: float
    lambda2: float
    sigma1_sq: float
    sigma2_sq: float
    mu: float = 0.0

    def __post_init__(self):
        if not (0 < self.lambda1 < 1 and 0 < self.lambda2 < 1):
            raise OutOfDomain("lambda1 and lambda2 must lie in (0, 1)")
        if abs(self.lambda1 + self.lambda2 - 1) > 1e-12:
            raise OutOfDomain("lambda1 + lambda2 must equal 1")
        if not (self.sigma1_sq > 0 and self.sigma2_sq > 0):
            raise OutOfDomain("population variances must be positive")

    @property
    def ordered_weight(self) -> float:
        """Graybill-Deal weight at the population parameters."""
        a = self.lambda1 * self.sigma2_sq
        return a / (a + self.lambda2 * self.sigma1_sq)


@dataclass(frozen=True)
class ConfidenceInterval:
    center: float
    sd: float
    level: float
    lower: float
    upper: float
    z: float
    method: str = ""

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class CLTVariance:
    variance: float
    gamma_hat: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def clt_variance(data: TwoSampleData, spec: EstimatorSpec, literal: bool = False) -> CLTVariance:
    """Plug-in CLT variance ``gamma^2 V1/n1 + (1-gamma)^2 V2/n2``.

    ``V_i`` are the unbiased sample variances.  With ``literal=True`` the
    biased variances (divisor ``n_i``) are used instead; the published
    table values are reproduced only by the default.
    """
    s1, s2 = summarize(data.sample1), summarize(data.sample2)
    require_variances(s1, "sample 1")
    require_variances(s2, "sample 2")
    g = spec.gamma(GammaInputs.from_summaries(s1, s2)).value
    if literal:
        v1, v2 = s1.var_biased, s2.var_biased
    else:
        v1, v2 = s1.var_unbiased, s2.var_unbiased
    variance = g * g * v1 / s1.n + (1 - g) ** 2 * v2 / s2.n
    return CLTVariance(variance, g)


def asymptotic_variance_formula(gamma: float, params: PopulationParams) -> float:
    """``gamma^2 sigma1^2/lambda1 + (1-gamma)^2 sigma2^2/lambda2``."""
    return (
        gamma * gamma * params.sigma1_sq / params.lambda1
        + (1 - gamma) ** 2 * params.sigma2_sq / params.lambda2
    )


# Acklam's rational approximation to the inverse normal CDF, refined by one
# Halley step against erfc; absolute error well below 1e-12 in double precision.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1
        )
    if p > 1 - _P_LOW:
        return -_acklam(1 - p)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
        ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1
    )


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"p must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    x = _acklam(p)
    e = 0.5 * math.erfc(-x / math.sqrt(2)) - p
    u = e * math.sqrt(2 * math.pi) * math.exp(x * x / 2)
    return x - u / (1 + x * u / 2)


def z_value(level: float, z_style: ZStyle | str = ZStyle.EXACT) -> float:
    if not 0.0 < level < 1.0:
        raise OutOfDomain(f"level must lie in (0, 1), got {level}")
    z = normal_quantile(0.5 + level / 2)
    if ZStyle(z_style) is ZStyle.PAPER:
        # two decimals, as in printed normal tables; 1.96 at the 95% level
        return round(z, 2)
    return z


def confidence_interval(
    center: float, sd: float, level: float = 0.95, z_style: ZStyle | str = ZStyle.EXACT, method: str = ""
) -> ConfidenceInterval:
    if sd < 0:
        raise OutOfDomain("sd must be non-negative")
    z = z_value(level, z_style)
    half = z * sd
    return ConfidenceInterval(center, sd, level, center - half, center + half, z, method)


# --------------------------------------------------------------------------
# variance methods


@dataclass(frozen=True)
class VarianceMethod:
    """A named way of estimating the standard deviation of an estimator.

    ``kind`` is one of ``jackknife`` (paired for balanced data, leave-one-out
    otherwise), ``jackknife-unequal``, ``jackknife-paired``, ``delete-d``,
    ``clt``, ``clt-literal`` or ``bootstrap``.
    """

    kind: str
    norming: Norming = Norming.UNBIASED
    centering: Centering = Centering.PER_SAMPLE
    B: int | None = None
    d: int | None = None

    KINDS = ("jackknife", "jackknife-unequal", "jackknife-paired", "delete-d", "clt", "clt-literal", "bootstrap")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise OutOfDomain(f"unknown variance method {self.kind!r}")
        if self.kind == "bootstrap" and not (self.B and self.B >= 2):
            raise OutOfDomain("bootstrap needs B >= 2")
        if self.kind == "delete-d" and not (self.d and self.d >= 1):
            raise OutOfDomain("delete-d needs d >= 1")
        object.__setattr__(self, "norming", Norming(self.norming))
        object.__setattr__(self, "centering", Centering(self.centering))

    @classmethod
    def parse(cls, text: str, norming=Norming.UNBIASED, centering=Centering.PER_SAMPLE) -> "VarianceMethod":
        kind, _, arg = text.strip().partition(":")
        try:
            if kind == "bootstrap":
                return cls(kind, norming, centering, B=int(arg))
            if kind == "delete-d":
                return cls(kind, norming, centering, d=int(arg))
        except ValueError:
            raise OutOfDomain(f"bad method argument in {text!r}") from None
        if arg:
            raise OutOfDomain(f"method {kind!r} takes no argument")
        return cls(kind, norming, centering)

    @property
    def label(self) -> str:
        if self.kind == "bootstrap":
            return f"bootstrap:{self.B}"
        if self.kind == "delete-d":
            return f"delete-d:{self.d}"
        return self.kind

    @property
    def stream_key(self) -> tuple[int, ...]:
        """Substream key suffix; independent of the order methods are listed in."""
        if self.kind == "bootstrap":
            return (1, self.B)
        if self.kind == "delete-d":
            return (2, self.d)
        return (0,)

    def evaluations(self, n1: int, n2: int) -> int:
        """Number of statistic evaluations beyond the point estimate."""
        if self.kind == "bootstrap":
            return self.B
        if self.kind in ("clt", "clt-literal"):
            return 0
        if self.kind == "jackknife-paired" or (self.kind == "jackknife" and n1 == n2):
            return n1
        if self.kind == "delete-d":
            return math.comb(n1, self.d)
        return n1 + n2


def estimate_sd(
    method: VarianceMethod,
    data,
    spec: EstimatorSpec,
    *,
    rng=None,
    seed: int | None = None,
    enumeration_limit: int = resampling.DEFAULT_ENUMERATION_LIMIT,
) -> float:
    """Standard deviation of ``spec``'s estimate on ``data`` by ``method``.

    Randomised methods need ``rng`` (one block of draws) or ``seed``
    (per-replicate substreams, bootstrap only).
    """
    statistic = spec.statistic()
    kind = method.kind
    if kind in ("clt", "clt-literal"):
        return clt_variance(resampling.as_data(data), spec, literal=kind == "clt-literal").sd
    if kind == "jackknife":
        return resampling.jackknife(statistic, data, method.norming, method.centering).sd
    if kind == "jackknife-unequal":
        return resampling.jackknife_unequal(statistic, data, method.norming, method.centering).sd
    if kind == "jackknife-paired":
        return resampling.jackknife_paired(statistic, data, method.norming).sd
    if kind == "delete-d":
        if rng is None and seed is not None:
            rng = substream(seed, *method.stream_key)
        return resampling.delete_d_jackknife(statistic, data, method.d, enumeration_limit, rng).sd
    if rng is not None:
        return resampling.bootstrap_variance(statistic, data, method.B, rng=rng).sd
    if seed is None:
        raise OutOfDomain("the bootstrap needs a seed or an rng")
    return resampling.bootstrap_variance(statistic, data, method.B, seed=seed).sd
