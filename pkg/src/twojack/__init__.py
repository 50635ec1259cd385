"""Jackknife and bootstrap variance estimation for two-sample statistics,
with common-mean estimators under ordered variances."""

__version__ = "0.1.0"

from twojack.core_stats import Sample, SummaryStats, linearization_decomposition, summarize
from twojack.datasets import NamedDataset, load_builtin, read_csv, write_csv
from twojack.estimators import (
    Branch,
    ChangPlus,
    CommonMeanEstimate,
    CommonMeanStatistic,
    ElfessiBalanced,
    ElfessiUnbalanced,
    EstimatorSpec,
    FixedWeight,
    GammaInputs,
    GammaWeight,
    GraybillDeal,
    KnownVariance,
    Kubokawa,
    TildeRule,
    TwoSampleData,
    estimate_common_mean,
    estimate_known_variance,
    gamma_chang_plus,
    gamma_elfessi_balanced,
    gamma_elfessi_unbalanced,
    gamma_graybill_deal,
    gamma_kubokawa,
)
from twojack.inference import (
    ConfidenceInterval,
    PopulationParams,
    VarianceMethod,
    ZStyle,
    asymptotic_variance_formula,
    clt_variance,
    confidence_interval,
    estimate_sd,
    normal_quantile,
)
from twojack.resampling import (
    BootstrapResult,
    Centering,
    JackknifeReport,
    Norming,
    bootstrap_variance,
    delete_d_jackknife,
    jackknife,
    jackknife_paired,
    jackknife_unequal,
)
from twojack.simulation import (
    CoverageResult,
    SimulationModel,
    coverage_experiment,
    draw_sample,
    misordering_probability,
)
