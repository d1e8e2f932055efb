"""Curie-Weiss self-organized-criticality toolkit.

Samples the Gibbs measure that tilts i.i.d. draws from a symmetric base
measure by exp(S^2 / (2T)) on {T > 0}, where S is the sum and T the sum of
squares, and verifies the quartic (non-Gaussian) fluctuation limits of the
self-normalized statistic S / (n^{1/4} sqrt(T)) and the scaled sum
S / n^{3/4} against an independent Gaussian-smoothing integral oracle.
"""

from .measures import (
    BaseMeasure,
    gaussian,
    parse_measure,
    rademacher,
    symmetric_discrete,
    two_point,
    uniform,
)
from .model import Configuration
from .sampler import (
    ChainRun,
    SamplerConfig,
    diagnostics,
    enumerate_exact,
    importance_sample,
    metropolis_sweep,
    run_chains,
)
from .hs_oracle import (
    HsProfile,
    g,
    g_sum,
    h,
    lemma1_check,
    lemma1_constant,
    partition_ratio,
    smoothed_density_profile,
    smoothed_expectation,
)
from .limit_law import (
    QuarticLaw,
    make_theorem1_law,
    make_theorem2_law,
)
from .stats import (
    EmpiricalDistribution,
    batch_means,
    ks_pvalue,
    ks_statistic,
    tv_distance,
)

__version__ = "0.1.0"

__all__ = [
    "BaseMeasure",
    "ChainRun",
    "Configuration",
    "EmpiricalDistribution",
    "HsProfile",
    "QuarticLaw",
    "SamplerConfig",
    "batch_means",
    "diagnostics",
    "enumerate_exact",
    "g",
    "g_sum",
    "gaussian",
    "h",
    "importance_sample",
    "ks_pvalue",
    "ks_statistic",
    "lemma1_check",
    "lemma1_constant",
    "make_theorem1_law",
    "make_theorem2_law",
    "metropolis_sweep",
    "parse_measure",
    "partition_ratio",
    "rademacher",
    "run_chains",
    "smoothed_density_profile",
    "smoothed_expectation",
    "symmetric_discrete",
    "tv_distance",
    "two_point",
    "uniform",
]
