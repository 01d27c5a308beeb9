"""Circularly symmetric goodness-of-fit tests for continuous distributions.

The package computes EDF-type and likelihood-ratio statistics on
probability-integral-transformed samples, their looped and pooled
(circularized) versions, exact finite-sample covariance structure,
large-sample null laws, and Monte Carlo calibration and power studies.
"""

__version__ = "0.1.0"

from ._errors import GofError
from .asymptotics import (EigenSpectrum, KernelMatrix, WeightedChiSqLaw, asymptotic_null,
                          circulant_eigenvalues, kernel_exact, kernel_limit_R, kernel_limit_W,
                          rn2_eigen_roots)
from .circularize import PoolingMode, circular_statistic, pool, pooled_batch, scan
from .montecarlo import (PerturbationParams, PowerConfig, PowerTable, critical_value,
                         p_value, perturbed_cdf, perturbed_inverse_cdf, power_study, simulate,
                         simulate_null)
from .order_stats import (NullDistribution, SortedUniforms, Spacings, parse_null,
                          probability_integral_transform, shifted_uniforms, spacings)
from .seeding import RunSeed
from .statistics import (StatisticKind, ad_statistic, cvm_statistic, evaluate, ks_statistic,
                         r2_statistic, w2_statistic, zhang_lr_statistic)
from .weights import (CovarianceMatrix, cov_squared_deviations, cov_Y_matrix, focal_direction,
                      log_cov_matrix, log_moments, optimal_weights)

__all__ = [name for name in dir() if not name.startswith("_")]
