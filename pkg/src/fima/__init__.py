"""Fiducial matching (FIMA) inference for differentially private categorical data."""

from .chisq import ContingencyTable, chi_square_statistic, fima_chisq_test, marginal_counts
from .core import (MACHINE_DELTA, FimaConfig, FimaDraws, Method, draw_beta_shortcut,
                   fima_proportion, fima_sample, fima_sample_from_count, interval_solution)
from .inference import (ConfidenceInterval, Direction, Sided, TestResult, one_sample_test,
                        percentile_ci, percentile_quantile, two_sample_test)
from .mechanisms import (DpRelease, NoiseFamily, PrivacyParams, ReleaseKind, privatize_counts,
                         privatize_proportions, sample_noise, sensitivity_proportion)

__version__ = "0.1.0"
