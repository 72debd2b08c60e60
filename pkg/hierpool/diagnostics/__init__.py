# pylint: disable=missing-module-docstring
from .convergence import DiagnosticValue, split_chains, split_rhat, autocovariance, effective_sample_size, mcse_mean
from .summary import ParameterSummary, PosteriorSummary, summarize, summarize_parameter, histogram, QUANTILES
from .pooling import (PoolingReport, RandomEffectsBaseline, pooling_factor, pooling_report, random_effects_baseline,
                      shrinkage_table)
from .sensitivity import (Scenario, SensitivityRow, parse_scenario, parse_scenarios, fit_scenario,
                          sensitivity_harness, sensitivity_frame)
