# pylint: disable=missing-module-docstring
from .core import (SiteSummary, HouseholdRecord, DesignMatrices, HouseholdData, ModelInterface, build_design,
                   check_sites, dersimonian_laird)
from .model1 import Model1, Model1Parameters, PriorConfig, model1_log_density, model1_constrain
from .model2 import Model2, Model2Parameters, Model2Priors, model2_beta, model2_log_density, naive_log_likelihood
from .synthetic import SyntheticTruth, generate_synthetic_households
