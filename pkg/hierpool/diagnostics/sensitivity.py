"""
Sensitivity of the pooling analysis to rescaled or equalized site inputs.

A scenario is a string of '&'-joined operations applied to the base sites:

    original             the inputs as given
    tau*C                every tau_hat multiplied by C
    sigma*C              every sigma_hat multiplied by C
    equalize=SITE        every tau_hat replaced by SITE's tau_hat
"""

from dataclasses import dataclass
import logging
import math
import re
from typing import Sequence

import pandas as pd

from hierpool.data.models import DEFAULT_SCENARIOS, SENSITIVITY_COLUMNS
from hierpool.diagnostics.pooling import pooling_report
from hierpool.errors import HierpoolError, UsageError
from hierpool.models.core import SiteSummary, check_sites
from hierpool.models.model1 import Model1, PriorConfig
from hierpool.sampler import SamplerConfig, run

logger = logging.getLogger(__name__)

SCALE_PATTERN = re.compile(r'^(tau|sigma)\*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)$')
EQUALIZE_PATTERN = re.compile(r'^equalize=(.+)$')


@dataclass(frozen=True)
class Operation:
    """One rescaling or equalization of the site inputs"""

    kind: str
    factor: float = 1.0
    site: str = None

    def apply(self, sites):
        if self.kind == 'tau':
            return [SiteSummary(s.site_name, s.tau_hat * self.factor, s.sigma_hat) for s in sites]
        if self.kind == 'sigma':
            return [SiteSummary(s.site_name, s.tau_hat, s.sigma_hat * self.factor) for s in sites]
        reference = {s.site_name: s for s in sites}.get(self.site)
        if reference is None:
            raise UsageError(f"equalize: unknown site '{self.site}'")
        return [SiteSummary(s.site_name, reference.tau_hat, s.sigma_hat) for s in sites]


@dataclass(frozen=True)
class Scenario:
    """A named sequence of operations"""

    label: str
    operations: tuple = ()

    def apply(self, sites: Sequence[SiteSummary]):
        sites = list(sites)
        for operation in self.operations:
            sites = operation.apply(sites)
        return sites


def parse_scenario(token: str):
    """Parse a scenario string

    Raises:
        UsageError: unknown or malformed token
    """
    label = token.strip()
    if label in ('', 'original'):
        return Scenario(label='original')
    operations = []
    for part in label.split('&'):
        scale = SCALE_PATTERN.match(part)
        equalize = EQUALIZE_PATTERN.match(part)
        if scale:
            factor = float(scale.group(2))
            if not factor > 0:
                raise UsageError(f"scenario '{label}': scale factor must be strictly positive")
            operations.append(Operation(kind=scale.group(1), factor=factor))
        elif equalize:
            operations.append(Operation(kind='equalize', site=equalize.group(1)))
        else:
            raise UsageError(f"unknown scenario token '{part}', expected tau*C, sigma*C, equalize=SITE or original")
    return Scenario(label=label, operations=tuple(operations))


def parse_scenarios(tokens):
    return [parse_scenario(token) for token in tokens]


@dataclass(frozen=True)
class SensitivityRow:
    """Pooling summary of one scenario, or the error its fit ended with"""

    scenario: str
    sigma_tilde: float = math.nan
    omega_bar: float = math.nan
    error: str = None

    @property
    def ok(self):
        return self.error is None


def fit_scenario(base: Sequence[SiteSummary], scenario: Scenario, config: SamplerConfig = None,
                 priors: PriorConfig = None):
    """Refit Model 1 on the transformed sites and report its pooling summary

    Fit failures are reported in the row instead of raised.
    """
    sites = scenario.apply(base)
    try:
        fit = run(Model1(sites, priors), config or SamplerConfig())
        report = pooling_report(fit, sites)
    except HierpoolError as exc:
        logger.error("Scenario '%s' failed: %s", scenario.label, exc, exc_info=exc)
        return SensitivityRow(scenario=scenario.label, error=str(exc))
    logger.info("Scenario '%s': sigma_tilde=%.4f omega_bar=%.4f", scenario.label, report.sigma_tilde,
                report.omega_bar)
    return SensitivityRow(scenario=scenario.label, sigma_tilde=report.sigma_tilde, omega_bar=report.omega_bar)


def sensitivity_harness(base: Sequence[SiteSummary], scenarios=DEFAULT_SCENARIOS, config: SamplerConfig = None,
                        priors: PriorConfig = None):
    """Refit Model 1 for every scenario

    Args:
        base (Sequence[SiteSummary]): untouched site inputs
        scenarios (Sequence[str | Scenario], optional): scenarios, in output order. Defaults to DEFAULT_SCENARIOS.
        config (SamplerConfig, optional): configuration of every fit. Defaults to SamplerConfig().
        priors (PriorConfig, optional): Model 1 priors. Defaults to PriorConfig().

    Raises:
        UsageError: malformed scenario or unknown site, before anything is fitted

    Returns:
        list: one SensitivityRow per scenario
    """
    check_sites(base)
    scenarios = [s if isinstance(s, Scenario) else parse_scenario(s) for s in scenarios]
    for scenario in scenarios:
        check_sites(scenario.apply(base))
    return [fit_scenario(base, scenario, config, priors) for scenario in scenarios]


def sensitivity_frame(rows):
    return pd.DataFrame([[r.scenario, r.sigma_tilde, r.omega_bar] for r in rows], columns=SENSITIVITY_COLUMNS)
