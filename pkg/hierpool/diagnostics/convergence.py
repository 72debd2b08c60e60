"""
Convergence diagnostics on chains x draws matrices: split-R-hat, effective sample size, Monte-Carlo error.
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from hierpool.errors import DomainError

logger = logging.getLogger(__name__)


class DiagnosticValue(NamedTuple):
    """A diagnostic and whether it was computed on constant draws"""

    value: float
    degenerate: bool = False

    def __float__(self):
        return float(self.value)


def as_chains(draws):
    """Coerce one parameter's draws to a chains x draws matrix (a flat sequence is a single chain)"""
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[None, :]
    if draws.ndim != 2:
        raise DomainError(f"expected chains x draws, got shape {draws.shape}")
    return draws


def split_chains(draws):
    """Split every chain in two halves, the middle draw of odd-length chains is dropped"""
    draws = as_chains(draws)
    half = draws.shape[1] // 2
    return np.vstack((draws[:, :half], draws[:, -half:]))


def split_rhat(draws):
    """Potential scale reduction computed on half-chains

    R-hat = sqrt((W + B / n) / W), where W is the mean within-half variance and
    B / n the variance of the half means, so that half-chains with identical
    means give exactly 1. Chains shorter than four draws are not split.

    Args:
        draws (array-like): chains x draws of one parameter

    Raises:
        DomainError: fewer than two draws per chain

    Returns:
        DiagnosticValue: R-hat, flagged degenerate (and 1) when every chain is constant
    """
    draws = as_chains(draws)
    if draws.shape[1] < 2:
        raise DomainError("split R-hat needs at least two draws per chain")
    groups = split_chains(draws) if draws.shape[1] >= 4 else draws

    within = np.mean(np.var(groups, axis=1, ddof=1))
    if within == 0:
        return DiagnosticValue(1.0, True)
    if groups.shape[0] < 2:
        return DiagnosticValue(1.0, False)
    between_over_n = np.var(np.mean(groups, axis=1), ddof=1)
    return DiagnosticValue(math.sqrt((within + between_over_n) / within), False)


def autocovariance(x):
    """Biased autocovariance of a sequence at every lag, through the FFT"""
    x = np.asarray(x, dtype=float)
    n = x.size
    size = 2 ** int(math.ceil(math.log2(2 * n)))
    centered = x - x.mean()
    spectrum = np.fft.rfft(centered, n=size)
    return np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n] / n


def effective_sample_size(draws):
    """Effective sample size with Geyer's initial positive and monotone sequences on split chains

    Args:
        draws (array-like): chains x draws (or a flat sequence) of one parameter

    Raises:
        DomainError: fewer than 10 draws in total

    Returns:
        DiagnosticValue: ESS clamped to 1.5 times the number of draws; constant draws give the
        number of draws, flagged degenerate
    """
    draws = as_chains(draws)
    total = draws.size
    if total < 10:
        raise DomainError("effective sample size needs at least 10 draws")
    if np.ptp(draws) == 0:
        return DiagnosticValue(float(total), True)
    if draws.shape[1] >= 4:
        draws = split_chains(draws)

    n_chain, n_draw = draws.shape
    acov = np.asarray([autocovariance(chain) for chain in draws])
    mean_var = np.mean(acov[:, 0]) * n_draw / (n_draw - 1.0)
    var_plus = mean_var * (n_draw - 1.0) / n_draw
    if n_chain > 1:
        var_plus += np.var(draws.mean(axis=1), ddof=1)

    rho = np.zeros(n_draw)
    rho[0] = rho_even = 1.0
    rho[1] = rho_odd = 1.0 - (mean_var - np.mean(acov[:, 1])) / var_plus
    t = 1
    while t < n_draw - 3 and rho_even + rho_odd > 0.0:
        rho_even = 1.0 - (mean_var - np.mean(acov[:, t + 1])) / var_plus
        rho_odd = 1.0 - (mean_var - np.mean(acov[:, t + 2])) / var_plus
        if rho_even + rho_odd >= 0:
            rho[t + 1] = rho_even
            rho[t + 2] = rho_odd
        t += 2
    max_t = t - 2
    if rho_even > 0:
        rho[max_t + 1] = rho_even

    # paired sums must not increase
    t = 1
    while t <= max_t - 2:
        if rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]:
            rho[t + 1] = rho[t + 2] = (rho[t - 1] + rho[t]) / 2.0
        t += 2

    tau_hat = -1.0 + 2.0 * np.sum(rho[:max_t + 1]) + np.sum(rho[max_t + 1:max_t + 2])
    ess = total / tau_hat if tau_hat > 0 else math.inf
    return DiagnosticValue(float(min(ess, 1.5 * total)), False)


def mcse_mean(draws):
    """Monte-Carlo standard error of the posterior mean, sd / sqrt(ESS)"""
    draws = as_chains(draws)
    ess = effective_sample_size(draws)
    return float(np.std(draws, ddof=1) / math.sqrt(ess.value))
