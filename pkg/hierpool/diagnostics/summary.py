"""
Posterior summaries and plot-ready histograms.
"""

from dataclasses import dataclass
import logging
import math
from typing import Sequence

import numpy as np
import pandas as pd

from hierpool.diagnostics.convergence import as_chains, effective_sample_size, split_rhat
from hierpool.errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)
SUMMARY_COLUMNS = ['parameter', 'mean', 'sd', 'q2.5', 'q25', 'q50', 'q75', 'q97.5', 'rhat', 'ess']
HISTOGRAM_BINS = 60
HISTOGRAM_RANGE = (0.1, 99.9)


@dataclass(frozen=True)
class ParameterSummary:
    """Posterior summary of one parameter"""

    name: str
    mean: float
    sd: float
    quantiles: tuple
    rhat: float
    ess: float
    degenerate: bool = False

    def quantile(self, probability):
        """Summary quantile at one of the reported probabilities"""
        return self.quantiles[QUANTILES.index(probability)]

    @property
    def interval(self):
        """Central 95% credible interval"""
        return self.quantiles[0], self.quantiles[-1]

    def as_row(self):
        return [self.name, self.mean, self.sd, *self.quantiles, self.rhat, self.ess]


class PosteriorSummary:
    """Ordered per-parameter summaries, indexable by parameter name"""

    def __init__(self, rows: Sequence[ParameterSummary]):
        self.rows = tuple(rows)
        self._index = {row.name: row for row in self.rows}

    def __getitem__(self, name):
        return self._index[name]

    def __contains__(self, name):
        return name in self._index

    def __iter__(self):
        return iter(self.rows)

    def __len__(self):
        return len(self.rows)

    @property
    def names(self):
        return [row.name for row in self.rows]

    @property
    def max_rhat(self):
        values = [row.rhat for row in self.rows if not math.isnan(row.rhat)]
        return max(values) if values else math.nan

    def to_frame(self):
        return pd.DataFrame([row.as_row() for row in self.rows], columns=SUMMARY_COLUMNS)


def summarize_parameter(name, draws):
    """Summary of one chains x draws matrix"""
    draws = as_chains(draws)
    flat = draws.ravel()
    if flat.size == 0:
        raise DomainError(f"no draws to summarize for '{name}'")
    sd = float(np.std(flat, ddof=1)) if flat.size > 1 else 0.0
    quantiles = tuple(float(q) for q in np.quantile(flat, QUANTILES, method='linear'))

    rhat = ess = math.nan
    degenerate = False
    if draws.shape[1] >= 2:
        rhat, degenerate = split_rhat(draws)
    if flat.size >= 10:
        ess, ess_degenerate = effective_sample_size(draws)
        degenerate = degenerate or ess_degenerate
    return ParameterSummary(name=name, mean=float(np.mean(flat)), sd=sd, quantiles=quantiles, rhat=float(rhat),
                            ess=float(ess), degenerate=degenerate)


def summarize(draws, parameter_names=None):
    """Summarize every parameter of a fit

    Args:
        draws (ChainDraws | np.ndarray): a fit, or a chains x draws x parameters array
        parameter_names (list, optional): names of the last axis. Defaults to the fit's names.

    Raises:
        ShapeError: names do not match the parameter axis

    Returns:
        PosteriorSummary: one row per parameter, in parameter order
    """
    if parameter_names is None:
        parameter_names = draws.parameter_names
    values = getattr(draws, 'draws', draws)
    values = np.asarray(values, dtype=float)
    if values.ndim == 2:
        values = values[None, :, :]
    if values.ndim != 3 or values.shape[2] != len(parameter_names):
        raise ShapeError(f"draws of shape {values.shape} do not match {len(parameter_names)} parameter names")
    return PosteriorSummary([summarize_parameter(name, values[:, :, k]) for k, name in enumerate(parameter_names)])


def histogram(values, bins=HISTOGRAM_BINS, percentiles=HISTOGRAM_RANGE):
    """Histogram over the given percentile range of the draws

    Returns:
        tuple: (bin edges of length bins + 1, counts of length bins)
    """
    values = np.asarray(values, dtype=float).ravel()
    lower, upper = np.percentile(values, percentiles)
    if lower == upper:
        lower, upper = lower - 0.5, upper + 0.5
    counts, edges = np.histogram(values, bins=bins, range=(lower, upper))
    return edges, counts
