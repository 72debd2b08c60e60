"""
Synthetic household data drawn from a known Model 2 truth.
"""

from dataclasses import dataclass
import logging
from typing import Optional, Sequence

import numpy as np

from hierpool.errors import ConfigurationError, ShapeError
from hierpool.models.core import HouseholdRecord, build_design
from hierpool.models.model2 import model2_beta

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SyntheticTruth:
    """Ground-truth Model 2 quantities used to simulate households

    Z carries its intercept column. When include_baseline is set, gamma, theta,
    L_Omega and u have a third coefficient row for the baseline outcome.
    """

    gamma: np.ndarray
    theta: np.ndarray
    L_Omega: np.ndarray
    u: np.ndarray
    sigma_s: np.ndarray
    Z: np.ndarray
    include_baseline: bool = False

    def __post_init__(self):
        for name in ('gamma', 'theta', 'L_Omega', 'u', 'sigma_s', 'Z'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if np.any(self.theta <= 0):
            raise ConfigurationError("theta must be strictly positive")
        if np.any(self.sigma_s <= 0):
            raise ConfigurationError("sigma_s must be strictly positive")
        expected = 3 if self.include_baseline else 2
        if self.gamma.shape[0] != expected:
            raise ShapeError(f"gamma needs {expected} rows for this design, got {self.gamma.shape[0]}")
        if self.sigma_s.shape != (self.Z.shape[0],):
            raise ShapeError(f"sigma_s needs one entry per site ({self.Z.shape[0]})")

    @property
    def beta(self):
        return model2_beta(self.gamma, self.Z, self.theta, self.L_Omega, self.u)

    @property
    def n_sites(self):
        return self.Z.shape[0]

    @classmethod
    def draw(cls, gamma, theta, rho, sigma_s, Z, seed, include_baseline=False):
        """Truth with u ~ N(0, 1) drawn from `seed` and a correlation rho between the first two coefficients"""
        gamma = np.asarray(gamma, dtype=float)
        size = gamma.shape[0]
        L_Omega = np.eye(size)
        L_Omega[1, 0] = rho
        L_Omega[1, 1] = np.sqrt(1.0 - rho ** 2)
        rng = np.random.default_rng(seed)
        u = rng.standard_normal((size, np.asarray(Z).shape[0]))
        return cls(gamma=gamma, theta=theta, L_Omega=L_Omega, u=u, sigma_s=sigma_s, Z=Z,
                   include_baseline=include_baseline)


def generate_synthetic_households(truth: SyntheticTruth, sizes: Sequence[int], seed: Optional[int] = 1):
    """Simulate households from a known Model 2 truth

    Args:
        truth (SyntheticTruth): coefficients, scales and site predictors
        sizes (Sequence[int]): households per site, one entry per site
        seed (int, optional): generator seed. Defaults to 1.

    Raises:
        ConfigurationError: non-positive sample size
        ShapeError: sizes does not match the number of sites

    Returns:
        HouseholdData: records and design matrices, deterministic given the seed
    """
    sizes = [int(n) for n in sizes]
    if len(sizes) != truth.n_sites:
        raise ShapeError(f"{len(sizes)} sample sizes given for {truth.n_sites} sites")
    if any(n <= 0 for n in sizes):
        raise ConfigurationError("sample sizes must be strictly positive")

    rng = np.random.default_rng(seed)
    beta = truth.beta
    records = []
    for s, n in enumerate(sizes):
        treatment = rng.integers(0, 2, size=n)
        columns = [np.ones(n), treatment.astype(float)]
        baseline = rng.standard_normal(n) if truth.include_baseline else None
        if baseline is not None:
            columns.append(baseline)
        y = np.column_stack(columns) @ beta[:, s] + truth.sigma_s[s] * rng.standard_normal(n)
        records.extend(HouseholdRecord(site_index=s + 1, y=float(y[i]), treatment=int(treatment[i]),
                                       baseline=None if baseline is None else float(baseline[i]))
                       for i in range(n))

    logger.debug("Simulated %d households over %d sites", len(records), truth.n_sites)
    mode = 'model2bis' if truth.include_baseline else 'model2'
    return build_design(records, truth.Z[:, 1:], mode=mode)
