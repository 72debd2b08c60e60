"""
Data records, design matrices and the contract every model exposes to the sampler.
"""

import abc
from dataclasses import dataclass
import logging
import math
from typing import Optional, Sequence

import numpy as np

from hierpool.errors import ConfigurationError, DataError, ShapeError, ValidationError

logger = logging.getLogger(__name__)

MODES = ('model2', 'model2bis')


@dataclass(frozen=True)
class SiteSummary:
    """One site's estimated effect and its standard error"""

    site_name: str
    tau_hat: float
    sigma_hat: float

    def __post_init__(self):
        if not (math.isfinite(self.tau_hat) and math.isfinite(self.sigma_hat)):
            raise ValidationError(f"site '{self.site_name}': estimates must be finite")
        if self.sigma_hat <= 0:
            raise ValidationError(f"site '{self.site_name}': sigma_hat must be strictly positive",
                                  column='sigma_hat')


def dersimonian_laird(effects, variances):
    """Cochran Q and the DerSimonian-Laird between-site variance, truncated at zero

    Args:
        effects (np.ndarray): site estimates
        variances (np.ndarray): their sampling variances

    Returns:
        tuple[float, float]: (Q, tau^2), tau^2 is 0 for a single site
    """
    effects = np.asarray(effects, dtype=float)
    weights = 1.0 / np.asarray(variances, dtype=float)
    pooled = np.sum(weights * effects) / np.sum(weights)
    q = float(np.sum(weights * (effects - pooled) ** 2))
    c = float(np.sum(weights) - np.sum(weights ** 2) / np.sum(weights))
    k = effects.size
    return q, (max(0.0, (q - (k - 1)) / c) if k > 1 and c > 0 else 0.0)


def check_sites(sites: Sequence[SiteSummary]):
    """Validate a site dataset: at least one site, unique names

    Raises:
        ValidationError: empty dataset or duplicated site name
    """
    if not sites:
        raise ValidationError("at least one site is required")
    seen = set()
    for site in sites:
        if site.site_name in seen:
            raise ValidationError(f"duplicate site '{site.site_name}'", column='site')
        seen.add(site.site_name)


@dataclass(frozen=True)
class HouseholdRecord:
    """One household: site (1-based), outcome, treatment indicator and optional baseline outcome"""

    site_index: int
    y: float
    treatment: int
    baseline: Optional[float] = None

    def __post_init__(self):
        if not math.isfinite(self.y):
            raise DataError(f"household outcome must be finite, got {self.y}")
        if self.treatment not in (0, 1):
            raise DataError(f"treatment must be 0 or 1, got {self.treatment}")


@dataclass(frozen=True, eq=False)
class DesignMatrices:
    """Individual-level predictors X (N x I), site-level predictors Z (S x J), site of each row (1-based)"""

    X: np.ndarray
    Z: np.ndarray
    site: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Z = np.atleast_2d(np.asarray(self.Z, dtype=float))
        site = np.asarray(self.site, dtype=int).ravel()
        object.__setattr__(self, 'X', X)
        object.__setattr__(self, 'Z', Z)
        object.__setattr__(self, 'site', site)
        if X.shape[0] != site.shape[0]:
            raise ShapeError(f"X has {X.shape[0]} rows but {site.shape[0]} site indices were given")
        if not np.all(X[:, 0] == 1.0):
            raise ShapeError("first column of X must be the intercept (all ones)")
        if not np.all(Z[:, 0] == 1.0):
            raise ShapeError("first column of Z must be the intercept (all ones)")
        if site.size and (site.min() < 1 or site.max() > Z.shape[0]):
            raise DataError(f"site index out of range [1, {Z.shape[0]}]")

    @property
    def n_households(self):
        return self.X.shape[0]

    @property
    def n_predictors(self):
        return self.X.shape[1]

    @property
    def n_sites(self):
        return self.Z.shape[0]

    @property
    def n_site_predictors(self):
        return self.Z.shape[1]


@dataclass(frozen=True, eq=False)
class HouseholdData:
    """Household records bundled with the design matrices assembled from them"""

    records: tuple
    design: DesignMatrices
    mode: str = 'model2'

    @property
    def y(self):
        return np.array([r.y for r in self.records], dtype=float)


def build_design(records: Sequence[HouseholdRecord], site_predictors, mode='model2'):
    """Assemble X = (1, T[, baseline]) and Z = (1, site predictors)

    Args:
        records (Sequence[HouseholdRecord]): households
        site_predictors (array-like): S x (J-1) matrix of site-level predictors, intercept excluded
        mode (str, optional): 'model2' or 'model2bis' (adds the baseline outcome). Defaults to 'model2'.

    Raises:
        ConfigurationError: unknown mode
        DataError: baseline missing for some households under model2bis

    Returns:
        HouseholdData: records and design matrices
    """
    if mode not in MODES:
        raise ConfigurationError(f"Unknown mode '{mode}', expected one of {MODES}")
    if not records:
        raise DataError("at least one household is required")

    site_predictors = np.asarray(site_predictors, dtype=float)
    if site_predictors.ndim == 1:
        site_predictors = site_predictors.reshape(-1, 1) if site_predictors.size else np.zeros((0, 0))
    n_sites = site_predictors.shape[0]
    Z = np.column_stack([np.ones(n_sites), site_predictors]) if n_sites else np.ones((0, 1))

    columns = [np.ones(len(records)), np.array([r.treatment for r in records], dtype=float)]
    if mode == 'model2bis':
        missing = [i for i, r in enumerate(records) if r.baseline is None]
        if missing:
            raise DataError(f"baseline outcome missing for households {missing[:10]}")
        columns.append(np.array([r.baseline for r in records], dtype=float))

    design = DesignMatrices(X=np.column_stack(columns), Z=Z,
                            site=np.array([r.site_index for r in records], dtype=int))
    return HouseholdData(records=tuple(records), design=design, mode=mode)


class ModelInterface(abc.ABC):
    """What a model exposes to the sampler

    Models work on an unconstrained vector z of length `dimension`. The sampler
    only needs the log-density and its gradient there; diagnostics work on the
    flat constrained vector named by `parameter_names`.
    """

    @property
    @abc.abstractmethod
    def dimension(self) -> int:
        """Length of the unconstrained vector"""

    @property
    @abc.abstractmethod
    def parameter_names(self) -> list:
        """Names of the entries of constrained_vector, derived quantities included"""

    @abc.abstractmethod
    def log_density(self, z):
        """Log posterior density (up to a constant) at z, Jacobian included

        Written with dual-aware operations: z may be an object array of DualPoints.
        """

    @abc.abstractmethod
    def log_density_and_gradient(self, z):
        """Log posterior density and its analytic gradient at z

        Returns:
            tuple: (float, np.ndarray)
        """

    @abc.abstractmethod
    def constrain(self, z):
        """Parameter record for an unconstrained vector"""

    @abc.abstractmethod
    def unconstrain(self, params) -> np.ndarray:
        """Unconstrained vector for a parameter record"""

    @abc.abstractmethod
    def constrained_vector(self, z) -> np.ndarray:
        """Flat constrained values aligned with parameter_names"""

    def check_dimension(self, z):
        """Coerce z to a float vector of the right length

        Raises:
            ShapeError: wrong length
        """
        z = np.asarray(z)
        if z.ndim != 1 or z.shape[0] != self.dimension:
            raise ShapeError(f"{type(self).__name__} expects an unconstrained vector of length "
                             f"{self.dimension}, got shape {z.shape}")
        return z
