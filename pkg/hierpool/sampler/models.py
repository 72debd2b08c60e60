"""
Sampler configuration, phase-space state and the records returned by a run.
"""

from dataclasses import asdict, dataclass, field
import logging
import math
from typing import Optional

import numpy as np

from hierpool.errors import ConfigurationError

logger = logging.getLogger(__name__)

METHODS = ('hmc', 'rwm')

# Random-walk proposals are tuned toward the optimal acceptance for Gaussian-like targets
RW_TARGET_ACCEPT = 0.234

# Warmups shorter than this run a plain burn-in without adaptation
MIN_ADAPT_WARMUP = 100


@dataclass(frozen=True)
class SamplerConfig:
    """Run configuration shared by every chain

    Attributes:
        chains (int): number of independent chains
        warmup (int): warmup iterations per chain, discarded
        iterations (int): total iterations per chain, warmup included
        seed (int): master seed, chain c uses the stream (seed, c)
        target_accept (float): HMC acceptance target of the step size adaptation
        max_steps (int): leapfrog steps are drawn uniformly in 1..max_steps
        divergence_threshold (float): energy error above which a transition is divergent
        adapt_metric (bool): learn the diagonal metric during warmup
        jitter (float): step sizes are drawn uniformly in eps * (1 +/- jitter)
        method (str): 'hmc' or 'rwm'
        step_size (float, optional): initial step size, heuristic search when None
        proposal_sd (float, optional): initial random-walk scale, 2.38 / sqrt(d) when None
        max_workers (int, optional): thread pool size, one thread per chain when None
    """

    chains: int = 4
    warmup: int = 1000
    iterations: int = 2000
    seed: int = 1
    target_accept: float = 0.99
    max_steps: int = 32
    divergence_threshold: float = 1000.0
    adapt_metric: bool = True
    jitter: float = 0.0
    method: str = 'hmc'
    step_size: Optional[float] = None
    proposal_sd: Optional[float] = None
    max_workers: Optional[int] = None

    def __post_init__(self):
        if self.chains < 1:
            raise ConfigurationError(f"chains must be >= 1, got {self.chains}")
        if self.warmup < 0 or self.warmup >= self.iterations:
            raise ConfigurationError(f"warmup ({self.warmup}) must be in [0, iterations={self.iterations})")
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigurationError(f"target_accept must be in (0, 1), got {self.target_accept}")
        if self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1, got {self.max_steps}")
        if not self.divergence_threshold > 0:
            raise ConfigurationError("divergence_threshold must be strictly positive")
        if not 0.0 <= self.jitter < 1.0:
            raise ConfigurationError(f"jitter must be in [0, 1), got {self.jitter}")
        if self.method not in METHODS:
            raise ConfigurationError(f"Unknown method '{self.method}', expected one of {METHODS}")
        for name in ('step_size', 'proposal_sd'):
            value = getattr(self, name)
            if value is not None and not (math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be strictly positive, got {value}")
        if self.max_workers is not None and self.max_workers < 1:
            raise ConfigurationError(f"max_workers must be >= 1, got {self.max_workers}")

    @property
    def draws_per_chain(self):
        return self.iterations - self.warmup

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PhaseState:
    """A point of phase space with the potential U = -log density and its gradient

    inv_metric holds 1 / m_d per coordinate, the kinetic energy is sum p_d^2 / (2 m_d).
    """

    position: np.ndarray
    momentum: np.ndarray
    potential: float
    potential_gradient: np.ndarray
    inv_metric: np.ndarray = None

    def __post_init__(self):
        if self.inv_metric is None:
            object.__setattr__(self, 'inv_metric', np.ones(np.shape(self.position)))
        if np.shape(self.momentum) != np.shape(self.position):
            raise ConfigurationError("momentum and position must have the same dimension")

    @property
    def kinetic(self):
        return 0.5 * float(np.sum(self.momentum ** 2 * self.inv_metric))

    @property
    def energy(self):
        return self.potential + self.kinetic

    @property
    def is_finite(self):
        return math.isfinite(self.energy) and bool(np.all(np.isfinite(self.potential_gradient)))


@dataclass(frozen=True)
class TransitionStats:
    """What one transition did"""

    accepted: bool
    divergent: bool
    energy_error: float
    accept_prob: float
    n_steps: int = 0
    log_density: float = math.nan


@dataclass(frozen=True, eq=False)
class WarmupResult:
    """Adapted step size and inverse metric, plus the position warmup ended at"""

    step_size: float
    inv_metric: np.ndarray
    position: np.ndarray
    divergences: int = 0


@dataclass(frozen=True, eq=False)
class ChainResult:
    """Post-warmup output of a single chain"""

    draws: np.ndarray
    accepted: np.ndarray
    divergent: np.ndarray
    energy_error: np.ndarray
    step_size: float
    inv_metric: np.ndarray
    warmup_divergences: int = 0


@dataclass(frozen=True, eq=False)
class ChainDraws:
    """Constrained post-warmup draws of every chain, with per-iteration sampler statistics

    Attributes:
        draws (np.ndarray): chains x draws x parameters
        parameter_names (list): one name per entry of the last axis
        accepted, divergent (np.ndarray): chains x draws flags
        energy_error (np.ndarray): chains x draws energy errors
        step_size (np.ndarray): final step size of each chain
        inv_metric (np.ndarray): chains x dimension final diagonal inverse metric
        warmup_divergences (np.ndarray): divergent transitions met during warmup, per chain
        method (str): 'hmc' or 'rwm'
    """

    draws: np.ndarray
    parameter_names: list
    accepted: np.ndarray
    divergent: np.ndarray
    energy_error: np.ndarray
    step_size: np.ndarray
    inv_metric: np.ndarray
    warmup_divergences: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    method: str = 'hmc'

    @classmethod
    def from_chains(cls, results, parameter_names, method='hmc'):
        """Stack chain results, kept in chain-index order"""
        return cls(draws=np.stack([r.draws for r in results]),
                   parameter_names=list(parameter_names),
                   accepted=np.stack([r.accepted for r in results]),
                   divergent=np.stack([r.divergent for r in results]),
                   energy_error=np.stack([r.energy_error for r in results]),
                   step_size=np.array([r.step_size for r in results]),
                   inv_metric=np.stack([r.inv_metric for r in results]),
                   warmup_divergences=np.array([r.warmup_divergences for r in results], dtype=int),
                   method=method)

    @property
    def n_chains(self):
        return self.draws.shape[0]

    @property
    def n_draws(self):
        return self.draws.shape[1]

    def parameter(self, name):
        """chains x draws matrix of one parameter

        Raises:
            KeyError: unknown parameter name
        """
        try:
            index = self.parameter_names.index(name)
        except ValueError as exc:
            raise KeyError(name) from exc
        return self.draws[:, :, index]

    def divergences_per_chain(self):
        return self.divergent.sum(axis=1)

    @property
    def total_divergences(self):
        return int(self.divergent.sum())

    @property
    def acceptance_rate(self):
        return float(self.accepted.mean())
