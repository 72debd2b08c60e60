"""
Transition kernels: leapfrog integration, Hamiltonian Monte Carlo and random-walk Metropolis.

Kernels take either a ModelInterface or a plain callable. For HMC the callable
returns (log density, gradient); for random-walk Metropolis it returns the log
density alone.
"""

import logging
import math
from typing import Optional

import numpy as np

from hierpool.errors import DomainError, EvaluationError
from hierpool.models.core import ModelInterface
from hierpool.sampler.models import PhaseState, TransitionStats

logger = logging.getLogger(__name__)


def gradient_oracle(model):
    """Callable returning (log density, gradient) for a model or an already suitable callable"""
    if isinstance(model, ModelInterface):
        return model.log_density_and_gradient
    return model


def density_oracle(model):
    """Callable returning the log density for a model or an already suitable callable"""
    if isinstance(model, ModelInterface):
        return lambda z: model.log_density_and_gradient(z)[0]
    return model


def evaluate(oracle, position):
    """Log density and gradient at position, (-inf, nan) when either is not finite"""
    try:
        with np.errstate(all='ignore'):
            log_density, grad = oracle(position)
    except (DomainError, EvaluationError, ArithmeticError):
        return -math.inf, np.full(np.shape(position), np.nan)
    log_density = float(log_density)
    grad = np.asarray(grad, dtype=float)
    if not (math.isfinite(log_density) and np.all(np.isfinite(grad))):
        return -math.inf, grad
    return log_density, grad


def phase_state(oracle, position, momentum, inv_metric=None):
    """PhaseState at (position, momentum) with the potential evaluated through the oracle"""
    position = np.asarray(position, dtype=float)
    log_density, grad = evaluate(oracle, position)
    return PhaseState(position=position, momentum=np.asarray(momentum, dtype=float), potential=-log_density,
                      potential_gradient=-grad, inv_metric=inv_metric)


def leapfrog(state: PhaseState, oracle, step_size: float, n_steps: int, inv_metric=None):
    """Integrate Hamiltonian dynamics for n_steps leapfrog steps

    Each step is a momentum half step, a position full step q += eps * p / m,
    and a second momentum half step. Integration stops at the first non-finite
    potential or gradient; the returned state then reports is_finite False.

    Args:
        state (PhaseState): starting point, potential and gradient included
        oracle (callable): position -> (log density, gradient)
        step_size (float): eps > 0
        n_steps (int): number of steps, 0 returns the starting state
        inv_metric (np.ndarray, optional): diagonal inverse metric 1 / m. Defaults to the state's.

    Returns:
        PhaseState: end of the trajectory
    """
    if not step_size > 0:
        raise DomainError(f"step size must be strictly positive, got {step_size}")
    inv_metric = state.inv_metric if inv_metric is None else np.asarray(inv_metric, dtype=float)
    position = np.array(state.position, dtype=float)
    momentum = np.array(state.momentum, dtype=float)
    potential, grad = state.potential, state.potential_gradient

    with np.errstate(all='ignore'):
        for _ in range(n_steps):
            momentum = momentum - 0.5 * step_size * grad
            position = position + step_size * inv_metric * momentum
            log_density, log_density_grad = evaluate(oracle, position)
            potential, grad = -log_density, -log_density_grad
            if not (math.isfinite(potential) and np.all(np.isfinite(grad))):
                break
            momentum = momentum - 0.5 * step_size * grad

    return PhaseState(position=position, momentum=momentum, potential=potential, potential_gradient=grad,
                      inv_metric=inv_metric)


def hmc_step(current, model, step_size: float, max_steps: int, inv_metric, rng,
             divergence_threshold: float = 1000.0, jitter: float = 0.0, n_steps: Optional[int] = None):
    """One Hamiltonian Monte Carlo transition with a jittered trajectory length

    Args:
        current (np.ndarray): current unconstrained position
        model (ModelInterface | callable): target, see gradient_oracle
        step_size (float): leapfrog step size
        max_steps (int): number of steps is drawn uniformly in 1..max_steps
        inv_metric (np.ndarray): diagonal inverse metric, None for unit masses
        rng (np.random.Generator): random stream of the chain
        divergence_threshold (float, optional): energy error flagged as divergent. Defaults to 1000.
        jitter (float, optional): step size drawn in step_size * (1 +/- jitter). Defaults to 0.
        n_steps (int, optional): force the number of leapfrog steps. Defaults to None.

    Raises:
        EvaluationError: the log density is not finite at current

    Returns:
        tuple: (next position, TransitionStats)
    """
    oracle = gradient_oracle(model)
    current = np.asarray(current, dtype=float)
    inv_metric = np.ones(current.shape) if inv_metric is None else np.asarray(inv_metric, dtype=float)

    momentum = rng.standard_normal(current.shape) / np.sqrt(inv_metric)
    start = phase_state(oracle, current, momentum, inv_metric)
    if not start.is_finite:
        raise EvaluationError("log density is not finite at the current position")

    if n_steps is None:
        n_steps = int(rng.integers(1, max_steps + 1))
    if jitter > 0:
        step_size = step_size * (1.0 + jitter * rng.uniform(-1.0, 1.0))
    end = leapfrog(start, oracle, step_size, n_steps, inv_metric)

    energy_error = end.energy - start.energy if end.is_finite else math.inf
    divergent = not math.isfinite(energy_error) or energy_error > divergence_threshold
    accept_prob = 0.0 if divergent else math.exp(min(0.0, -energy_error))
    accepted = not divergent and math.log(rng.uniform()) < -energy_error
    stats = TransitionStats(accepted=accepted, divergent=divergent, energy_error=energy_error,
                            accept_prob=accept_prob, n_steps=n_steps,
                            log_density=-(end.potential if accepted else start.potential))
    return (end.position if accepted else current), stats


def rw_metropolis_step(current, model, proposal_sd, rng, current_log_density: Optional[float] = None):
    """One random-walk Metropolis transition with a symmetric Gaussian proposal

    Args:
        current (np.ndarray): current unconstrained position
        model (ModelInterface | callable): target, see density_oracle
        proposal_sd (float | np.ndarray): proposal standard deviation, scalar or per coordinate
        rng (np.random.Generator): random stream of the chain
        current_log_density (float, optional): cached log density at current

    Raises:
        EvaluationError: the log density is not finite at current

    Returns:
        tuple: (next position, TransitionStats)
    """
    oracle = density_oracle(model)
    current = np.asarray(current, dtype=float)
    if current_log_density is None:
        current_log_density = _safe_log_density(oracle, current)
    if not math.isfinite(current_log_density):
        raise EvaluationError("log density is not finite at the current position")

    proposal = current + np.asarray(proposal_sd, dtype=float) * rng.standard_normal(current.shape)
    proposal_log_density = _safe_log_density(oracle, proposal)
    log_ratio = proposal_log_density - current_log_density
    accept_prob = math.exp(min(0.0, log_ratio)) if math.isfinite(log_ratio) else 0.0
    accepted = math.isfinite(log_ratio) and (log_ratio >= 0 or math.log(rng.uniform()) < log_ratio)
    stats = TransitionStats(accepted=accepted, divergent=False, energy_error=-log_ratio, accept_prob=accept_prob,
                            log_density=proposal_log_density if accepted else current_log_density)
    return (proposal if accepted else current), stats


def _safe_log_density(oracle, position):
    try:
        with np.errstate(all='ignore'):
            value = float(oracle(position))
    except (DomainError, EvaluationError, ArithmeticError):
        return -math.inf
    return value if math.isfinite(value) else -math.inf
