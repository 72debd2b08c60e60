"""
Multi-chain runner.

Chain c draws every random number from np.random.default_rng([seed, c]), so a
run is reproducible regardless of how the thread pool schedules the chains.
"""

from concurrent.futures import ThreadPoolExecutor
import functools
import logging
import math

import numpy as np

from hierpool.errors import HierpoolError, SamplingError
from hierpool.models.core import ModelInterface
from hierpool.sampler.adaptation import adapt_warmup, find_reasonable_step_size, initial_position
from hierpool.sampler.hmc import hmc_step, rw_metropolis_step
from hierpool.sampler.models import MIN_ADAPT_WARMUP, ChainDraws, ChainResult, SamplerConfig, WarmupResult

logger = logging.getLogger(__name__)


def chain_rng(seed, chain):
    """Private generator of one chain"""
    return np.random.default_rng([seed, chain])


def _transition(model, position, config, step_size, inv_metric, rng):
    if config.method == 'rwm':
        return rw_metropolis_step(position, model, step_size * np.sqrt(inv_metric), rng)
    return hmc_step(position, model, step_size, config.max_steps, inv_metric, rng,
                    divergence_threshold=config.divergence_threshold, jitter=config.jitter)


def _burn_in(model, config, rng, chain):
    """Warmup too short to adapt: plain transitions at the configured or heuristic step size"""
    position = initial_position(model, rng)
    inv_metric = np.ones(model.dimension)
    if config.method == 'rwm':
        step_size = config.proposal_sd or 2.38 / math.sqrt(model.dimension)
    else:
        step_size = config.step_size or find_reasonable_step_size(model, position, inv_metric, rng)
    divergences = 0
    for _ in range(config.warmup):
        position, stats = _transition(model, position, config, step_size, inv_metric, rng)
        divergences += stats.divergent
    logger.debug("Chain %d: %d burn-in iterations without adaptation", chain, config.warmup)
    return WarmupResult(step_size=step_size, inv_metric=inv_metric, position=position, divergences=divergences)


def run_chain(model: ModelInterface, config: SamplerConfig, chain: int):
    """Warmup then config.draws_per_chain retained transitions of one chain

    Raises:
        SamplingError: any failure, with the chain index attached
    """
    rng = chain_rng(config.seed, chain)
    try:
        if config.warmup >= MIN_ADAPT_WARMUP:
            warm = adapt_warmup(model, config, rng, chain=chain)
        else:
            warm = _burn_in(model, config, rng, chain)

        n_draws = config.draws_per_chain
        draws = np.empty((n_draws, len(model.parameter_names)))
        accepted = np.zeros(n_draws, dtype=bool)
        divergent = np.zeros(n_draws, dtype=bool)
        energy_error = np.zeros(n_draws)

        position = warm.position
        current_draw = model.constrained_vector(position)
        for i in range(n_draws):
            position, stats = _transition(model, position, config, warm.step_size, warm.inv_metric, rng)
            if stats.accepted:
                current_draw = model.constrained_vector(position)
            draws[i] = current_draw
            accepted[i], divergent[i], energy_error[i] = stats.accepted, stats.divergent, stats.energy_error
    except HierpoolError as exc:
        raise SamplingError(str(exc), chain=chain) from exc
    except (ArithmeticError, ValueError) as exc:
        raise SamplingError(f"{type(exc).__name__}: {exc}", chain=chain) from exc

    logger.info("Chain %d: step size %.4g, acceptance %.3f, %d divergent transitions", chain, warm.step_size,
                accepted.mean() if n_draws else math.nan, divergent.sum())
    return ChainResult(draws=draws, accepted=accepted, divergent=divergent, energy_error=energy_error,
                       step_size=warm.step_size, inv_metric=warm.inv_metric, warmup_divergences=warm.divergences)


def run(model: ModelInterface, config: SamplerConfig = None):
    """Run config.chains independent chains on a thread pool

    Args:
        model (ModelInterface): target, with its data bound
        config (SamplerConfig, optional): run configuration. Defaults to SamplerConfig().

    Raises:
        SamplingError: a chain failed, the exception carries its index

    Returns:
        ChainDraws: post-warmup constrained draws, chains stacked in index order
    """
    config = config or SamplerConfig()
    logger.info("Sampling %s with %s: %d chains, %d warmup, %d iterations, seed %d", type(model).__name__,
                config.method, config.chains, config.warmup, config.iterations, config.seed)

    with ThreadPoolExecutor(max_workers=config.max_workers or config.chains) as executor:
        results = list(executor.map(functools.partial(run_chain, model, config), range(config.chains)))

    fit = ChainDraws.from_chains(results, model.parameter_names, method=config.method)
    logger.info("Sampling done: %d draws per chain, %d divergent transitions", fit.n_draws, fit.total_divergences)
    return fit
