# pylint: disable=missing-module-docstring
from .models import SamplerConfig, PhaseState, TransitionStats, WarmupResult, ChainResult, ChainDraws, METHODS
from .hmc import leapfrog, hmc_step, rw_metropolis_step, phase_state
from .adaptation import (DualAveraging, RunningVariance, warmup_windows, initial_position,
                         find_reasonable_step_size, adapt_warmup)
from .core import run, run_chain, chain_rng
