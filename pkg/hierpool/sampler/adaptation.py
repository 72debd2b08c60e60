"""
Warmup adaptation: dual averaging of the step size and a windowed diagonal metric.

Windows follow the usual layout: a fast initial buffer, a run of slow windows
that double in length and feed the metric estimate, and a terminal buffer in
which only the step size keeps adapting.
"""

from dataclasses import dataclass
import logging
import math

import numpy as np

from hierpool.errors import AdaptationError, ConfigurationError, EvaluationError
from hierpool.sampler.hmc import evaluate, gradient_oracle, hmc_step, leapfrog, phase_state, rw_metropolis_step
from hierpool.sampler.models import MIN_ADAPT_WARMUP, RW_TARGET_ACCEPT, SamplerConfig, WarmupResult

logger = logging.getLogger(__name__)

INIT_BUFFER = 75
TERM_BUFFER = 50
BASE_WINDOW = 25
LOG_MIN_STEP = math.log(1e-8)
LOG_MAX_STEP = math.log(1e3)


@dataclass
class DualAveraging:
    """Nesterov dual averaging on log step size, restarted whenever the metric changes"""

    mu: float
    target: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    log_step: float = 0.0
    log_step_bar: float = 0.0
    h_bar: float = 0.0
    t: int = 0

    @classmethod
    def start(cls, step_size, target):
        return cls(mu=math.log(10.0 * step_size), target=target, log_step=math.log(step_size))

    def update(self, accept_prob):
        """Feed one acceptance statistic, returns the next step size"""
        self.t += 1
        eta = 1.0 / (self.t + self.t0)
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_prob)
        log_step = self.mu - math.sqrt(self.t) / self.gamma * self.h_bar
        self.log_step = min(max(log_step, LOG_MIN_STEP), LOG_MAX_STEP)
        weight = self.t ** -self.kappa
        self.log_step_bar = weight * self.log_step + (1.0 - weight) * self.log_step_bar
        return math.exp(self.log_step)

    @property
    def step_size(self):
        return math.exp(self.log_step)

    @property
    def final_step_size(self):
        """Averaged iterate, used once warmup is over"""
        return math.exp(self.log_step_bar) if self.t else self.step_size


class RunningVariance:
    """Welford accumulator of per-coordinate variances"""

    def __init__(self, dimension):
        self.n = 0
        self.mean = np.zeros(dimension)
        self.m2 = np.zeros(dimension)

    def update(self, x):
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self.m2 = self.m2 + delta * (x - self.mean)

    def variance(self):
        if self.n < 2:
            return np.ones_like(self.mean)
        return self.m2 / (self.n - 1)

    def regularized_variance(self):
        """Variance shrunk toward 1e-3 with a weight of five pseudo-draws"""
        return (self.n / (self.n + 5.0)) * self.variance() + 1e-3 * (5.0 / (self.n + 5.0))


def warmup_windows(warmup):
    """Metric adaptation windows [start, end) for a warmup of the given length

    Short warmups use 15% / 75% / 10% for the initial buffer, a single slow
    window and the terminal buffer.
    """
    if warmup < 20:
        return []
    init_buffer, term_buffer, base_window = INIT_BUFFER, TERM_BUFFER, BASE_WINDOW
    if init_buffer + base_window + term_buffer > warmup:
        init_buffer = int(0.15 * warmup)
        term_buffer = int(0.10 * warmup)
        base_window = warmup - init_buffer - term_buffer

    end_slow = warmup - term_buffer
    windows = []
    start, width = init_buffer, base_window
    while start < end_slow:
        if start + 3 * width > end_slow:
            width = end_slow - start
        windows.append((start, start + width))
        start += width
        width *= 2
    return windows


def initial_position(model, rng, attempts=100):
    """Uniform draw in [-2, 2] per unconstrained coordinate, redrawn until the log density is finite

    Raises:
        EvaluationError: no finite starting point within the given number of attempts
    """
    oracle = gradient_oracle(model)
    for _ in range(attempts):
        position = rng.uniform(-2.0, 2.0, size=model.dimension)
        log_density, _ = evaluate(oracle, position)
        if math.isfinite(log_density):
            return position
    raise EvaluationError(f"no finite starting point found in {attempts} attempts")


def find_reasonable_step_size(model, position, inv_metric, rng, initial=1.0, min_step=1e-8, max_step=1e3):
    """Double or halve the step size until a single leapfrog step crosses 50% acceptance

    Returns:
        float: step size, clipped to [min_step, max_step]
    """
    oracle = gradient_oracle(model)
    momentum = rng.standard_normal(np.shape(position)) / np.sqrt(inv_metric)
    start = phase_state(oracle, position, momentum, inv_metric)
    step_size = float(initial)

    def log_accept(step):
        end = leapfrog(start, oracle, step, 1)
        return start.energy - end.energy if end.is_finite else -math.inf

    direction = 1.0 if log_accept(step_size) > math.log(0.5) else -1.0
    for _ in range(100):
        candidate = step_size * 2.0 ** direction
        if not min_step <= candidate <= max_step:
            break
        crossed = log_accept(candidate) <= math.log(0.5) if direction > 0 else log_accept(candidate) > math.log(0.5)
        step_size = candidate
        if crossed:
            break
    return float(np.clip(step_size, min_step, max_step))


def adapt_warmup(model, config: SamplerConfig, rng, position=None, chain=0):
    """Tune the step size and diagonal inverse metric over config.warmup iterations

    Args:
        model (ModelInterface): target
        config (SamplerConfig): run configuration, warmup must be at least 100
        rng (np.random.Generator): random stream of the chain
        position (np.ndarray, optional): starting point. Defaults to a uniform draw in [-2, 2].
        chain (int, optional): chain index, only used in log lines

    Raises:
        ConfigurationError: warmup shorter than 100 iterations
        AdaptationError: more than half of the warmup transitions met a non-finite density

    Returns:
        WarmupResult: step size, inverse metric, end position and divergence count
    """
    if config.warmup < MIN_ADAPT_WARMUP:
        raise ConfigurationError(f"adaptation needs warmup >= {MIN_ADAPT_WARMUP}, got {config.warmup}")
    position = initial_position(model, rng) if position is None else np.asarray(position, dtype=float)
    dimension = position.shape[0]
    inv_metric = np.ones(dimension)
    random_walk = config.method == 'rwm'
    target = RW_TARGET_ACCEPT if random_walk else config.target_accept

    if random_walk:
        step_size = config.proposal_sd or 2.38 / math.sqrt(dimension)
    else:
        step_size = config.step_size or find_reasonable_step_size(model, position, inv_metric, rng)
    averaging = DualAveraging.start(step_size, target)

    windows = warmup_windows(config.warmup) if config.adapt_metric else []
    window_ends = {end: start for start, end in windows}
    variance = RunningVariance(dimension)
    non_finite = divergences = 0

    for iteration in range(config.warmup):
        if random_walk:
            position, stats = rw_metropolis_step(position, model, step_size * np.sqrt(inv_metric), rng)
        else:
            position, stats = hmc_step(position, model, step_size, config.max_steps, inv_metric, rng,
                                       divergence_threshold=config.divergence_threshold, jitter=config.jitter)
        non_finite += not math.isfinite(stats.energy_error)
        divergences += stats.divergent
        step_size = averaging.update(stats.accept_prob)

        if any(start <= iteration < end for start, end in windows):
            variance.update(position)
        if iteration + 1 in window_ends:
            inv_metric = variance.regularized_variance()
            variance = RunningVariance(dimension)
            if not random_walk:
                step_size = find_reasonable_step_size(model, position, inv_metric, rng, initial=step_size)
            averaging = DualAveraging.start(step_size, target)
            logger.debug("Chain %d: metric window [%d, %d) closed, step size restarted at %.4g",
                         chain, window_ends[iteration + 1], iteration + 1, step_size)

    if non_finite > 0.5 * config.warmup:
        raise AdaptationError(f"{non_finite} of {config.warmup} warmup transitions met a non-finite density")

    step_size = averaging.final_step_size
    logger.debug("Chain %d: adapted step size %.4g, %d warmup divergences", chain, step_size, divergences)
    return WarmupResult(step_size=step_size, inv_metric=inv_metric, position=position, divergences=divergences)
