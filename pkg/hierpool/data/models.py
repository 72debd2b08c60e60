"""
Define the file layouts, reference inputs and command line options shared by the fit commands.
"""

import argparse

SITE_COLUMNS = ['site', 'tau_hat', 'sigma_hat']
HOUSEHOLD_COLUMNS = ['site_index', 'y', 'treatment']
BASELINE_COLUMN = 'y_baseline'
SITE_INDEX_COLUMN = 'site_index'

POOLING_COLUMNS = ['site', 'sigma_hat', 'omega_s']
DENSITY_COLUMNS = ['bin_left', 'bin_right', 'count']
SENSITIVITY_COLUMNS = ['scenario', 'sigma_tilde', 'omega_bar']

FORMAT_VERSION = 1

EXIT_CODES = {
    'ok': 0,
    'validation': 2,
    'sampling': 3,
    'not_converged': 4,
}

RHAT_THRESHOLD = 1.01

# ITT estimates and standard errors of the six sites, asset-index units
REFERENCE_SITES = (
    ('Ethiopia', 0.54, 0.066),
    ('Ghana', 0.22, 0.048),
    ('Honduras', 0.02, 0.044),
    ('India', 0.69, 0.090),
    ('Pakistan', 0.32, 0.067),
    ('Peru', 0.08, 0.047),
)

# Site-level predictors of the household model: health component indicator, asset transfer value
DEFAULT_SITE_PREDICTORS = {
    'health': (0, 1, 1, 1, 1, 1),
    'transfer': (7.98, 6, 4.75, 6.53, 3.75, 17.14),
}

DEFAULT_SCENARIOS = (
    'original',
    'tau*10',
    'tau*0.1',
    'sigma*10',
    'sigma*0.1',
    'equalize=Ethiopia',
)


def positive_int(value):
    """argparse type for strictly positive integers"""
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def add_sampler_options(parser: argparse.ArgumentParser):
    """Add the sampler configuration flags to a command parser

    Args:
        parser (argparse.ArgumentParser): command parser

    Returns:
        argparse.ArgumentParser: the same parser
    """
    group = parser.add_argument_group("sampler")
    group.add_argument('--chains', type=positive_int, default=4, help="Number of chains")
    group.add_argument('--warmup', type=int, default=1000, help="Warmup iterations per chain")
    group.add_argument('--iterations', type=positive_int, default=2000,
                       help="Total iterations per chain, warmup included")
    group.add_argument('--seed', type=int, default=1, help="Master seed")
    group.add_argument('--target-accept', type=float, default=0.99, help="Step size adaptation target")
    group.add_argument('--max-steps', type=positive_int, default=32, help="Maximum leapfrog steps per transition")
    group.add_argument('--divergence-threshold', type=float, default=1000.0,
                       help="Energy error flagged as divergent")
    group.add_argument('--no-adapt-metric', dest='adapt_metric', action='store_false',
                       help="Keep a unit metric during warmup")
    group.add_argument('--jitter', type=float, default=0.0, help="Step size jitter fraction")
    group.add_argument('--method', choices=['hmc', 'rwm'], default='hmc', help="Transition kernel")
    group.add_argument('--step-size', type=float, default=None, help="Initial step size")
    group.add_argument('--workers', dest='max_workers', type=positive_int, default=None,
                       help="Threads running the chains")
    parser.add_argument('--output', '-o', default='.', help="Output directory")
    return parser


SAMPLER_OPTIONS = ('chains', 'warmup', 'iterations', 'seed', 'target_accept', 'max_steps', 'divergence_threshold',
                   'adapt_metric', 'jitter', 'method', 'step_size', 'max_workers')
