"""
Provide the site-level fit command:
- "fit-model1": partial pooling of site estimates, with pooling factors and the frequentist baseline
"""

import asyncio
from dataclasses import asdict
import functools
import logging
import os

from hierpool import cli as client
from hierpool.data import core, models
from hierpool.diagnostics import pooling_report, random_effects_baseline, shrinkage_table, summarize
from hierpool.models import Model1, PriorConfig
from hierpool.models.model1 import PARAMETRIZATIONS
from hierpool.sampler import run

logger = logging.getLogger(__name__)


class FitModel1:
    """fit-model1 command"""

    def __init__(self, cli):
        self.cli = cli

    def configure(self, parser):
        parser.add_argument('sites', help="CSV file with header site,tau_hat,sigma_hat")
        parser.add_argument('--parametrization', choices=PARAMETRIZATIONS, default='auto',
                            help="Sampler coordinates per site: auto centers the sharply estimated sites")
        parser.add_argument('--tau-sd', type=float, default=PriorConfig.tau_sd, help="Prior sd of tau")
        parser.add_argument('--sigma-scale', type=float, default=PriorConfig.sigma_scale,
                            help="Half-Cauchy scale of sigma")
        models.add_sampler_options(parser)

    async def fit_model1(self, args):
        """
        Fit Model 1 and write summary, pooling, densities, diagnostics and manifest.

        Args:
            args (argparse.Namespace): parsed command line

        Returns:
            int: 0, or 4 when some R-hat exceeds the threshold
        """
        config = client.sampler_config(args)
        priors = PriorConfig(tau_sd=args.tau_sd, sigma_scale=args.sigma_scale)
        sites = core.ingest_sites(args.sites)
        model = Model1(sites, priors, parametrization=args.parametrization)

        loop = asyncio.get_running_loop()
        fit = await loop.run_in_executor(None, functools.partial(run, model, config))
        summary = summarize(fit)
        report = pooling_report(fit, sites)
        baseline = random_effects_baseline(sites)

        os.makedirs(args.output, exist_ok=True)
        core.write_summary(summary, os.path.join(args.output, 'summary.csv'))
        core.write_pooling(report, os.path.join(args.output, 'pooling.csv'))
        core.write_densities(fit, args.output)
        core.write_diagnostics(os.path.join(args.output, 'diagnostics.txt'), fit, summary, sections=[
            ('random-effects baseline', self._baseline_lines(baseline)),
            ('shrinkage', self._shrinkage_lines(summary, sites)),
        ])
        manifest = core.RunManifest(command='fit-model1', inputs={'sites': args.sites}, sampler=config.as_dict(),
                                    priors=asdict(priors), options={'parametrization': args.parametrization},
                                    output=args.output)
        core.write_manifest(manifest, os.path.join(args.output, 'manifest.json'))

        logger.info("sigma_tilde=%.4f omega_bar=%.4f, max R-hat %.4f", report.sigma_tilde, report.omega_bar,
                    summary.max_rhat)
        if summary.max_rhat > models.RHAT_THRESHOLD:
            logger.warning("Some R-hat exceed %s, results written anyway", models.RHAT_THRESHOLD)
            return models.EXIT_CODES['not_converged']
        return models.EXIT_CODES['ok']

    @staticmethod
    def _baseline_lines(baseline):
        return [
            f"full pooling mean: {baseline.fixed_mean:.6g} (se {baseline.fixed_se:.6g})",
            f"between-site variance: {baseline.tau_squared:.6g}",
            f"random-effects mean: {baseline.random_mean:.6g} (se {baseline.random_se:.6g})",
            f"Q: {baseline.q_statistic:.6g}",
            f"I2: {baseline.i_squared:.6g}",
        ]

    @staticmethod
    def _shrinkage_lines(summary, sites):
        table = shrinkage_table(summary, sites)
        return [f"{row.site}: tau_hat {row.tau_hat:.6g}, posterior mean {row.posterior_mean:.6g}, "
                f"shrinkage {row.shrinkage:.6g}" for row in table.itertuples()]

    async def fit_error(self, args, error):
        """Handler called whenever fit-model1 failed

        Args:
            args (argparse.Namespace): parsed command line
            error (Exception): error raised

        Returns:
            int: 2 for invalid input or configuration, 3 for sampling failures
        """
        logger.error("fit-model1 failed on %s", args.sites, exc_info=error)
        return client.exit_code(error)


# pylint: disable=missing-function-docstring
async def setup(cli):
    command = FitModel1(cli)
    parser = cli.add_command('fit-model1', command.fit_model1, command.fit_error,
                             help="Fit the site-level partial pooling model")
    command.configure(parser)
