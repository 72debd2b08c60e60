"""
Provide the household-level fit command:
- "fit-model2": site-varying regression coefficients, optionally with the baseline outcome (--bis)
"""

import asyncio
from dataclasses import asdict
import functools
import logging
import os

from hierpool import cli as client
from hierpool.data import core, models
from hierpool.diagnostics import summarize
from hierpool.models import Model2, Model2Priors
from hierpool.sampler import run

logger = logging.getLogger(__name__)


class FitModel2:
    """fit-model2 command"""

    def __init__(self, cli):
        self.cli = cli

    def configure(self, parser):
        parser.add_argument('households', help="CSV file with header site_index,y,treatment[,y_baseline]")
        parser.add_argument('sitepred', nargs='?', default=None,
                            help="CSV file with header site_index,<predictors>; the six reference sites if omitted")
        parser.add_argument('--bis', action='store_true', help="Add the baseline outcome as a predictor")
        parser.add_argument('--gamma-sd', type=float, default=Model2Priors.gamma_sd, help="Prior sd of gamma")
        parser.add_argument('--lkj-eta', type=float, default=Model2Priors.lkj_eta, help="LKJ shape")
        parser.add_argument('--theta-scale', type=float, default=Model2Priors.theta_scale,
                            help="Half-Cauchy scale of the coefficient scales")
        parser.add_argument('--sigma-upper', type=float, default=Model2Priors.sigma_upper,
                            help="Upper bound of the uniform residual scale prior")
        models.add_sampler_options(parser)

    async def fit_model2(self, args):
        """
        Fit Model 2 and write summary, densities, diagnostics and manifest.

        Args:
            args (argparse.Namespace): parsed command line

        Returns:
            int: 0, or 4 when some R-hat exceeds the threshold
        """
        config = client.sampler_config(args)
        priors = Model2Priors(gamma_sd=args.gamma_sd, lkj_eta=args.lkj_eta, theta_scale=args.theta_scale,
                              sigma_upper=args.sigma_upper)
        mode = 'model2bis' if args.bis else 'model2'
        data = core.ingest_households(args.households, args.sitepred, mode=mode)
        model = Model2(data.design, data.y, priors)

        loop = asyncio.get_running_loop()
        fit = await loop.run_in_executor(None, functools.partial(run, model, config))
        summary = summarize(fit)

        design = data.design
        os.makedirs(args.output, exist_ok=True)
        core.write_summary(summary, os.path.join(args.output, 'summary.csv'))
        core.write_densities(fit, args.output)
        core.write_diagnostics(os.path.join(args.output, 'diagnostics.txt'), fit, summary, sections=[
            ('design', [f"mode: {mode}", f"households: {design.n_households}", f"sites: {design.n_sites}",
                        f"household predictors: {design.n_predictors}",
                        f"site predictors: {design.n_site_predictors}"]),
        ])
        manifest = core.RunManifest(command='fit-model2',
                                    inputs={'households': args.households, 'sitepred': args.sitepred},
                                    sampler=config.as_dict(), priors=asdict(priors), options={'bis': args.bis},
                                    output=args.output)
        core.write_manifest(manifest, os.path.join(args.output, 'manifest.json'))

        if summary.max_rhat > models.RHAT_THRESHOLD:
            logger.warning("Some R-hat exceed %s, results written anyway", models.RHAT_THRESHOLD)
            return models.EXIT_CODES['not_converged']
        return models.EXIT_CODES['ok']

    async def fit_error(self, args, error):
        """Handler called whenever fit-model2 failed

        Args:
            args (argparse.Namespace): parsed command line
            error (Exception): error raised

        Returns:
            int: 2 for invalid input or configuration, 3 for sampling failures
        """
        logger.error("fit-model2 failed on %s", args.households, exc_info=error)
        return client.exit_code(error)


# pylint: disable=missing-function-docstring
async def setup(cli):
    command = FitModel2(cli)
    parser = cli.add_command('fit-model2', command.fit_model2, command.fit_error,
                             help="Fit the household-level regression model")
    command.configure(parser)
