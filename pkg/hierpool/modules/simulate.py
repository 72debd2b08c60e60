"""
Provide the sensitivity command:
- "simulate": refit Model 1 on rescaled or equalized site inputs and report the pooling summary of each
"""

import asyncio
from dataclasses import asdict
import functools
import logging
import os

from hierpool import cli as client
from hierpool.data import core, models
from hierpool.diagnostics import fit_scenario, parse_scenarios, sensitivity_frame
from hierpool.errors import SamplingError
from hierpool.models import PriorConfig, check_sites

logger = logging.getLogger(__name__)


class Simulate:
    """simulate command"""

    def __init__(self, cli):
        self.cli = cli

    def configure(self, parser):
        parser.add_argument('sites', help="CSV file with header site,tau_hat,sigma_hat")
        parser.add_argument('--scenarios', nargs='+', default=list(models.DEFAULT_SCENARIOS),
                            help="Scenarios among original, tau*C, sigma*C, equalize=SITE (join with &)")
        models.add_sampler_options(parser)

    async def simulate(self, args):
        """
        Fit every scenario concurrently and write sensitivity.csv and manifest.json.

        Args:
            args (argparse.Namespace): parsed command line

        Raises:
            SamplingError: some scenario fits failed, the other rows are written first

        Returns:
            int: 0
        """
        config = client.sampler_config(args)
        priors = PriorConfig()
        sites = core.ingest_sites(args.sites)
        scenarios = parse_scenarios(args.scenarios)
        for scenario in scenarios:
            check_sites(scenario.apply(sites))

        loop = asyncio.get_running_loop()
        rows = await asyncio.gather(*[
            loop.run_in_executor(None, functools.partial(fit_scenario, sites, scenario, config, priors))
            for scenario in scenarios
        ])

        os.makedirs(args.output, exist_ok=True)
        core.write_sensitivity(sensitivity_frame(rows), os.path.join(args.output, 'sensitivity.csv'))
        manifest = core.RunManifest(command='simulate', inputs={'sites': args.sites}, sampler=config.as_dict(),
                                    priors=asdict(priors), options={'scenarios': list(args.scenarios)},
                                    output=args.output)
        core.write_manifest(manifest, os.path.join(args.output, 'manifest.json'))

        failed = [row for row in rows if not row.ok]
        if failed:
            raise SamplingError(f"{len(failed)} scenario(s) failed: " +
                                "; ".join(f"{row.scenario}: {row.error}" for row in failed))
        return models.EXIT_CODES['ok']

    async def simulate_error(self, args, error):
        """Handler called whenever simulate failed

        Args:
            args (argparse.Namespace): parsed command line
            error (Exception): error raised

        Returns:
            int: 2 for invalid input or scenarios, 3 for failed fits
        """
        logger.error("simulate failed on %s", args.sites, exc_info=error)
        return client.exit_code(error)


# pylint: disable=missing-function-docstring
async def setup(cli):
    command = Simulate(cli)
    parser = cli.add_command('simulate', command.simulate, command.simulate_error,
                             help="Sensitivity of the pooling summary to the site inputs")
    command.configure(parser)
