"""
Command line front end:
- Load command modules
- Dispatch the parsed arguments to the command coroutine
- Log invocations and map errors to exit codes
"""

import argparse
import asyncio
import importlib
import logging

from hierpool.data import models
from hierpool.errors import (AdaptationError, ConfigurationError, DataError, EvaluationError, SamplingError,
                             ShapeError, UsageError, ValidationError)
from hierpool.sampler import SamplerConfig

logger = logging.getLogger(__name__)

MODULES = [
    "hierpool.modules.fit_model1",
    "hierpool.modules.fit_model2",
    "hierpool.modules.simulate",
]

VALIDATION_ERRORS = (ValidationError, ConfigurationError, UsageError, DataError, ShapeError)
SAMPLING_ERRORS = (SamplingError, AdaptationError, EvaluationError)


def exit_code(error):
    """Exit code of a command that failed with the given error

    Raises:
        Exception: the error itself when it is not a known failure kind
    """
    if isinstance(error, VALIDATION_ERRORS):
        return models.EXIT_CODES['validation']
    if isinstance(error, SAMPLING_ERRORS):
        return models.EXIT_CODES['sampling']
    raise error


def sampler_config(args):
    """SamplerConfig from the flags installed by add_sampler_options"""
    return SamplerConfig(**{name: getattr(args, name) for name in models.SAMPLER_OPTIONS})


class Cli:
    """Argument parser with one sub-command per loaded module"""

    def __init__(self, prog='hierpool'):
        self.parser = argparse.ArgumentParser(prog=prog, description="Hierarchical pooling of site-level effects")
        self.subparsers = self.parser.add_subparsers(dest='command', required=True)
        self.commands = {}

    def add_command(self, name, callback, on_error=None, **kwargs):
        """Register a command coroutine and its error handler

        Args:
            name (str): sub-command name
            callback (coroutine function): receives the parsed arguments, returns an exit code
            on_error (coroutine function, optional): receives the arguments and the error, returns an exit code

        Returns:
            argparse.ArgumentParser: the sub-command parser, for the module to add its arguments
        """
        parser = self.subparsers.add_parser(name, **kwargs)
        self.commands[name] = (callback, on_error)
        return parser

    async def setup_hook(self):
        for module in MODULES:
            await importlib.import_module(module).setup(self)
            logger.debug("Loaded module %s", module)

    # pylint: disable=missing-function-docstring
    def on_invocation(self, args):
        arguments = [f"{key}='{value}'" for key, value in sorted(vars(args).items()) if key != 'command']
        logger.info("Command invoked: %s %s", args.command, ' '.join(arguments))

    async def dispatch(self, argv=None):
        """Parse argv and run the selected command

        Returns:
            int: exit code
        """
        await self.setup_hook()
        try:
            args = self.parser.parse_args(argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else models.EXIT_CODES['validation']

        self.on_invocation(args)
        callback, on_error = self.commands[args.command]
        try:
            code = await callback(args)
        except Exception as error:  # pylint: disable=broad-except
            if on_error is None:
                raise
            code = await on_error(args, error)
        logger.info("Command %s finished with exit code %d", args.command, code)
        return code

    def run(self, argv=None):
        return asyncio.run(self.dispatch(argv))
