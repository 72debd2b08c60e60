"""
Configure logging for the hierpool package
"""

import logging
import os
import sys

PLAIN_FORMAT = '%(asctime)s %(levelname)-8s %(name)s %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class CustomFormatter(logging.Formatter):
    """Logging formatter colouring the level name, tracebacks in red

    Colours are only used when the stream is a terminal; fits redirected to a
    file get the same fields without ANSI codes.
    """

    # \x1b[XXXm with XXX a semicolon separated list: 30-37 foreground, 40-47 background, 1 bold, 0 reset
    LEVEL_COLOURS = {
        logging.DEBUG: '\x1b[40;1m',
        logging.INFO: '\x1b[34;1m',
        logging.WARNING: '\x1b[33;1m',
        logging.ERROR: '\x1b[31m',
        logging.CRITICAL: '\x1b[41m',
    }

    def __init__(self, colour=True):
        super().__init__(PLAIN_FORMAT, DATE_FORMAT)
        self.colour = colour
        self.coloured = {
            level: logging.Formatter(
                f'\x1b[30;1m%(asctime)s\x1b[0m {code}%(levelname)-8s\x1b[0m \x1b[0;1m %(name)s\x1b[0m %(message)s',
                DATE_FORMAT,
            )
            for level, code in self.LEVEL_COLOURS.items()
        }

    def format(self, record):
        if not self.colour:
            return super().format(record)

        formatter = self.coloured.get(record.levelno, self.coloured[logging.DEBUG])
        if record.exc_info:
            record.exc_text = f'\x1b[31m{formatter.formatException(record.exc_info)}\x1b[0m'
        output = formatter.format(record)
        # cached text would leak colour codes into other handlers
        record.exc_text = None
        return output


def log_level():
    """Level named by HIERPOOL_LOG_LEVEL, INFO when unset or unknown"""
    name = (os.getenv('HIERPOOL_LOG_LEVEL') or 'INFO').upper()
    level = logging.getLevelName(name)
    return level if isinstance(level, int) else logging.INFO


stream_handler = logging.StreamHandler(sys.stderr)
stream_handler.setFormatter(CustomFormatter(colour=sys.stderr.isatty()))

logger = logging.getLogger(__name__)
logger.setLevel(log_level())
logger.addHandler(stream_handler)
logger.propagate = False
