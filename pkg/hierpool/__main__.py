"""
Instanciate and run the command line front end
"""

import sys

from hierpool import cli as client

# pylint: disable=missing-function-docstring
def main(argv=None):
    return client.Cli().run(argv)


if __name__ == '__main__':
    sys.exit(main())
