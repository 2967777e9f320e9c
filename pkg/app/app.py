# Native and installed modules
import logging
import sys

import click

# Custom modules
from routes.commands import EXIT_ERROR, register
from utils.shared import configure_logging


@click.group()
@click.option("-v", "--verbose", count=True, help="-v for debug messages.")
def cli(verbose):
    """Numerical workbench for exponential-family regression experiments."""

    configure_logging(logging.DEBUG if verbose else None)


register(cli)


def main(argv=None):
    try:
        return cli.main(args=argv, standalone_mode=False) or 0
    except click.ClickException as error:
        error.show()
        return EXIT_ERROR
    except click.Abort:
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
