import logging
import os

import click
from rich.logging import RichHandler

from mfgjump import __version__

# Setup Logging
log_level = os.environ.get("LOG_LEVEL", "WARNING").upper()
logging.basicConfig(
    level=log_level,
    format="%(message)s",
    datefmt="[%X]",
    handlers=[RichHandler(rich_tracebacks=True, markup=True)]
)
logger = logging.getLogger("mfgjump")


@click.group()
@click.version_option(__version__, prog_name="mfgjump")
def cli():
    """Mean-field-game jump-diffusion scenario runner."""
    pass


# Register Commands
from mfgjump.cli.commands.riccati import riccati_cmd
from mfgjump.cli.commands.expect import expect_cmd
from mfgjump.cli.commands.density import density_cmd
from mfgjump.cli.commands.simulate import simulate_cmd
from mfgjump.cli.commands.investor import investor_cmd
from mfgjump.cli.commands.validate import validate_cmd

cli.add_command(riccati_cmd, name="riccati")
cli.add_command(expect_cmd, name="expect")
cli.add_command(density_cmd, name="density")
cli.add_command(simulate_cmd, name="simulate")
cli.add_command(investor_cmd, name="investor")
cli.add_command(validate_cmd, name="validate")

if __name__ == "__main__":
    cli()
