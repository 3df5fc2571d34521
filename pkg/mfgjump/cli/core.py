import functools
import logging
from typing import Callable

import click
from rich.console import Console
from rich.markup import escape

from mfgjump.errors import MFGJumpError
from mfgjump.cli.config import Scenario, load_scenario
from mfgjump.cli.schemas import SchemaValidationError

logger = logging.getLogger(__name__)
console = Console()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CROSS_CHECK = 3


def scenario_options(func: Callable) -> Callable:
    """--config, --out, --seed and --quiet, shared by every subcommand."""
    func = click.option("--quiet", is_flag=True, help="Only print errors.")(func)
    func = click.option("--seed", type=click.IntRange(min=0), default=None,
                        help="Monte Carlo master seed (overrides the config).")(func)
    func = click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                        help="Output directory (overrides the config and MFGJUMP_OUTPUT_DIR).")(func)
    func = click.option("--config", "config_path", required=True,
                        help="Scenario file: path, or name under ./scenarios or the packaged scenarios.")(func)
    return func


def make_console(quiet: bool) -> Console:
    logging.getLogger("mfgjump").setLevel(logging.ERROR if quiet else logging.NOTSET)
    return Console(quiet=quiet)


def load_or_exit(ctx: click.Context, config_path: str, out, seed) -> Scenario:
    try:
        return load_scenario(config_path, out=out, seed=seed)
    except FileNotFoundError as e:
        console.print(f"[red]Error: {escape(str(e))}[/red]", soft_wrap=True)
    except (SchemaValidationError, OSError) as e:
        console.print(f"[red]Error: Invalid scenario: {escape(str(e))}[/red]", soft_wrap=True)
    ctx.exit(EXIT_CONFIG)


def numerical_guard(func: Callable) -> Callable:
    """Map engine failures to exit code 2 and write failures to exit code 1."""
    @functools.wraps(func)
    def wrapper(ctx: click.Context, *args, **kwargs):
        try:
            return func(ctx, *args, **kwargs)
        except MFGJumpError as e:
            logger.debug(f"{type(e).__name__}: {e}")
            console.print(f"[red]Error: {type(e).__name__}: {escape(str(e))}[/red]", soft_wrap=True)
            ctx.exit(EXIT_NUMERICAL)
        except OSError as e:
            console.print(f"[red]Error: Could not write outputs: {escape(str(e))}[/red]", soft_wrap=True)
            ctx.exit(EXIT_CONFIG)
    return wrapper
