import logging
import os
from pathlib import Path
from typing import Optional

logger = logging.getLogger(__name__)

SCENARIO_DIR = "scenarios"


def get_output_dir() -> Path:
    """
    Returns the default directory for CSV outputs.
    Default: ./mfgjump-out
    Override: MFGJUMP_OUTPUT_DIR env var
    """
    out = os.environ.get("MFGJUMP_OUTPUT_DIR")
    if out:
        return Path(out)
    return Path.cwd() / "mfgjump-out"


def get_package_scenarios_dir() -> Path:
    """Example scenarios shipped with the package (mfgjump/scenarios)."""
    return Path(__file__).parent.parent.resolve() / SCENARIO_DIR


def resolve_output_dir(cli_out: Optional[str], config_dir: Optional[str]) -> Path:
    """--out, then the config's output.directory, then get_output_dir()."""
    if cli_out:
        return Path(cli_out)
    if config_dir:
        return Path(config_dir)
    return get_output_dir()


def resolve_scenario_path(path_str: str, working_dir: Optional[Path] = None) -> Path:
    """
    Resolves a scenario file using the priority:
    1. Absolute/Explicit Path
    2. CWD/<path>
    3. CWD/scenarios/<path>
    4. Package/scenarios/<path>

    Appends .json if missing.
    """
    if not path_str.endswith(".json"):
        path_str += ".json"
    p = Path(path_str)
    if p.is_absolute():
        logger.debug(f"Checking absolute path: {p}")
        if not p.exists():
            raise FileNotFoundError(f"Scenario file not found: {p}")
        return p

    root = working_dir or Path.cwd()
    candidates = [
        root / path_str,
        root / SCENARIO_DIR / path_str,
        get_package_scenarios_dir() / path_str,
    ]
    for candidate in candidates:
        logger.debug(f"Checking candidate: {candidate}")
        if candidate.exists():
            logger.debug(f"FOUND: {candidate}")
            return candidate

    raise FileNotFoundError(f"Scenario '{path_str}' not found in: {[str(c) for c in candidates]}")
