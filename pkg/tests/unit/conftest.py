import json
import os

import pytest

from mfgjump.cli.engines.analytic import AnalyticEngineSuite
from mfgjump.cli.engines.factory import set_engine_suite
from mfgjump.cli.engines.perturbed import PerturbedEngineSuite


@pytest.fixture(scope="session", autouse=True)
def isolate_output_dir(tmp_path_factory):
    """
    Sets MFGJUMP_OUTPUT_DIR to a temporary directory for the unit test session.
    Prevents CSVs from landing in the working directory when a test omits --out.
    """
    temp_dir = tmp_path_factory.mktemp("mfgjump_out")
    os.environ["MFGJUMP_OUTPUT_DIR"] = str(temp_dir)
    yield temp_dir
    if "MFGJUMP_OUTPUT_DIR" in os.environ:
        del os.environ["MFGJUMP_OUTPUT_DIR"]


@pytest.fixture
def engine_suite():
    """
    Fresh AnalyticEngineSuite for each test.
    """
    suite = AnalyticEngineSuite()
    set_engine_suite(suite)
    yield suite
    set_engine_suite(None)


@pytest.fixture
def perturb():
    """
    Installs a PerturbedEngineSuite around the analytic engines for the given targets.
    """
    def _install(*targets):
        suite = PerturbedEngineSuite(AnalyticEngineSuite(), targets=targets)
        set_engine_suite(suite)
        return suite
    yield _install
    set_engine_suite(None)


@pytest.fixture
def write_scenario(tmp_path):
    """Writes a scenario dict to <tmp>/<name>.json and returns the path as a string."""
    def _write(name, data):
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(data, indent=2))
        return str(path)
    return _write
