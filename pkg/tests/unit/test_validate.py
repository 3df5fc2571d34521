import re

import pandas as pd
import pytest
from click.testing import CliRunner

from mfgjump.cli.app import cli
from mfgjump.cli.commands.validate import Check
from mfgjump.cli.engines.analytic import AnalyticEngineSuite
from mfgjump.cli.engines.base import ENGINES
from mfgjump.cli.engines.perturbed import PerturbedEngineSuite

# Engines whose output only exists when the scenario has a density
DENSITY_ENGINES = ("density_transform", "density_fd")

DIFFUSION = {
    "problem": {
        "horizon": 1.0,
        "delta": 0.5,
        "coefficients": {"a": -1.0, "b": 0.5, "c": 0.0},
        "initial": {"mean": 0.0, "std": 0.5},
    },
    "numerics": {
        "riccati_steps": 1024,
        "density": {"n": 512, "fd_points": 512, "fd_steps": 1000},
        "montecarlo": {"paths": 2000, "steps": 200},
    },
    "output": {"times": [0.5, 1.0]},
}


def _clean(output):
    return re.sub(r'\x1B(?:[@-Z\\-_]|\[[0-?]*[ -/]*[@-~])', '', output)


def test_check_status():
    assert Check("x", 1e-7, 1e-6).status == "pass"
    assert Check("x", 1e-5, 1e-6).status == "fail"
    assert Check("x", None, 1e-6, "n/a").status == "skip"


def test_trivial_scenario_passes(engine_suite, tmp_path):
    """a = b = c = 0 with no noise: every engine returns E = x0."""
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path):
        result = runner.invoke(cli, ["validate", "--config", "validate", "--out", "out"])
        assert result.exit_code == 0, result.output
        output = _clean(result.output)
        assert "CROSS-CHECKS: validate" in output
        assert "All cross-checks passed" in output

        df = pd.read_csv("out/validate.csv")
        assert list(df.columns) == ["check", "error", "tolerance", "status"]
        assert set(df["status"]) <= {"pass", "skip"}
        # 1. Densities do not exist for a point mass without diffusion
        skipped = set(df.loc[df["status"] == "skip", "check"])
        assert "density (transform): mass" in skipped
        assert "monte carlo: mean vs quadrature" not in skipped


def test_diffusion_scenario_passes(engine_suite, tmp_path):
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path):
        result = runner.invoke(cli, ["validate", "--config", "validate_diffusion", "--out", "out"])
        assert result.exit_code == 0, result.output
        df = pd.read_csv("out/validate.csv")
        assert (df["status"] == "pass").all()


@pytest.mark.parametrize("target", [e for e in ENGINES if e not in DENSITY_ENGINES])
def test_perturbed_engine_is_caught(perturb, tmp_path, target):
    """Shifting any single engine by 1e-3 makes validate exit with status 3."""
    perturb(target)
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path):
        result = runner.invoke(cli, ["validate", "--config", "validate", "--out", "out"])
        assert result.exit_code == 3
        assert "cross-check(s) failed" in _clean(result.output)
        assert "fail" in set(pd.read_csv("out/validate.csv")["status"])


@pytest.mark.parametrize("target", DENSITY_ENGINES)
def test_perturbed_density_is_caught(perturb, tmp_path, write_scenario, target):
    path = write_scenario("diffusion", DIFFUSION)
    perturb(target)
    runner = CliRunner()
    with runner.isolated_filesystem(temp_dir=tmp_path):
        result = runner.invoke(cli, ["validate", "--config", path, "--out", "out"])
        assert result.exit_code == 3
        df = pd.read_csv("out/validate.csv")
        label = "transform" if target == "density_transform" else "fd"
        status = df.set_index("check")["status"]
        assert status[f"density ({label}): mass"] == "fail"


def test_unknown_perturbation_target():
    with pytest.raises(ValueError, match="Unknown engines"):
        PerturbedEngineSuite(AnalyticEngineSuite(), targets=["warp_drive"])
