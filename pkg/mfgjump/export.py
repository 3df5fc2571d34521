"""
CSV writers for command outputs.

Column contracts are fixed; floats are written with 17 significant digits so
that two runs of the same scenario produce byte-identical files. Columns a
run could not compute (e.g. the ODE route with a sampled a) are left empty.
"""
import logging
from pathlib import Path
from typing import List, Optional

import numpy as np
import pandas as pd

from mfgjump.density import CharFnGrid, DensityGrid
from mfgjump.expectation import ExpectationPath
from mfgjump.montecarlo import PathEnsembleStats
from mfgjump.riccati import RiccatiSolution

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _write(df: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(df)} rows to {path}")
    return path


def time_suffix(t: float) -> str:
    """File-name fragment for a slice time: 0.5 → 't0.5'."""
    return "t" + f"{t:.12g}".replace("-", "m")


def write_riccati(sol: RiccatiSolution, path: Path) -> Path:
    return _write(pd.DataFrame({"t": sol.times, "A": sol.A, "B": sol.B, "C": sol.C}), path)


def write_expectation(times: np.ndarray, path: Path, quadrature: Optional[ExpectationPath] = None,
                      ode: Optional[ExpectationPath] = None, closed: Optional[ExpectationPath] = None) -> Path:
    """(t, E_quadrature, E_ode, E_closed); each path is sampled at `times`."""
    times = np.asarray(times, dtype=float)

    def column(p: Optional[ExpectationPath]):
        if p is None:
            return np.full(times.size, np.nan)
        return np.interp(times, p.times, p.E)

    df = pd.DataFrame({
        "t": times,
        "E_quadrature": column(quadrature),
        "E_ode": column(ode),
        "E_closed": column(closed),
    })
    return _write(df, path)


def write_density(grid: DensityGrid, directory: Path, prefix: str) -> List[Path]:
    """One (x, m) file per slice: <prefix>_t<time>.csv."""
    paths = []
    for i, t in enumerate(grid.times):
        x, m = grid.slice(i)
        name = f"{prefix}_{time_suffix(float(t))}.csv"
        paths.append(_write(pd.DataFrame({"x": x, "m": m}), Path(directory) / name))
    return paths


def write_charfn(cf: CharFnGrid, directory: Path, prefix: str = "charfn") -> List[Path]:
    paths = []
    for i, t in enumerate(cf.times):
        values = cf.values[i]
        df = pd.DataFrame({"omega": cf.omega, "re": values.real, "im": values.imag})
        paths.append(_write(df, Path(directory) / f"{prefix}_{time_suffix(float(t))}.csv"))
    return paths


def write_simulation(stats: PathEnsembleStats, path: Path) -> Path:
    df = pd.DataFrame({
        "t": stats.times,
        "mean": stats.mean,
        "stderr": stats.stderr,
        "m2": stats.m2,
        "n_escaped": stats.n_escaped,
    })
    return _write(df, path)


def write_opinion_path(path_obj: ExpectationPath, path: Path) -> Path:
    return _write(pd.DataFrame({"t": path_obj.times, "E": path_obj.E}), path)


def write_checks(rows: List[dict], path: Path) -> Path:
    """Cross-check table: (check, error, tolerance, status)."""
    return _write(pd.DataFrame(rows, columns=["check", "error", "tolerance", "status"]), path)
