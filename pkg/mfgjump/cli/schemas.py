import json
import math
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, Dict, List, Optional, Union

from mfgjump.errors import JumpLawError
from mfgjump.jump_models import from_config


class SchemaValidationError(Exception):
    pass


def _join(path: str, name: str) -> str:
    return f"{path}.{name}" if path else name


def _number(value: Any, path: str, minimum: Optional[float] = None, strict: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaValidationError(f"{path}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise SchemaValidationError(f"{path}: must be finite")
    if minimum is not None:
        if strict and not value > minimum:
            raise SchemaValidationError(f"{path}: must be > {minimum:g}, got {value}")
        if not strict and not value >= minimum:
            raise SchemaValidationError(f"{path}: must be >= {minimum:g}, got {value}")
    return float(value)


def _integer(value: Any, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaValidationError(f"{path}: expected an integer, got {value!r}")
    if value < minimum:
        raise SchemaValidationError(f"{path}: must be >= {minimum}, got {value}")
    return value


def _number_list(value: Any, path: str) -> List[float]:
    if not isinstance(value, list):
        raise SchemaValidationError(f"{path}: expected a list of numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


class _Block:
    """
    Shared loader for config blocks.

    1. Unknown keys are rejected (ALIASES maps JSON keys that are not valid
       Python names, e.g. 'lambda').
    2. NESTED blocks are loaded recursively with their field path.
    3. The dataclass is built and validated with the field path as prefix.
    """
    ALIASES: ClassVar[Dict[str, str]] = {}
    NESTED: ClassVar[Dict[str, type]] = {}

    @classmethod
    def from_dict(cls, data: Any, path: str = ""):
        if not isinstance(data, dict):
            raise SchemaValidationError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        # aliased fields are only reachable through their JSON spelling
        hidden = set(cls.ALIASES.values())
        unknown = {k for k in data if k in hidden or cls.ALIASES.get(k, k) not in known}
        if unknown:
            reverse = {v: k for k, v in cls.ALIASES.items()}
            allowed = sorted(reverse.get(k, k) for k in known)
            raise SchemaValidationError(
                f"{path or 'config'}: unknown fields {sorted(unknown)}. Allowed: {allowed}"
            )
        data = {cls.ALIASES.get(k, k): v for k, v in data.items()}
        for name, block in cls.NESTED.items():
            if data.get(name) is not None:
                data[name] = block.from_dict(data[name], _join(path, name))
        try:
            instance = cls(**data)
        except TypeError as e:
            raise SchemaValidationError(f"{path or 'config'}: {e}")
        instance.validate(path)
        return instance

    def validate(self, path: str = ""):
        pass


Coefficient = Union[float, Dict[str, List[float]]]


def _coefficient(value: Any, path: str):
    if isinstance(value, dict):
        extra = set(value) - {"times", "values"}
        if extra or {"times", "values"} - set(value):
            raise SchemaValidationError(f"{path}: sampled coefficient needs exactly 'times' and 'values'")
        times = _number_list(value["times"], _join(path, "times"))
        values = _number_list(value["values"], _join(path, "values"))
        if len(times) != len(values) or len(times) < 2:
            raise SchemaValidationError(f"{path}: 'times' and 'values' must have the same length >= 2")
        if any(t1 <= t0 for t0, t1 in zip(times, times[1:])):
            raise SchemaValidationError(f"{path}.times: must be strictly increasing")
        return
    _number(value, path)


@dataclass
class CoefficientsConfig(_Block):
    """Running cost a(t)x² + b(t)x + c(t); each entry a number or {times, values}."""
    a: Coefficient = 0.0
    b: Coefficient = 0.0
    c: Coefficient = 0.0

    def validate(self, path: str = ""):
        for name in ("a", "b", "c"):
            _coefficient(getattr(self, name), _join(path, name))


@dataclass
class TerminalConfig(_Block):
    A: float = 0.0
    B: float = 0.0
    C: float = 0.0

    def validate(self, path: str = ""):
        for name in ("A", "B", "C"):
            _number(getattr(self, name), _join(path, name))


@dataclass
class InvestorConfig(_Block):
    r: float
    sigma: float
    q: float
    beta: float
    gamma: float
    mu_bar: float
    anchor: str = "reference"

    def validate(self, path: str = ""):
        _number(self.r, _join(path, "r"))
        _number(self.sigma, _join(path, "sigma"), minimum=0.0, strict=True)
        q = _number(self.q, _join(path, "q"))
        if not q < 1:
            raise SchemaValidationError(f"{_join(path, 'q')}: must be < 1, got {q}")
        _number(self.beta, _join(path, "beta"), minimum=0.0)
        _number(self.gamma, _join(path, "gamma"), minimum=0.0)
        _number(self.mu_bar, _join(path, "mu_bar"))
        if self.anchor not in ("reference", "mean"):
            raise SchemaValidationError(
                f"{_join(path, 'anchor')}: must be 'reference' or 'mean', got {self.anchor!r}"
            )


@dataclass
class InitialConfig(_Block):
    """Initial law: point mass at `mean` when std == 0, Gaussian otherwise."""
    mean: float = 0.0
    std: float = 0.0

    def validate(self, path: str = ""):
        _number(self.mean, _join(path, "mean"))
        _number(self.std, _join(path, "std"), minimum=0.0)


@dataclass
class ProblemConfig(_Block):
    ALIASES: ClassVar[Dict[str, str]] = {"lambda": "lam"}
    NESTED: ClassVar[Dict[str, type]] = {
        "coefficients": CoefficientsConfig,
        "terminal": TerminalConfig,
        "investor": InvestorConfig,
        "initial": InitialConfig,
    }

    horizon: float
    delta: float = 0.0
    lam: float = 0.0
    jump: Optional[Dict[str, Any]] = None
    coefficients: Optional[CoefficientsConfig] = None
    terminal: Optional[TerminalConfig] = None
    investor: Optional[InvestorConfig] = None
    initial: InitialConfig = field(default_factory=InitialConfig)

    def validate(self, path: str = ""):
        horizon = _number(self.horizon, _join(path, "horizon"), minimum=0.0, strict=True)
        _number(self.delta, _join(path, "delta"), minimum=0.0)
        _number(self.lam, _join(path, "lambda"), minimum=0.0)

        # 1. Exactly one problem description
        if (self.coefficients is None) == (self.investor is None):
            raise SchemaValidationError(
                f"{path}: exactly one of 'coefficients' or 'investor' must be present"
            )
        if self.investor is not None and self.terminal is not None:
            raise SchemaValidationError(
                f"{_join(path, 'terminal')}: not allowed with 'investor' (terminal data follows from r, sigma, q)"
            )

        # 2. Jump law
        if self.jump is not None:
            try:
                from_config(self.jump)
            except JumpLawError as e:
                raise SchemaValidationError(f"{_join(path, 'jump')}: {e}")
        elif self.lam > 0:
            raise SchemaValidationError(f"{_join(path, 'jump')}: required when lambda > 0")

        # 3. Sampled coefficients must cover the horizon
        if self.coefficients is not None:
            for name in ("a", "b", "c"):
                value = getattr(self.coefficients, name)
                if isinstance(value, dict):
                    times = value["times"]
                    if times[0] > 1e-12 or times[-1] < horizon * (1 - 1e-12):
                        raise SchemaValidationError(
                            f"{_join(path, 'coefficients.' + name)}.times: must span [0, {horizon:g}]"
                        )


@dataclass
class DensityNumerics(_Block):
    n: int = 1024
    omega_max: float = 32.0
    fd_points: int = 1024
    fd_steps: int = 2000
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    order: int = 2

    def validate(self, path: str = ""):
        n = _integer(self.n, _join(path, "n"), 4)
        if n & (n - 1):
            raise SchemaValidationError(f"{_join(path, 'n')}: must be a power of two, got {n}")
        _number(self.omega_max, _join(path, "omega_max"), minimum=0.0, strict=True)
        _integer(self.fd_points, _join(path, "fd_points"), 8)
        _integer(self.fd_steps, _join(path, "fd_steps"), 1)
        if (self.x_min is None) != (self.x_max is None):
            raise SchemaValidationError(f"{path}: set both 'x_min' and 'x_max' or neither")
        if self.x_min is not None:
            lo = _number(self.x_min, _join(path, "x_min"))
            hi = _number(self.x_max, _join(path, "x_max"))
            if not hi > lo:
                raise SchemaValidationError(f"{_join(path, 'x_max')}: must be > x_min")
        if self.order not in (1, 2):
            raise SchemaValidationError(f"{_join(path, 'order')}: must be 1 or 2, got {self.order!r}")


@dataclass
class MonteCarloNumerics(_Block):
    paths: int = 20000
    steps: int = 2000
    batch_size: int = 4096
    cap: float = 1e6
    seed: int = 0
    workers: int = 1

    def validate(self, path: str = ""):
        _integer(self.paths, _join(path, "paths"), 100)
        _integer(self.steps, _join(path, "steps"), 100)
        _integer(self.batch_size, _join(path, "batch_size"), 1)
        _number(self.cap, _join(path, "cap"), minimum=0.0, strict=True)
        seed = _integer(self.seed, _join(path, "seed"), 0)
        if seed >= 2 ** 64:
            raise SchemaValidationError(f"{_join(path, 'seed')}: must fit in 64 bits")
        _integer(self.workers, _join(path, "workers"), 1)


@dataclass
class Tolerances(_Block):
    """Cross-check tolerances used by `validate`."""
    riccati: float = 1e-6
    expectation: float = 1e-6
    charfn_mean: float = 1e-6
    density_mass: float = 1e-4
    density_moment: float = 1e-3
    density_l1: float = 1e-2
    mc_sigmas: float = 4.0
    mc_bias: float = 5e-4

    def validate(self, path: str = ""):
        for f in fields(self):
            _number(getattr(self, f.name), _join(path, f.name), minimum=0.0, strict=True)


@dataclass
class NumericsConfig(_Block):
    NESTED: ClassVar[Dict[str, type]] = {
        "density": DensityNumerics,
        "montecarlo": MonteCarloNumerics,
        "tolerances": Tolerances,
    }

    riccati_steps: int = 4096
    density: DensityNumerics = field(default_factory=DensityNumerics)
    montecarlo: MonteCarloNumerics = field(default_factory=MonteCarloNumerics)
    tolerances: Tolerances = field(default_factory=Tolerances)

    def validate(self, path: str = ""):
        _integer(self.riccati_steps, _join(path, "riccati_steps"), 16)


@dataclass
class OutputConfig(_Block):
    """
    directory: where CSVs go (overridden by --out).
    times: report/checkpoint times; 11 equally spaced times when empty.
    charfn: also write the characteristic function slices.
    """
    directory: Optional[str] = None
    times: List[float] = field(default_factory=list)
    charfn: bool = False

    def validate(self, path: str = ""):
        if self.directory is not None and not isinstance(self.directory, str):
            raise SchemaValidationError(f"{_join(path, 'directory')}: expected a string")
        _number_list(self.times, _join(path, "times"))
        if not isinstance(self.charfn, bool):
            raise SchemaValidationError(f"{_join(path, 'charfn')}: expected true or false")


@dataclass
class ScenarioConfig(_Block):
    """
    A scenario file: one problem, its numerics and where outputs go.
    """
    NESTED: ClassVar[Dict[str, type]] = {
        "problem": ProblemConfig,
        "numerics": NumericsConfig,
        "output": OutputConfig,
    }

    problem: ProblemConfig
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    description: Optional[str] = None

    def validate(self, path: str = ""):
        horizon = self.problem.horizon
        steps = self.numerics.montecarlo.steps
        for i, t in enumerate(self.output.times):
            where = f"output.times[{i}]"
            if not -1e-12 <= t <= horizon * (1 + 1e-12):
                raise SchemaValidationError(f"{where}: {t} outside [0, {horizon:g}]")
            k = t * steps / horizon
            if abs(k - round(k)) > 1e-6:
                raise SchemaValidationError(
                    f"{where}: {t} is not on the Monte Carlo step grid (dt = {horizon / steps:g})"
                )

    @classmethod
    def from_json_file(cls, path: str) -> "ScenarioConfig":
        try:
            with open(path, "r") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaValidationError(f"Invalid JSON in {path}: {e}")
        return cls.from_dict(data)
