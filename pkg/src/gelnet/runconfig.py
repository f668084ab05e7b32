"""JSON run configuration shared by the ``generate``, ``fit`` and ``bench`` commands.

A config file is a JSON object with the sections ``data``, ``penalty``,
``solver``, ``bench`` and ``output`` plus a top-level ``seed``. Every level
rejects unknown keys, and ``RunConfig.from_dict(cfg.to_dict()) == cfg``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from .admm import AdmmOptions
from .data import SyntheticConfig, fixed_design_beta
from .driver import SolverOptions
from .exceptions import ConfigurationError
from .penalty import PenaltySpec
from .pmm_ssn import PmmOptions

SCHEMA_VERSION = 1
DATA_KINDS = ("synthetic", "libsvm", "csv")

# keys a bench cell may override
SYNTHETIC_KEYS = ("n", "p", "kappa", "K", "R", "noise_kind", "alpha", "positive_only", "beta")
PENALTY_KEYS = ("r", "q", "lambda1", "lambda2", "epsilon")
SOLVER_KEYS = ("mu", "sigma")
CELL_KEYS = ("label",) + SYNTHETIC_KEYS + PENALTY_KEYS + SOLVER_KEYS


def _check_keys(d, allowed, where: str) -> None:
    if not isinstance(d, dict):
        raise ConfigurationError(f"{where}: expected an object, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _field_names(cls) -> List[str]:
    return [f.name for f in fields(cls)]


@dataclass
class DataConfig:
    """Where the data comes from.

    ``synthetic`` holds :class:`SyntheticConfig` fields except ``seed`` (the
    run seed is used); ``beta`` may be ``"fixed"`` for the ten-sparse fixed
    design. ``degree > 1`` expands file data into all monomials up to that
    degree, plus a constant column when ``include_bias`` is set (centering
    with ``standardize`` turns that column into zeros). ``path`` points at
    a LIBSVM file (``kind="libsvm"``) or a directory written by ``generate``
    (``kind="csv"``).
    """

    kind: str = "synthetic"
    synthetic: Dict[str, Any] = field(default_factory=dict)
    path: Optional[str] = None
    degree: int = 1
    include_bias: bool = False
    standardize: bool = False
    n_features: Optional[int] = None

    def __post_init__(self):
        if self.kind not in DATA_KINDS:
            raise ConfigurationError(f"data.kind must be one of {DATA_KINDS}, got {self.kind!r}")
        _check_keys(self.synthetic, SYNTHETIC_KEYS, "data.synthetic")
        if self.kind != "synthetic" and not self.path:
            raise ConfigurationError(f"data.path is required for kind={self.kind!r}")
        if self.degree < 1:
            raise ConfigurationError(f"data.degree must be >= 1, got {self.degree}")

    def synthetic_config(self, seed: int, overrides: Optional[dict] = None) -> SyntheticConfig:
        params = dict(self.synthetic)
        params.update({k: v for k, v in (overrides or {}).items() if k in SYNTHETIC_KEYS})
        if isinstance(params.get("beta"), str):
            if params["beta"] != "fixed":
                raise ConfigurationError(f"data.synthetic.beta: unknown preset {params['beta']!r}")
            params["beta"] = fixed_design_beta(params.get("p", SyntheticConfig.p))
        return SyntheticConfig(seed=int(seed), **params)


@dataclass
class PenaltyConfig:
    r: str = "2"
    q: float = 0.5
    lambda1: float = 0.2
    lambda2: float = 1e-4
    epsilon: Optional[float] = None

    def __post_init__(self):
        self.r = str(self.r)
        self.spec()

    def spec(self, overrides: Optional[dict] = None) -> PenaltySpec:
        params = asdict(self)
        params.update({k: v for k, v in (overrides or {}).items() if k in PENALTY_KEYS})
        return PenaltySpec(**params)


@dataclass
class BenchConfig:
    """Repeated-trial protocol.

    ``cells`` is a list of override objects (keys from :data:`CELL_KEYS`);
    ``sweep`` maps override keys to value lists whose Cartesian product is
    applied on top of every cell.
    """

    trials: int = 50
    solvers: List[str] = field(default_factory=lambda: ["pmm_ssn", "admm"])
    cells: List[Dict[str, Any]] = field(default_factory=lambda: [{}])
    sweep: Dict[str, List[Any]] = field(default_factory=dict)
    workers: int = 1
    timing: bool = True

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigurationError(f"bench.trials must be >= 1, got {self.trials}")
        if self.workers < 1:
            raise ConfigurationError(f"bench.workers must be >= 1, got {self.workers}")
        for s in self.solvers:
            if s not in ("pmm_ssn", "admm"):
                raise ConfigurationError(f"bench.solvers: unknown solver {s!r}")
        if not self.cells:
            raise ConfigurationError("bench.cells must not be empty")
        for i, cell in enumerate(self.cells):
            _check_keys(cell, CELL_KEYS, f"bench.cells[{i}]")
        _check_keys(self.sweep, CELL_KEYS[1:], "bench.sweep")
        for k, v in self.sweep.items():
            if not isinstance(v, list) or not v:
                raise ConfigurationError(f"bench.sweep.{k} must be a non-empty list")


@dataclass
class OutputConfig:
    """Output locations; relative paths resolve against ``dir``."""

    dir: Optional[str] = None
    csv: str = "bench.csv"
    json: str = "fit.json"
    trials_csv: Optional[str] = None


def _solver_to_dict(opts: SolverOptions) -> dict:
    return asdict(opts)


def _solver_from_dict(d: dict) -> SolverOptions:
    _check_keys(d, _field_names(SolverOptions), "solver")
    d = dict(d)
    admm = d.pop("admm", {})
    pmm = d.pop("pmm_ssn", {})
    _check_keys(admm, _field_names(AdmmOptions), "solver.admm")
    _check_keys(pmm, _field_names(PmmOptions), "solver.pmm_ssn")
    return SolverOptions(admm=AdmmOptions(**admm), pmm_ssn=PmmOptions(**pmm), **d)


@dataclass
class RunConfig:
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    solver: SolverOptions = field(default_factory=SolverOptions)
    bench: BenchConfig = field(default_factory=BenchConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "seed": self.seed,
            "data": asdict(self.data),
            "penalty": asdict(self.penalty),
            "solver": _solver_to_dict(self.solver),
            "bench": asdict(self.bench),
            "output": asdict(self.output),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        _check_keys(d, ("schema_version", "seed", "data", "penalty", "solver", "bench", "output"),
                    "config")
        version = d.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigurationError(f"unsupported schema_version {version}")
        sections = {}
        for name, sub in (("data", DataConfig), ("penalty", PenaltyConfig),
                          ("bench", BenchConfig), ("output", OutputConfig)):
            raw = d.get(name, {})
            _check_keys(raw, _field_names(sub), name)
            sections[name] = sub(**raw)
        solver = _solver_from_dict(d.get("solver", {}))
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigurationError(f"seed must be a nonnegative integer, got {seed!r}")
        return cls(seed=seed, solver=solver, schema_version=version, **sections)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    def with_overrides(self, **sections) -> "RunConfig":
        return replace(self, **sections)
