"""
Configuration management for mest.

Supports:
- Programmatic configuration via dataclasses
- YAML file loading
- Environment variable overrides (M_EST_SEED, M_EST_PARALLEL, M_EST_REPS)
- Defaults matching the simulation study design
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional
import os

import yaml

from .exceptions import ConfigurationError
from .solver import SolveOptions

SEED_ENV = "M_EST_SEED"
PARALLEL_ENV = "M_EST_PARALLEL"
REPS_ENV = "M_EST_REPS"

REPORT_FORMATS = ("csv", "markdown")
ERROR_LAWS = ("normal", "t5", "mixture")


@dataclass
class SolverConfig:
    """Settings forwarded to the splitting solver."""

    tol: float = 1e-8
    max_iter: int = 20000
    admm_rho: float = 1.0
    zero_tol: float = 1e-6

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if self.admm_rho <= 0:
            raise ConfigurationError("admm_rho must be positive")
        if self.zero_tol < 0:
            raise ConfigurationError("zero_tol cannot be negative")

    def to_options(self) -> SolveOptions:
        return SolveOptions(
            tol=self.tol,
            max_iter=self.max_iter,
            admm_rho=self.admm_rho,
            zero_tol=self.zero_tol,
        )


@dataclass
class GridConfig:
    """Lambda grid shape."""

    n_points: int = 50
    min_ratio: float = 1e-3

    def __post_init__(self):
        if self.n_points < 1:
            raise ConfigurationError("n_points must be at least 1")
        if not 0.0 < self.min_ratio < 1.0:
            raise ConfigurationError("min_ratio must be in (0, 1)")


@dataclass
class SimulationConfig:
    """Monte Carlo settings."""

    seed: int = 0
    replicates: int = 500
    parallel: int = 1
    rho: float = 0.5
    dist: str = "normal"
    loss: str = "lad"
    standardize: bool = False
    holdout_pe: bool = False
    sn_gamma_power: int = 1  # 2 = sigma^2 / gamma^2 variant

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigurationError("replicates must be at least 1")
        if self.parallel == 0 or self.parallel < -1:
            raise ConfigurationError("parallel must be positive or -1 (all cores)")
        if not abs(self.rho) < 1.0:
            raise ConfigurationError("|rho| must be < 1")
        if self.dist not in ERROR_LAWS:
            raise ConfigurationError(f"dist must be one of {ERROR_LAWS}, got {self.dist!r}")
        if self.sn_gamma_power not in (1, 2):
            raise ConfigurationError("sn_gamma_power must be 1 or 2")


@dataclass
class OutputConfig:
    """Where and how reports are written."""

    format: str = "csv"
    path: Optional[Path] = None  # None = stdout
    dump_dir: Optional[Path] = None

    def __post_init__(self):
        if isinstance(self.path, str):
            self.path = Path(self.path)
        if isinstance(self.dump_dir, str):
            self.dump_dir = Path(self.dump_dir)
        if self.format not in REPORT_FORMATS:
            raise ConfigurationError(f"format must be one of {REPORT_FORMATS}, got {self.format!r}")


@dataclass
class Config:
    """Master configuration.

    Example usage:
        config = Config.default()
        config = Config.from_yaml(Path("study.yaml"))
        config = Config(simulation=SimulationConfig(replicates=100, dist="t5"))
    """

    solver: SolverConfig = field(default_factory=SolverConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @classmethod
    def from_yaml(cls, path: Path) -> "Config":
        """Load configuration from a YAML file.

        Raises:
            ConfigurationError: If the file is missing, invalid or has unknown keys
        """
        path = Path(path)
        if not path.exists():
            raise ConfigurationError(f"Config file not found: {path}")

        try:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in {path}: {e}")

        if not isinstance(data, dict):
            raise ConfigurationError(f"Config file {path} must contain a mapping")
        return cls._from_dict(data)

    @classmethod
    def _from_dict(cls, data: Dict[str, Any]) -> "Config":
        try:
            return cls(
                solver=SolverConfig(**data.get("solver", {})),
                grid=GridConfig(**data.get("grid", {})),
                simulation=SimulationConfig(**data.get("simulation", {})),
                output=OutputConfig(**data.get("output", {})),
            )
        except TypeError as e:
            raise ConfigurationError(f"Unknown config key: {e}")

    @classmethod
    def default(cls) -> "Config":
        return cls()

    @classmethod
    def from_env(cls, base: Optional["Config"] = None) -> "Config":
        """Apply environment variable overrides.

        Supported environment variables:
        - M_EST_SEED: Master seed
        - M_EST_PARALLEL: Worker count
        - M_EST_REPS: Replicates per scenario
        """
        config = base or cls.default()

        try:
            if parallel := os.environ.get(PARALLEL_ENV):
                config.simulation.parallel = int(parallel)
            if reps := os.environ.get(REPS_ENV):
                config.simulation.replicates = int(reps)
        except ValueError as e:
            raise ConfigurationError(f"Invalid environment override: {e}")
        config.simulation.__post_init__()

        return config.apply_seed_env()

    def apply_seed_env(self) -> "Config":
        """M_EST_SEED, when set, replaces the configured seed."""
        if seed := os.environ.get(SEED_ENV):
            try:
                self.simulation.seed = int(seed, 0)
            except ValueError:
                raise ConfigurationError(f"{SEED_ENV} must be an integer, got {seed!r}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        """Convert config to dictionary (for serialization)."""
        return {
            "solver": {
                "tol": self.solver.tol,
                "max_iter": self.solver.max_iter,
                "admm_rho": self.solver.admm_rho,
                "zero_tol": self.solver.zero_tol,
            },
            "grid": {
                "n_points": self.grid.n_points,
                "min_ratio": self.grid.min_ratio,
            },
            "simulation": {
                "seed": self.simulation.seed,
                "replicates": self.simulation.replicates,
                "parallel": self.simulation.parallel,
                "rho": self.simulation.rho,
                "dist": self.simulation.dist,
                "loss": self.simulation.loss,
                "standardize": self.simulation.standardize,
                "holdout_pe": self.simulation.holdout_pe,
                "sn_gamma_power": self.simulation.sn_gamma_power,
            },
            "output": {
                "format": self.output.format,
                "path": str(self.output.path) if self.output.path else None,
                "dump_dir": str(self.output.dump_dir) if self.output.dump_dir else None,
            },
        }

    def to_yaml(self) -> str:
        """Serialize config to YAML string."""
        return yaml.dump(self.to_dict(), default_flow_style=False)
