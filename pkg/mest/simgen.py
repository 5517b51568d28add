"""
Synthetic data for the simulation study.

Model: y = X beta0 + eps with
- rows of X i.i.d. N(0, Sigma), Sigma_ij = rho^|i-j| (AR(1))
- beta0 = (beta_nonzero, 0, ..., 0), nonzeros in the first k coordinates
- eps i.i.d. N(0,1), t_5 or 0.9 N(0,1) + 0.1 N(0,9)

Seeding: every replicate gets its own substream
    replicate_seed = seed XOR splitmix64(replicate_index)
so replicates are independent, individually reproducible and identical
under any parallel schedule. Design and errors use separate streams
derived from the replicate seed with splitmix64.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple
import logging
import math

import numpy as np
from scipy import stats

from .exceptions import ScenarioError
from .solver import Dataset

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
ERROR_STREAM_SALT = 0x6572726F72735F31  # "errors_1"
HOLDOUT_STREAM_SALT = 0x686F6C646F75745F  # "holdout_"

DEFAULT_BETA_NONZERO = (-2.0, 2.5, 3.0, -1.0)


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer: a fixed, platform-independent 64-bit mix."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def substream_seed(seed: int, replicate_index: int) -> int:
    """seed XOR splitmix64(replicate_index), as an unsigned 64-bit integer."""
    return (int(seed) & MASK64) ^ splitmix64(int(replicate_index))


def derive_seed(seed: int, salt: int) -> int:
    return splitmix64((int(seed) ^ salt) & MASK64)


class ErrorKind(Enum):
    """Error laws."""

    STD_NORMAL = "normal"
    STUDENT_T5 = "t5"
    NORMAL_MIXTURE = "mixture"


@dataclass(frozen=True)
class ErrorDist:
    """Error distribution.

    The mixture is fixed at 0.9 N(0,1) + 0.1 N(0,9).
    """

    kind: ErrorKind = ErrorKind.STD_NORMAL

    T_DF = 5
    MIX_WEIGHT = 0.1
    MIX_SCALE = 3.0

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", ErrorDist.from_name(self.kind).kind)

    @classmethod
    def from_name(cls, name: str) -> "ErrorDist":
        try:
            return cls(ErrorKind(name.strip().lower()))
        except ValueError:
            valid = [k.value for k in ErrorKind]
            raise ScenarioError(f"Unknown error distribution '{name}'. Must be one of: {valid}")

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def variance(self) -> float:
        if self.kind == ErrorKind.STUDENT_T5:
            return self.T_DF / (self.T_DF - 2.0)
        if self.kind == ErrorKind.NORMAL_MIXTURE:
            return (1.0 - self.MIX_WEIGHT) + self.MIX_WEIGHT * self.MIX_SCALE ** 2
        return 1.0

    def pdf(self, x):
        if self.kind == ErrorKind.STUDENT_T5:
            return stats.t.pdf(x, self.T_DF)
        if self.kind == ErrorKind.NORMAL_MIXTURE:
            return (1.0 - self.MIX_WEIGHT) * stats.norm.pdf(x) + self.MIX_WEIGHT * stats.norm.pdf(
                x, scale=self.MIX_SCALE
            )
        return stats.norm.pdf(x)

    def cdf(self, x):
        if self.kind == ErrorKind.STUDENT_T5:
            return stats.t.cdf(x, self.T_DF)
        if self.kind == ErrorKind.NORMAL_MIXTURE:
            return (1.0 - self.MIX_WEIGHT) * stats.norm.cdf(x) + self.MIX_WEIGHT * stats.norm.cdf(
                x, scale=self.MIX_SCALE
            )
        return stats.norm.cdf(x)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exact draws: t_5 as Z / sqrt(chi2_5 / 5), mixture by component pick."""
        if self.kind == ErrorKind.STUDENT_T5:
            z = rng.standard_normal(size)
            chi2 = rng.chisquare(self.T_DF, size)
            return z / np.sqrt(chi2 / self.T_DF)
        if self.kind == ErrorKind.NORMAL_MIXTURE:
            wide = rng.random(size) < self.MIX_WEIGHT
            z = rng.standard_normal(size)
            return np.where(wide, self.MIX_SCALE * z, z)
        return rng.standard_normal(size)


def dimension_for(n: int) -> int:
    """p = [2 sqrt(n)] with round-half-up: 200 -> 28, 500 -> 45, 700 -> 53."""
    return int(math.floor(2.0 * math.sqrt(n) + 0.5))


@dataclass
class ScenarioConfig:
    """One simulation scenario.

    Attributes:
        n: Sample size
        p: Dimension (default [2 sqrt(n)])
        rho: AR(1) correlation of the design
        beta_nonzero: Nonzero block of beta0 (first k coordinates)
        dist: Error law
        seed: Master seed
        replicates: Number of Monte Carlo replicates
        noise_free: Force eps = 0 (y = X beta0 exactly)
    """

    n: int
    p: Optional[int] = None
    rho: float = 0.5
    beta_nonzero: Tuple[float, ...] = DEFAULT_BETA_NONZERO
    dist: ErrorDist = field(default_factory=ErrorDist)
    seed: int = 0
    replicates: int = 500
    noise_free: bool = False

    def __post_init__(self):
        if isinstance(self.dist, str):
            self.dist = ErrorDist.from_name(self.dist)
        self.beta_nonzero = tuple(float(b) for b in self.beta_nonzero)
        if any(b == 0.0 for b in self.beta_nonzero):
            raise ScenarioError(f"beta_nonzero entries must be nonzero, got {self.beta_nonzero}")
        if self.n < 1:
            raise ScenarioError(f"n must be at least 1, got {self.n}")
        if self.p is None:
            self.p = dimension_for(self.n)
        if self.p < len(self.beta_nonzero):
            raise ScenarioError(f"p={self.p} smaller than k={len(self.beta_nonzero)}")
        if not abs(self.rho) < 1.0:
            raise ScenarioError(f"|rho| must be < 1, got {self.rho}")
        if self.replicates < 0:
            raise ScenarioError("replicates cannot be negative")

    @property
    def k(self) -> int:
        return len(self.beta_nonzero)

    @property
    def m(self) -> int:
        """Number of zero coefficients, p - k."""
        return self.p - self.k

    @property
    def scenario_id(self) -> str:
        return f"{self.dist.name}-n{self.n}"

    @property
    def beta0(self) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[: self.k] = self.beta_nonzero
        return beta

    @property
    def support(self) -> List[int]:
        return [j for j, b in enumerate(self.beta_nonzero) if b != 0.0]


class SimulatedReplicate(NamedTuple):
    """A generated replicate; unpacks as (data, beta0, support)."""

    data: Dataset
    beta0: np.ndarray
    support: List[int]


def ar1_covariance(p: int, rho: float) -> np.ndarray:
    """Sigma_ij = rho^|i-j|."""
    if not abs(rho) < 1.0:
        raise ScenarioError(f"|rho| must be < 1, got {rho}")
    idx = np.arange(p)
    return float(rho) ** np.abs(idx[:, None] - idx[None, :])


def gen_design(n: int, p: int, rho: float, seed: int) -> np.ndarray:
    """Rows i.i.d. N(0, Sigma) via the lower Cholesky factor of Sigma."""
    sigma = ar1_covariance(p, rho)
    chol = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)) @ chol.T


def gen_errors(n: int, dist: ErrorDist, seed: int) -> np.ndarray:
    """n i.i.d. draws from dist."""
    return dist.sample(np.random.default_rng(seed), n)


def gen_dataset(
    config: ScenarioConfig, replicate_index: int, holdout: bool = False
) -> SimulatedReplicate:
    """Generate one replicate.

    Args:
        config: Scenario
        replicate_index: Replicate number
        holdout: Draw an independent sample from the same law (fresh-holdout PE)

    Returns:
        SimulatedReplicate(data, beta0, support)
    """
    seed = substream_seed(config.seed, replicate_index)
    if holdout:
        seed = derive_seed(seed, HOLDOUT_STREAM_SALT)

    X = gen_design(config.n, config.p, config.rho, seed)
    beta0 = config.beta0
    y = X @ beta0
    if not config.noise_free:
        y = y + gen_errors(config.n, config.dist, derive_seed(seed, ERROR_STREAM_SALT))
    return SimulatedReplicate(data=Dataset(X, y), beta0=beta0, support=config.support)


def dump_dataset(data: Dataset, path: Path) -> Path:
    """Write x1..xp,y as CSV."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join([f"x{j + 1}" for j in range(data.p)] + ["y"])
    np.savetxt(path, np.column_stack([data.X, data.y]), delimiter=",", header=header, comments="")
    logger.debug(f"wrote {path}")
    return path
