"""
Evaluation metrics for the simulation study.

Per replicate:
- EE: ||beta_hat - beta0||_2
- PE: n^-1 ||y - X beta_hat||^2 (in-sample)
- C / IC: correctly / incorrectly zeroed coefficients

Aggregated over replicates: median EE and PE, mean C and IC, and
CP = mean C / (p - k).
"""

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .exceptions import SpecError
from .solver import Dataset

DEFAULT_ZERO_TOL = 1e-6


@dataclass(frozen=True)
class ReplicateRecord:
    """Metrics of one estimate on one replicate."""

    ee: float
    pe: float
    c: int
    ic: int

    def __post_init__(self):
        if self.ee < 0 or self.pe < 0:
            raise SpecError("EE and PE must be nonnegative")
        if self.c < 0 or self.ic < 0:
            raise SpecError("C and IC must be nonnegative")


@dataclass(frozen=True)
class MetricsSummary:
    """Aggregated metrics; cp = c_mean / (p - k)."""

    ee_median: float
    pe_median: float
    c_mean: float
    ic_mean: float
    cp: float


def estimation_error(beta_hat: Sequence[float], beta0: Sequence[float]) -> float:
    beta_hat = np.asarray(beta_hat, dtype=float)
    beta0 = np.asarray(beta0, dtype=float)
    if beta_hat.shape != beta0.shape:
        raise SpecError(f"length mismatch: {beta_hat.shape} vs {beta0.shape}")
    return float(np.linalg.norm(beta_hat - beta0))


def prediction_error(data: Dataset, beta_hat: Sequence[float]) -> float:
    beta_hat = np.asarray(beta_hat, dtype=float)
    if beta_hat.size != data.p:
        raise SpecError(f"expected {data.p} coefficients, got {beta_hat.size}")
    r = data.y - data.X @ beta_hat
    return float(np.dot(r, r) / data.n)


def selection_counts(
    beta_hat: Sequence[float], support: Iterable[int], zero_tol: float = DEFAULT_ZERO_TOL
) -> Tuple[int, int]:
    """(C, IC): zeroed true zeros and zeroed true nonzeros."""
    beta_hat = np.asarray(beta_hat, dtype=float)
    truth = np.zeros(beta_hat.size, dtype=bool)
    truth[list(support)] = True
    zeroed = np.abs(beta_hat) <= zero_tol
    return int(np.sum(zeroed & ~truth)), int(np.sum(zeroed & truth))


def aggregate(records: Sequence[ReplicateRecord], p: int, k: int) -> MetricsSummary:
    """Combine replicate records.

    Raises:
        SpecError: If records is empty
    """
    records: List[ReplicateRecord] = list(records)
    if not records:
        raise SpecError("cannot aggregate an empty record list")
    c_mean = float(np.mean([r.c for r in records]))
    m = p - k
    return MetricsSummary(
        ee_median=float(np.median([r.ee for r in records])),
        pe_median=float(np.median([r.pe for r in records])),
        c_mean=c_mean,
        ic_mean=float(np.mean([r.ic for r in records])),
        cp=c_mean / m if m > 0 else 1.0,
    )
