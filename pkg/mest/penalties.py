"""
SCAD penalty and per-coefficient L1 weights.

The LLA step replaces the SCAD penalty by its tangent at a pilot
estimate: w_j = p'_lambda(|pilot_j|). Lasso uses the constant w_j = lambda.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .exceptions import SpecError

DEFAULT_SCAD_A = 3.7


@dataclass(frozen=True)
class ScadParams:
    """SCAD tuning parameter lambda and shape a (> 2)."""

    lam: float
    a: float = DEFAULT_SCAD_A

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise SpecError(f"SCAD lambda must be finite and nonnegative, got {self.lam}")
        if not self.a > 2.0:
            raise SpecError(f"SCAD a must exceed 2, got {self.a}")


@dataclass(frozen=True)
class PenaltyWeights:
    """Nonnegative finite L1 weights, one per coefficient."""

    w: np.ndarray

    def __post_init__(self):
        w = np.array(self.w, dtype=float).reshape(-1)
        if w.size == 0:
            raise SpecError("penalty weights cannot be empty")
        if not np.all(np.isfinite(w)):
            raise SpecError("penalty weights must be finite")
        if np.any(w < 0.0):
            raise SpecError("penalty weights must be nonnegative")
        w.flags.writeable = False
        object.__setattr__(self, "w", w)

    def __len__(self) -> int:
        return self.w.size

    @classmethod
    def zeros(cls, p: int) -> "PenaltyWeights":
        return cls(np.zeros(p))


def scad_value(params: ScadParams, beta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """SCAD penalty p_lambda(|beta|).

    Branches: lambda|b| on [0, lambda], the quadratic blend on
    (lambda, a*lambda] and the constant (a+1)lambda^2/2 beyond.
    """
    lam, a = params.lam, params.a
    b = np.abs(np.asarray(beta, dtype=float))
    out = np.where(
        b <= lam,
        lam * b,
        np.where(
            b <= a * lam,
            -(b * b - 2.0 * a * lam * b + lam * lam) / (2.0 * (a - 1.0)),
            (a + 1.0) * lam * lam / 2.0,
        ),
    )
    return float(out) if np.ndim(beta) == 0 else out


def scad_derivative(
    params: ScadParams, beta_abs: Union[float, np.ndarray]
) -> Union[float, np.ndarray]:
    """p'_lambda(|b|) = lambda I(|b| <= lambda)
    + (a*lambda - |b|)/(a-1) I(lambda < |b| <= a*lambda)."""
    lam, a = params.lam, params.a
    b = np.asarray(beta_abs, dtype=float)
    if np.any(b < 0.0):
        raise SpecError("scad_derivative expects |beta| >= 0")
    out = np.where(
        b <= lam,
        lam,
        np.where(b <= a * lam, (a * lam - b) / (a - 1.0), 0.0),
    )
    return float(out) if np.ndim(beta_abs) == 0 else out


def lla_weights(params: ScadParams, pilot: Sequence[float]) -> PenaltyWeights:
    """LLA weights from a pilot estimate.

    Raises:
        SpecError: If the pilot contains NaN or inf
    """
    pilot = np.asarray(pilot, dtype=float).reshape(-1)
    if not np.all(np.isfinite(pilot)):
        raise SpecError("pilot estimate contains non-finite entries")
    return PenaltyWeights(np.atleast_1d(scad_derivative(params, np.abs(pilot))))


def lasso_weights(lam: float, p: int) -> PenaltyWeights:
    """Uniform weights w_j = lambda."""
    if p < 1:
        raise SpecError(f"lasso_weights needs p >= 1, got {p}")
    if not np.isfinite(lam) or lam < 0.0:
        raise SpecError(f"lasso lambda must be finite and nonnegative, got {lam}")
    return PenaltyWeights(np.full(p, float(lam)))
