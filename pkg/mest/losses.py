"""
Convex loss family for M-estimation.

Supports LAD, quantile (check), Huber, Lq and least-squares losses:
- loss_value: rho(r)
- loss_subgradient: the interval [phi_-(r), phi_+(r)]
- loss_prox: argmin_z t*rho(z) + (z - v)^2 / 2
- gamma_sigma2: the population constants gamma and sigma^2 of an error law

All functions accept scalars or numpy arrays and are vectorized.
"""

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, NamedTuple, Optional, Union
import logging
import math

import numpy as np
from scipy import integrate

from .exceptions import MomentConditionError, SolverError, SpecError

if TYPE_CHECKING:
    from .simgen import ErrorDist

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

PROX_NEWTON_TOL = 1e-12
PROX_NEWTON_MAX_ITER = 200
MEAN_SCORE_QUAD_TOL = 1e-8


class LossKind(Enum):
    """Loss families."""

    LAD = "lad"
    QUANTILE = "quantile"
    HUBER = "huber"
    LQ = "lq"
    LEAST_SQUARES = "ls"


@dataclass(frozen=True)
class LossSpec:
    """A loss function with its parameters.

    Attributes:
        kind: Loss family
        alpha: Quantile level in (0, 1) (QUANTILE only)
        c: Huber threshold > 0 (HUBER only)
        q: Exponent in [1, 2] (LQ only); rho(r) = |r|^q / q

    Example:
        LossSpec.huber(1.345)
        LossSpec.parse("quantile:0.3")
    """

    kind: LossKind
    alpha: Optional[float] = None
    c: Optional[float] = None
    q: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            try:
                object.__setattr__(self, "kind", LossKind(self.kind))
            except ValueError:
                valid = [k.value for k in LossKind]
                raise SpecError(f"Invalid loss kind '{self.kind}'. Must be one of: {valid}")

        required = {
            LossKind.QUANTILE: "alpha",
            LossKind.HUBER: "c",
            LossKind.LQ: "q",
        }.get(self.kind)
        for name in ("alpha", "c", "q"):
            value = getattr(self, name)
            if name == required and value is None:
                raise SpecError(f"{self.kind.value} loss requires parameter '{name}'")
            if name != required and value is not None:
                raise SpecError(f"{self.kind.value} loss does not take parameter '{name}'")

        if self.kind == LossKind.QUANTILE and not 0.0 < self.alpha < 1.0:
            raise SpecError(f"quantile alpha must be in (0, 1), got {self.alpha}")
        if self.kind == LossKind.HUBER and not self.c > 0.0:
            raise SpecError(f"huber c must be positive, got {self.c}")
        if self.kind == LossKind.LQ and not 1.0 <= self.q <= 2.0:
            raise SpecError(f"lq q must be in [1, 2], got {self.q}")

    @classmethod
    def lad(cls) -> "LossSpec":
        return cls(LossKind.LAD)

    @classmethod
    def least_squares(cls) -> "LossSpec":
        return cls(LossKind.LEAST_SQUARES)

    @classmethod
    def quantile(cls, alpha: float) -> "LossSpec":
        return cls(LossKind.QUANTILE, alpha=float(alpha))

    @classmethod
    def huber(cls, c: float) -> "LossSpec":
        return cls(LossKind.HUBER, c=float(c))

    @classmethod
    def lq(cls, q: float) -> "LossSpec":
        return cls(LossKind.LQ, q=float(q))

    @classmethod
    def parse(cls, text: str) -> "LossSpec":
        """Parse the CLI form: lad, ls, huber:C, quantile:A, lq:Q."""
        name, _, arg = text.strip().lower().partition(":")
        try:
            if name == "lad":
                return cls.lad()
            if name in ("ls", "ols"):
                return cls.least_squares()
            if name == "huber":
                return cls.huber(float(arg))
            if name == "quantile":
                return cls.quantile(float(arg))
            if name == "lq":
                return cls.lq(float(arg))
        except ValueError:
            raise SpecError(f"Invalid loss parameter in '{text}'")
        raise SpecError(f"Unknown loss '{text}'. Use lad, ls, huber:C, quantile:A or lq:Q")

    @property
    def label(self) -> str:
        """Inverse of parse()."""
        if self.kind == LossKind.QUANTILE:
            return f"quantile:{self.alpha:g}"
        if self.kind == LossKind.HUBER:
            return f"huber:{self.c:g}"
        if self.kind == LossKind.LQ:
            return f"lq:{self.q:g}"
        return self.kind.value

    @property
    def effective_kind(self) -> LossKind:
        """Lq with q=1 behaves as LAD and q=2 as least squares."""
        if self.kind == LossKind.LQ:
            if self.q == 1.0:
                return LossKind.LAD
            if self.q == 2.0:
                return LossKind.LEAST_SQUARES
        return self.kind

    @property
    def is_piecewise_linear(self) -> bool:
        """True when rho is piecewise linear with a kink at 0."""
        return self.effective_kind in (LossKind.LAD, LossKind.QUANTILE)


@dataclass(frozen=True)
class SubgradientInterval:
    """The subdifferential [phi_-(r), phi_+(r)] of rho at r.

    lo and hi are scalars or arrays of matching shape.
    """

    lo: ArrayLike
    hi: ArrayLike

    def __post_init__(self):
        if np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise SpecError("subgradient interval has lo > hi")

    @property
    def midpoint(self) -> ArrayLike:
        return (np.asarray(self.lo) + np.asarray(self.hi)) / 2.0

    def distance(self, value: ArrayLike) -> ArrayLike:
        """Distance from value to the interval (0 inside)."""
        value = np.asarray(value, dtype=float)
        return np.maximum(np.maximum(np.asarray(self.lo) - value, value - np.asarray(self.hi)), 0.0)


def _as_float_array(r: ArrayLike) -> np.ndarray:
    return np.asarray(r, dtype=float)


def _unwrap(out: np.ndarray, like: ArrayLike) -> ArrayLike:
    if np.ndim(like) == 0:
        return float(out)
    return out


def loss_value(spec: LossSpec, r: ArrayLike) -> ArrayLike:
    """Evaluate rho(r)."""
    x = _as_float_array(r)
    kind = spec.effective_kind
    if kind == LossKind.LAD:
        out = np.abs(x)
    elif kind == LossKind.QUANTILE:
        out = spec.alpha * np.maximum(x, 0.0) + (1.0 - spec.alpha) * np.maximum(-x, 0.0)
    elif kind == LossKind.HUBER:
        ax = np.abs(x)
        out = np.where(ax <= spec.c, 0.5 * x * x, spec.c * ax - 0.5 * spec.c ** 2)
    elif kind == LossKind.LEAST_SQUARES:
        out = 0.5 * x * x
    else:
        out = np.abs(x) ** spec.q / spec.q
    return _unwrap(out, r)


def loss_subgradient(spec: LossSpec, r: ArrayLike) -> SubgradientInterval:
    """Left and right derivatives of rho at r."""
    x = _as_float_array(r)
    kind = spec.effective_kind
    if kind == LossKind.LAD:
        sign = np.sign(x)
        lo = np.where(x == 0.0, -1.0, sign)
        hi = np.where(x == 0.0, 1.0, sign)
    elif kind == LossKind.QUANTILE:
        a = spec.alpha
        lo = np.where(x > 0.0, a, a - 1.0)
        hi = np.where(x < 0.0, a - 1.0, a)
    else:
        lo = hi = _smooth_score(spec, x)
    return SubgradientInterval(lo=_unwrap(lo, r), hi=_unwrap(hi, r))


def _smooth_score(spec: LossSpec, x: np.ndarray) -> np.ndarray:
    kind = spec.effective_kind
    if kind == LossKind.HUBER:
        return np.clip(x, -spec.c, spec.c)
    if kind == LossKind.LEAST_SQUARES:
        return x.copy()
    return np.sign(x) * np.abs(x) ** (spec.q - 1.0)


def loss_score(spec: LossSpec, r: ArrayLike) -> ArrayLike:
    """Representative subgradient: the midpoint of the interval."""
    return loss_subgradient(spec, r).midpoint


def loss_curvature(spec: LossSpec, r: ArrayLike, cap: float = 1e8) -> np.ndarray:
    """Generalized second derivative of a differentiable rho.

    Used by Newton steps; piecewise-linear losses have zero curvature.
    """
    x = _as_float_array(r)
    kind = spec.effective_kind
    if kind == LossKind.HUBER:
        return (np.abs(x) <= spec.c).astype(float)
    if kind == LossKind.LEAST_SQUARES:
        return np.ones_like(x)
    if kind == LossKind.LQ:
        with np.errstate(divide="ignore"):
            curv = (spec.q - 1.0) * np.abs(x) ** (spec.q - 2.0)
        return np.minimum(curv, cap)
    return np.zeros_like(x)


def loss_prox(spec: LossSpec, v: ArrayLike, t: float) -> ArrayLike:
    """Proximal operator argmin_z { t*rho(z) + (z - v)^2 / 2 }.

    Args:
        spec: Loss
        v: Point(s) to evaluate at
        t: Positive step

    Returns:
        The minimizer, same shape as v
    """
    if not t > 0.0:
        raise SpecError(f"prox step t must be positive, got {t}")
    x = _as_float_array(v)
    kind = spec.effective_kind
    if kind == LossKind.LAD:
        out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    elif kind == LossKind.QUANTILE:
        upper = t * spec.alpha
        lower = -t * (1.0 - spec.alpha)
        out = np.where(x > upper, x - upper, np.where(x < lower, x - lower, 0.0))
    elif kind == LossKind.HUBER:
        out = np.where(np.abs(x) <= spec.c * (1.0 + t), x / (1.0 + t), x - t * spec.c * np.sign(x))
    elif kind == LossKind.LEAST_SQUARES:
        out = x / (1.0 + t)
    else:
        out = _lq_prox(x, t, spec.q)
    return _unwrap(out, v)


def _lq_prox(v: np.ndarray, t: float, q: float) -> np.ndarray:
    """Solve t*s^(q-1) + s = |v| for s in [0, |v|], Newton with bisection fallback."""
    a = np.abs(np.atleast_1d(v)).astype(float)
    lo = np.zeros_like(a)
    hi = a.copy()
    s = a / (1.0 + t)
    tol = PROX_NEWTON_TOL * np.maximum(1.0, a)
    done = a == 0.0
    s[done] = 0.0

    for _ in range(PROX_NEWTON_MAX_ITER):
        active = ~done
        if not active.any():
            break
        sa = s[active]
        g = t * sa ** (q - 1.0) + sa - a[active]
        conv = np.abs(g) <= tol[active]
        idx = np.flatnonzero(active)
        done[idx[conv]] = True

        # shrink the bracket
        lo_a = np.where(g < 0.0, sa, lo[active])
        hi_a = np.where(g > 0.0, sa, hi[active])
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = t * (q - 1.0) * sa ** (q - 2.0) + 1.0
            newton = sa - g / dg
        inside = np.isfinite(newton) & (newton > lo_a) & (newton < hi_a)
        step = np.where(inside, newton, 0.5 * (lo_a + hi_a))
        lo[active], hi[active] = lo_a, hi_a
        s[idx[~conv]] = step[~conv]
    else:
        if not done.all():
            raise SolverError("Lq prox Newton/bisection did not converge")

    out = np.sign(np.atleast_1d(v)) * s
    return out.reshape(np.shape(v))


# ---------------------------------------------------------------------------
# Population constants
# ---------------------------------------------------------------------------


class MomentPair(NamedTuple):
    """Slope gamma of G(t) = E[phi(eps + t)] at 0 and sigma^2 = E[phi(eps)^2]."""

    gamma: float
    sigma2: float


def gamma_sigma2(
    spec: LossSpec,
    dist: "ErrorDist",
    method: str = "auto",
    draws: int = 1_000_000,
    h: float = 1e-3,
    seed: int = 0,
) -> MomentPair:
    """Compute gamma and sigma^2 for a loss under an error law.

    Args:
        spec: Loss
        dist: Error distribution (needs pdf/cdf/sample)
        method: "quadrature" (closed forms by numerical integration),
            "monte_carlo" (draws + central difference) or "auto" (quadrature)
        draws: Monte Carlo sample size
        h: Central-difference step for gamma
        seed: Monte Carlo seed

    Returns:
        MomentPair(gamma, sigma2)

    Raises:
        MomentConditionError: If E[phi(eps)] != 0 beyond tolerance
    """
    if method in ("auto", "quadrature"):
        return _moments_by_quadrature(spec, dist)
    if method == "monte_carlo":
        return _moments_by_monte_carlo(spec, dist, draws, h, seed)
    raise SpecError(f"Unknown gamma_sigma2 method '{method}'")


def _expect(func, dist: "ErrorDist") -> float:
    """E[func(eps)] with the kink at 0 split out."""
    left, _ = integrate.quad(lambda x: func(x) * dist.pdf(x), -np.inf, 0.0, limit=200)
    right, _ = integrate.quad(lambda x: func(x) * dist.pdf(x), 0.0, np.inf, limit=200)
    return left + right


def _moments_by_quadrature(spec: LossSpec, dist: "ErrorDist") -> MomentPair:
    kind = spec.effective_kind

    def score(x: float) -> float:
        return float(loss_score(spec, x))

    mean = _expect(score, dist)
    if abs(mean) > MEAN_SCORE_QUAD_TOL:
        raise MomentConditionError(
            f"E[phi(eps)] = {mean:.3g} != 0 for {spec.label} under {dist.name}"
        )
    sigma2 = _expect(lambda x: score(x) ** 2, dist)

    if kind == LossKind.LAD:
        gamma, sigma2 = 2.0 * dist.pdf(0.0), 1.0
    elif kind == LossKind.QUANTILE:
        gamma = dist.pdf(0.0)
    elif kind == LossKind.HUBER:
        gamma = dist.cdf(spec.c) - dist.cdf(-spec.c)
    elif kind == LossKind.LEAST_SQUARES:
        gamma = 1.0
    else:
        gamma = (spec.q - 1.0) * _expect(lambda x: abs(x) ** (spec.q - 2.0), dist)

    logger.debug(f"gamma_sigma2({spec.label}, {dist.name}) = ({gamma:.6f}, {sigma2:.6f})")
    return MomentPair(gamma=float(gamma), sigma2=float(sigma2))


def _moments_by_monte_carlo(
    spec: LossSpec, dist: "ErrorDist", draws: int, h: float, seed: int
) -> MomentPair:
    if draws < 2:
        raise SpecError("monte carlo gamma_sigma2 needs at least 2 draws")
    rng = np.random.default_rng(seed)
    eps = dist.sample(rng, draws)
    phi = loss_score(spec, eps)

    mean = float(np.mean(phi))
    se = float(np.std(phi)) / math.sqrt(draws)
    if abs(mean) > 5.0 * se + 1e-12:
        raise MomentConditionError(
            f"E[phi(eps)] = {mean:.3g} (se {se:.2g}) != 0 for {spec.label} under {dist.name}"
        )
    sigma2 = float(np.mean(phi ** 2))
    # common random numbers for both sides of the difference
    gamma = float(np.mean(loss_score(spec, eps + h)) - np.mean(loss_score(spec, eps - h))) / (2 * h)
    return MomentPair(gamma=gamma, sigma2=sigma2)
