"""
Solver for the weighted-L1 penalized M-estimation objective

    Q(beta) = (1/n) sum_i rho(y_i - x_i^T beta) + sum_j w_j |beta_j|

The splitting scheme introduces z = y - X beta and alternates:
1. beta-update: weighted lasso on a quadratic, cyclic coordinate descent
2. z-update: coordinatewise loss_prox
3. scaled dual update

Every few iterations the current iterate is hard-zeroed, polished on its
active set and certified: the coordinatewise KKT residual must vanish and,
for piecewise-linear losses, one subgradient vector shared by all
coordinates must exist (a small LP over the kink residuals). The best
certified iterate is returned.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple
import logging
import math

import numpy as np
from scipy import optimize

from .exceptions import ConfigurationError, MaxIterExceeded, NonFiniteEncountered, SpecError
from .losses import LossSpec, loss_curvature, loss_prox, loss_score, loss_subgradient, loss_value
from .penalties import PenaltyWeights

logger = logging.getLogger(__name__)

CD_MAX_SWEEPS = 100
CD_TOL = 1e-12
NEWTON_MAX_STEPS = 30
RHO_BALANCE_FACTOR = 10.0
RHO_SCALE_STEP = 2.0
LP_FEAS_TOL = 1e-10


@dataclass(frozen=True)
class Dataset:
    """A regression instance: design X (n x p) and response y (n)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise SpecError(f"X must be a matrix, got {X.ndim} dimensions")
        if X.shape[0] != y.size:
            raise SpecError(f"X has {X.shape[0]} rows but y has {y.size} entries")
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise SpecError(f"dataset needs n >= 1 and p >= 1, got {X.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise SpecError("dataset contains non-finite entries")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def subset_columns(self, columns: Sequence[int]) -> "Dataset":
        return Dataset(self.X[:, list(columns)], self.y)

    def standardized(self):
        """Scale columns to unit standard deviation.

        Returns:
            (scaled Dataset, scales) with beta_original = beta_scaled / scales
        """
        scales = self.X.std(axis=0)
        scales[scales == 0.0] = 1.0
        return Dataset(self.X / scales, self.y), scales


@dataclass(frozen=True)
class SolveOptions:
    """Solver settings.

    Attributes:
        tol: KKT residual required for convergence
        max_iter: Splitting iteration budget
        admm_rho: Initial augmented-Lagrangian parameter (rescaled by the
            response scale and adapted by residual balancing)
        zero_tol: Coefficients with |beta_j| <= zero_tol are set to exactly 0
        kink_tol: Residuals within kink_tol * max(1, |y|_inf) of 0 count as
            on the kink when certifying
        check_every: Iterations between certification attempts
    """

    tol: float = 1e-8
    max_iter: int = 20000
    admm_rho: float = 1.0
    zero_tol: float = 1e-6
    kink_tol: float = 1e-9
    check_every: int = 10

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be at least 1")
        if not self.admm_rho > 0:
            raise ConfigurationError("admm_rho must be positive")
        if self.zero_tol < 0:
            raise ConfigurationError("zero_tol cannot be negative")
        if self.kink_tol < 0:
            raise ConfigurationError("kink_tol cannot be negative")
        if self.check_every < 1:
            raise ConfigurationError("check_every must be at least 1")


@dataclass
class FitResult:
    """Outcome of a fit.

    converged implies kkt_residual <= tol and joint_kkt_residual <= tol;
    objective is Q(beta).
    """

    beta: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    tol: float = field(default=1e-8, repr=False)

    @property
    def support(self) -> List[int]:
        """Indices of nonzero coefficients."""
        return np.flatnonzero(self.beta).tolist()

    @property
    def df(self) -> int:
        return int(np.count_nonzero(self.beta))

    def raise_for_status(self) -> "FitResult":
        """Raise MaxIterExceeded unless the fit converged."""
        if not self.converged:
            raise MaxIterExceeded(
                f"no certified solution after {self.iterations} iterations "
                f"(kkt={self.kkt_residual:.3g}, tol={self.tol:.1g})",
                result=self,
            )
        return self


def objective(data: Dataset, loss: LossSpec, weights: PenaltyWeights, beta: np.ndarray) -> float:
    """Q(beta) evaluated directly."""
    beta = np.asarray(beta, dtype=float)
    r = data.y - data.X @ beta
    return float(np.mean(loss_value(loss, r)) + np.dot(weights.w, np.abs(beta)))


def default_kink_tol(data: Dataset, opts: Optional[SolveOptions] = None) -> float:
    base = (opts or SolveOptions()).kink_tol
    return base * max(1.0, float(np.max(np.abs(data.y))))


def _residual_intervals(
    data: Dataset, loss: LossSpec, beta: np.ndarray, kink_tol: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Per-observation subgradient interval [lo_i, hi_i] of rho at r_i.

    Residuals within kink_tol of 0 use the hull with the interval at 0.
    """
    r = data.y - data.X @ beta
    sub = loss_subgradient(loss, r)
    lo = np.array(sub.lo, dtype=float, copy=True)
    hi = np.array(sub.hi, dtype=float, copy=True)
    near = np.abs(r) <= kink_tol
    if near.any():
        at_zero = loss_subgradient(loss, 0.0)
        lo[near] = np.minimum(lo[near], at_zero.lo)
        hi[near] = np.maximum(hi[near], at_zero.hi)
    return lo, hi


def kkt_residual(
    data: Dataset,
    loss: LossSpec,
    weights: PenaltyWeights,
    beta: np.ndarray,
    kink_tol: Optional[float] = None,
) -> float:
    """Distance from 0 to the coordinatewise subdifferential of Q at beta.

    For coordinate j the set is
        -(1/n) sum_i x_ij [phi_-(r_i), phi_+(r_i)] + w_j d|beta_j|
    with interval arithmetic. Residuals within kink_tol of 0 use the
    hull of their interval and the interval at 0.

    Each coordinate may pick its own subgradient at a kink, so this is a
    necessary condition only; see joint_kkt_residual.

    Returns:
        max_j dist(0, set_j); 0 iff beta satisfies the inclusion
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    _check_shapes(data, weights, beta)
    if kink_tol is None:
        kink_tol = default_kink_tol(data)

    lo, hi = _residual_intervals(data, loss, beta, kink_tol)
    X = data.X
    Xp = np.maximum(X, 0.0)
    Xn = np.minimum(X, 0.0)
    lower = -(Xp.T @ hi + Xn.T @ lo) / data.n
    upper = -(Xp.T @ lo + Xn.T @ hi) / data.n

    w = weights.w
    sign = np.sign(beta)
    lower = lower + np.where(sign == 0.0, -w, sign * w)
    upper = upper + np.where(sign == 0.0, w, sign * w)

    dist = np.maximum(np.maximum(lower, -upper), 0.0)
    return float(dist.max())


def _stationarity_violation(
    v: np.ndarray, weights: PenaltyWeights, beta: np.ndarray
) -> float:
    """max_j distance of v_j = (1/n)(X^T g)_j from w_j d|beta_j|."""
    w = weights.w
    sign = np.sign(beta)
    active = sign != 0.0
    viol = np.where(active, np.abs(v - w * sign), np.maximum(np.abs(v) - w, 0.0))
    return float(viol.max())


def joint_kkt_residual(
    data: Dataset,
    loss: LossSpec,
    weights: PenaltyWeights,
    beta: np.ndarray,
    kink_tol: Optional[float] = None,
) -> float:
    """Optimality residual with one subgradient vector shared by all coordinates.

    Solves
        min_{g, e} e  s.t.  g_i in [lo_i, hi_i],
                            dist((1/n) X^T g, w * d|beta|)_j <= e for all j
    as a linear program over the observations whose interval is not a
    point, then re-evaluates the violation exactly at the LP's g. The
    result is an upper bound on the true residual and never below
    kkt_residual; 0 iff beta minimizes Q (convex case).
    """
    beta = np.asarray(beta, dtype=float).reshape(-1)
    _check_shapes(data, weights, beta)
    if kink_tol is None:
        kink_tol = default_kink_tol(data)

    lo, hi = _residual_intervals(data, loss, beta, kink_tol)
    X, n = data.X, data.n
    free = hi > lo
    fixed_part = X[~free].T @ lo[~free] / n
    if not free.any():
        return _stationarity_violation(fixed_part, weights, beta)

    A = X[free].T / n
    m = A.shape[1]
    w = weights.w
    sign = np.sign(beta)
    # target interval [t_lo, t_hi] for (1/n)(X^T g)_j
    t_lo = np.where(sign == 0.0, -w, w * sign) - fixed_part
    t_hi = np.where(sign == 0.0, w, w * sign) - fixed_part

    slack = -np.ones((data.p, 1))
    A_ub = np.vstack([np.hstack([A, slack]), np.hstack([-A, slack])])
    b_ub = np.concatenate([t_hi, -t_lo])
    cost = np.zeros(m + 1)
    cost[-1] = 1.0
    bounds = list(zip(lo[free], hi[free])) + [(0.0, None)]

    res = optimize.linprog(
        cost,
        A_ub=A_ub,
        b_ub=b_ub,
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": LP_FEAS_TOL,
            "dual_feasibility_tolerance": LP_FEAS_TOL,
        },
    )
    if res.status != 0 or res.x is None:
        logger.debug(f"joint certificate LP failed: {res.message}")
        return math.inf

    g = np.clip(res.x[:m], lo[free], hi[free])
    return _stationarity_violation(fixed_part + A @ g, weights, beta)


def _check_shapes(data: Dataset, weights: PenaltyWeights, beta: np.ndarray) -> None:
    if len(weights) != data.p:
        raise SpecError(f"expected {data.p} weights, got {len(weights)}")
    if beta.size != data.p:
        raise SpecError(f"expected {data.p} coefficients, got {beta.size}")


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


class SplittingSolver:
    """Operator-splitting solver for one penalized M-estimation problem.

    Owns all mutable state of a single fit; distinct instances share nothing.

    Usage:
        solver = SplittingSolver(data, LossSpec.lad(), weights, SolveOptions())
        result = solver.solve()
    """

    def __init__(
        self,
        data: Dataset,
        loss: LossSpec,
        weights: PenaltyWeights,
        opts: Optional[SolveOptions] = None,
    ):
        self.data = data
        self.loss = loss
        self.weights = weights
        self.opts = opts or SolveOptions()
        if len(weights) != data.p:
            raise SpecError(f"expected {data.p} weights, got {len(weights)}")

        # cached Gram structure for the beta-update
        self.gram = data.X.T @ data.X
        self.gram_diag = np.diag(self.gram).copy()
        self.kink_tol = default_kink_tol(data, self.opts)
        self._best: Optional[FitResult] = None
        self._best_key: Optional[tuple] = None

    # -- public -----------------------------------------------------------

    def solve(self, init: Optional[np.ndarray] = None) -> FitResult:
        """Run the splitting iterations until the KKT certificate holds.

        Args:
            init: Starting coefficients (zeros by default)

        Returns:
            Best FitResult; converged=False if max_iter was exhausted

        Raises:
            NonFiniteEncountered: If the iterates blow up
        """
        data, opts = self.data, self.opts
        X, y, n = data.X, data.y, data.n

        beta = np.zeros(data.p) if init is None else np.array(init, dtype=float).reshape(-1)
        if beta.size != data.p:
            raise SpecError(f"init must have {data.p} entries, got {beta.size}")

        scale = float(np.std(y)) or 1.0
        rho = opts.admm_rho / scale
        z = y - X @ beta
        u = np.zeros(n)
        self._best = None
        self._best_key = None

        iteration = 0
        for iteration in range(1, opts.max_iter + 1):
            # beta-update: weighted lasso on (rho/2)||X beta - v||^2
            v = y - z - u
            beta = self._coordinate_descent(beta, X.T @ v, n * self.weights.w / rho)
            xb = X @ beta

            # z-update
            z_old = z
            z = loss_prox(self.loss, y - xb - u, 1.0 / rho)

            # dual update
            primal = xb + z - y
            u = u + primal

            if not (np.all(np.isfinite(beta)) and np.all(np.isfinite(u))):
                raise NonFiniteEncountered(f"non-finite iterate at iteration {iteration}")

            if iteration % opts.check_every == 0 or iteration == opts.max_iter:
                best = self._certify(beta, iteration)
                if best.converged:
                    break

                r_norm = float(np.linalg.norm(primal))
                s_norm = rho * float(np.linalg.norm(X.T @ (z - z_old)))
                if r_norm > RHO_BALANCE_FACTOR * s_norm:
                    rho *= RHO_SCALE_STEP
                    u /= RHO_SCALE_STEP
                    logger.debug(f"iter {iteration}: rho -> {rho:.3g}")
                elif s_norm > RHO_BALANCE_FACTOR * r_norm:
                    rho /= RHO_SCALE_STEP
                    u *= RHO_SCALE_STEP
                    logger.debug(f"iter {iteration}: rho -> {rho:.3g}")

        result = self._best if self._best is not None else self._certify(beta, iteration)
        result.iterations = iteration
        if result.converged:
            logger.debug(
                f"converged in {iteration} iterations (kkt={result.kkt_residual:.2e}, "
                f"obj={result.objective:.6g})"
            )
        else:
            logger.warning(
                f"max_iter={opts.max_iter} reached without certificate "
                f"(kkt={result.kkt_residual:.2e} > tol={opts.tol:.1e})"
            )
        return result

    # -- internals --------------------------------------------------------

    def _coordinate_descent(
        self, beta: np.ndarray, b: np.ndarray, thresh: np.ndarray
    ) -> np.ndarray:
        """Minimize 0.5 beta^T G beta - b^T beta + sum_j thresh_j |beta_j| by cyclic CD."""
        beta = beta.copy()
        gram, diag = self.gram, self.gram_diag
        q = gram @ beta
        for _ in range(CD_MAX_SWEEPS):
            max_delta = 0.0
            for j in range(beta.size):
                d = diag[j]
                if d <= 0.0:
                    beta[j] = 0.0
                    continue
                old = beta[j]
                new = _soft_threshold(b[j] - q[j] + d * old, thresh[j]) / d
                delta = new - old
                if delta != 0.0:
                    q += gram[j] * delta
                    beta[j] = new
                    max_delta = max(max_delta, abs(delta) * math.sqrt(d))
            if max_delta <= CD_TOL * (1.0 + float(np.abs(b).max())):
                break
        return beta

    def _certify(self, beta: np.ndarray, iteration: int) -> FitResult:
        """Hard-zero, polish and score candidates; keep the best seen."""
        base = beta.copy()
        base[np.abs(base) <= self.opts.zero_tol] = 0.0

        candidates = [base]
        polished = self._polish(base)
        if polished is not None:
            polished[np.abs(polished) <= self.opts.zero_tol] = 0.0
            candidates.append(polished)

        for cand in candidates:
            kkt = kkt_residual(self.data, self.loss, self.weights, cand, self.kink_tol)
            obj = objective(self.data, self.loss, self.weights, cand)
            if not math.isfinite(obj):
                continue
            # the coordinatewise residual is a lower bound on the joint one
            converged = kkt <= self.opts.tol and self._jointly_optimal(cand)
            key = (not converged, kkt, obj)
            if self._best is None or key < self._best_key:
                self._best_key = key
                self._best = FitResult(
                    beta=cand,
                    objective=obj,
                    kkt_residual=kkt,
                    iterations=iteration,
                    converged=converged,
                    tol=self.opts.tol,
                )
        return self._best

    def _jointly_optimal(self, beta: np.ndarray) -> bool:
        if not self.loss.is_piecewise_linear:
            # point subgradients everywhere: the coordinatewise check is exact
            return True
        joint = joint_kkt_residual(self.data, self.loss, self.weights, beta, self.kink_tol)
        if joint > self.opts.tol:
            logger.debug(f"vertex rejected by joint certificate ({joint:.2e})")
        return joint <= self.opts.tol

    def _polish(self, beta: np.ndarray) -> Optional[np.ndarray]:
        active = np.flatnonzero(beta)
        if active.size == 0:
            return None
        if self.loss.is_piecewise_linear:
            return self._interpolate_vertex(beta, active)
        return self._newton_on_active_set(beta, active)

    def _interpolate_vertex(self, beta: np.ndarray, active: np.ndarray) -> Optional[np.ndarray]:
        """Piecewise-linear losses: the solution interpolates |active| observations."""
        X, y = self.data.X, self.data.y
        if active.size > self.data.n:
            return None
        r = y - X @ beta
        kinks = np.argsort(np.abs(r), kind="stable")[: active.size]
        A = X[np.ix_(kinks, active)]
        try:
            coef = np.linalg.solve(A, y[kinks])
        except np.linalg.LinAlgError:
            coef = np.linalg.lstsq(A, y[kinks], rcond=None)[0]
        if not np.all(np.isfinite(coef)):
            return None
        out = np.zeros_like(beta)
        out[active] = coef
        return out

    def _newton_on_active_set(self, beta: np.ndarray, active: np.ndarray) -> Optional[np.ndarray]:
        """Differentiable losses: semismooth Newton with fixed signs on the active set."""
        XA = self.data.X[:, active]
        y, n = self.data.y, self.data.n
        wa = self.weights.w[active] * np.sign(beta[active])
        b = beta[active].copy()

        def restricted(coef: np.ndarray) -> float:
            return float(np.mean(loss_value(self.loss, y - XA @ coef)) + wa @ coef)

        f = restricted(b)
        for _ in range(NEWTON_MAX_STEPS):
            r = y - XA @ b
            grad = -(XA.T @ loss_score(self.loss, r)) / n + wa
            if np.max(np.abs(grad)) <= 0.1 * self.opts.tol:
                break
            hess = (XA.T * loss_curvature(self.loss, r)) @ XA / n
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
            if not np.any(step):
                break
            t = 1.0
            improved = False
            for _ in range(40):
                trial = b - t * step
                f_trial = restricted(trial)
                # allow rounding-level increases once the gradient is tiny
                if f_trial <= f + 1e-14 * max(1.0, abs(f)):
                    b, f, improved = trial, f_trial, True
                    break
                t *= 0.5
            if not improved:
                break

        # signs are fixed only where the penalty is active
        flipped = (np.sign(b) != np.sign(beta[active])) & (self.weights.w[active] > 0.0)
        if np.any(flipped):
            return None
        out = np.zeros_like(beta)
        out[active] = b
        return out


def fit_penalized(
    data: Dataset,
    loss: LossSpec,
    weights: PenaltyWeights,
    opts: Optional[SolveOptions] = None,
    init: Optional[np.ndarray] = None,
) -> FitResult:
    """Minimize (1/n) sum rho(y - X beta) + sum w_j |beta_j|.

    Args:
        data: Regression instance
        loss: Loss specification
        weights: L1 weights, length p
        opts: Solver options (defaults if omitted)
        init: Optional starting coefficients

    Returns:
        FitResult; check .converged or call .raise_for_status()
    """
    return SplittingSolver(data, loss, weights, opts).solve(init)


def fit_unpenalized(
    data: Dataset, loss: LossSpec, opts: Optional[SolveOptions] = None
) -> FitResult:
    """The non-penalized M-estimator (pilot)."""
    if data.p > data.n:
        logger.warning(f"pilot fit is ill-posed: p={data.p} > n={data.n}")
    return fit_penalized(data, loss, PenaltyWeights.zeros(data.p), opts)


def fit_oracle(
    data: Dataset,
    loss: LossSpec,
    support: Sequence[int],
    opts: Optional[SolveOptions] = None,
) -> FitResult:
    """Unpenalized fit restricted to the given (0-based) columns.

    Off-support coefficients of the returned length-p vector are exactly 0.
    """
    support = sorted(set(int(j) for j in support))
    if not support:
        raise SpecError("oracle support cannot be empty")
    if support[0] < 0 or support[-1] >= data.p:
        raise SpecError(f"oracle support {support} outside 0..{data.p - 1}")

    sub = fit_unpenalized(data.subset_columns(support), loss, opts)
    beta = np.zeros(data.p)
    beta[support] = sub.beta
    return FitResult(
        beta=beta,
        objective=objective(data, loss, PenaltyWeights.zeros(data.p), beta),
        kkt_residual=sub.kkt_residual,
        iterations=sub.iterations,
        converged=sub.converged,
        tol=sub.tol,
    )
