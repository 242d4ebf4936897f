"""Tension allocation: weighted least-squares wrench tracking as a
box-constrained quadratic program.

The cost is sum_k w_cart[k] * (w_des[k] - (J T)[k])^2 + w_t * sum_i T_i^2,
minimized over t_min <= T <= t_max. Expanding and dropping the constant
term gives the standard form 1/2 T' P T + q' T with

    P = 2 (J' diag(w_cart) J + w_t I),    q = -2 J' diag(w_cart) w_des.

The solver is a primal active-set method specialized to box constraints:
it alternates between solving the equality-constrained subproblem on the
free variables and updating the set of tensions pinned at a bound, which
terminates finitely for strictly convex P.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import ModuleGeometry, PayloadModel, PlanarPose, TensionVector, Wrench
from .errors import InvalidProblemError, NonConvergenceError
from .kinematics import WrenchJacobian, build_jacobian, compute_cable_states

DEFAULT_MAX_ITERATIONS = 200

# Controlled planar force components (fx, fz) weighted heavily; everything
# else unweighted. The tension regularizer stays at least an order of
# magnitude below the largest Cartesian weight.
DEFAULT_W_CART = (1000.0, 0.0, 1000.0, 0.0, 0.0, 0.0)
DEFAULT_W_T = 1.0


@dataclass(frozen=True)
class AllocationWeights:
    """Cartesian tracking weights (one per wrench component) plus the
    tension-spreading regularizer."""

    w_cart: tuple[float, ...] = DEFAULT_W_CART
    w_t: float = DEFAULT_W_T

    def __post_init__(self):
        w = tuple(float(v) for v in self.w_cart)
        if len(w) != 6:
            raise ValueError(f"w_cart needs 6 entries, got {len(w)}")
        if any(v < 0 for v in w) or self.w_t < 0:
            raise ValueError("weights must be nonnegative")
        if not any(v > 0 for v in w):
            raise ValueError("at least one Cartesian weight must be positive")
        if self.w_t > max(w) / 10.0:
            warnings.warn(
                f"w_t = {self.w_t} exceeds max(w_cart)/10 = {max(w) / 10}; "
                "tension spreading will fight wrench tracking",
                stacklevel=2)
        object.__setattr__(self, "w_cart", w)
        object.__setattr__(self, "w_t", float(self.w_t))


@dataclass(frozen=True)
class QpStandardForm:
    """1/2 T' P T + q' T over the box [lower, upper]."""

    p: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        q = np.array(self.q, dtype=float)
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        n = q.shape[0]
        if p.shape != (n, n):
            raise ValueError(f"P must be {n}x{n}, got {p.shape}")
        if lower.shape != (n,) or upper.shape != (n,):
            raise ValueError("bound vectors must match q in length")
        scale = max(1.0, float(np.max(np.abs(p))))
        if np.max(np.abs(p - p.T)) > 1e-9 * scale:
            raise ValueError("P must be symmetric")
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        for arr in (p, q, lower, upper):
            if not np.all(np.isfinite(arr)):
                raise ValueError("QP data must be finite")
            arr.flags.writeable = False
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def objective(self, t) -> float:
        t = np.asarray(t, dtype=float)
        return float(0.5 * t @ self.p @ t + self.q @ t)

    def kkt_tolerance(self) -> float:
        return 1e-6 * (1.0 + float(np.max(np.abs(self.q))))


def kkt_violation(qp: QpStandardForm, t) -> float:
    """Worst-case violation of the box-QP optimality conditions at ``t``.

    For each coordinate the gradient g = P t + q must be zero (interior),
    >= 0 (at the lower bound) or <= 0 (at the upper bound); bound slack is
    measured on the same scale so a nonoptimal interior point also scores.
    """
    t = np.asarray(t, dtype=float)
    g = qp.p @ t + qp.q
    viol = 0.0
    for i in range(qp.n):
        at_lower = t[i] - qp.lower[i] <= 1e-9 * (1 + abs(qp.lower[i]))
        at_upper = qp.upper[i] - t[i] <= 1e-9 * (1 + abs(qp.upper[i]))
        if at_lower and g[i] >= 0:
            continue
        if at_upper and g[i] <= 0:
            continue
        viol = max(viol, abs(g[i]) if not (at_lower or at_upper)
                   else (-g[i] if at_lower else g[i]))
    return viol


@dataclass(frozen=True)
class AllocationResult:
    """Solver output plus wrench-space diagnostics."""

    tensions: TensionVector
    iterations: int
    solve_time: float
    achieved_wrench: Wrench | None = None
    residual: Wrench | None = None
    objective: float = field(default=float("nan"))


def formulate(j: WrenchJacobian, w_des: Wrench, weights: AllocationWeights,
              lower, upper) -> QpStandardForm:
    """Reduce the weighted wrench-tracking cost to standard QP form."""
    jm = j.matrix
    n = jm.shape[1]
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (n,) or upper.shape != (n,):
        raise ValueError("bounds must provide one (t_min, t_max) per cable")
    lam = np.asarray(weights.w_cart)
    wj = jm * lam[:, None]                    # diag(w_cart) @ J
    p = 2.0 * (jm.T @ wj + weights.w_t * np.eye(n))
    w = np.array(w_des.as_tuple())
    q = -2.0 * (wj.T @ w)
    return QpStandardForm(p=p, q=q, lower=lower, upper=upper)


def solve_box_qp(qp: QpStandardForm, warm_start: TensionVector | None = None,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS) -> AllocationResult:
    """Minimize the standard-form QP over its box via a primal active set.

    Accepts a warm start (clipped into the box); warm starting changes the
    iteration count, never the minimizer. Raises InvalidProblemError when P
    is not positive definite and NonConvergenceError (carrying the best
    iterate) when the iteration cap is exceeded.
    """
    started = time.perf_counter()
    p, q = qp.p, qp.q
    lower, upper = qp.lower, qp.upper
    n = qp.n
    try:
        np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        raise InvalidProblemError(
            "P is not positive definite; tension regularization (w_t > 0) "
            "is required when cable columns are dependent") from None

    tol = qp.kkt_tolerance()
    if warm_start is not None and len(warm_start) == n:
        x = np.clip(np.fromiter(warm_start, dtype=float, count=n),
                    lower, upper)
    else:
        x = lower.copy()
    # Working set: -1 pinned at lower, +1 pinned at upper, 0 free.
    pinned = np.zeros(n, dtype=np.int8)
    pinned[x <= lower] = -1
    pinned[x >= upper] = 1

    best_x = x.copy()
    best_obj = qp.objective(x)
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        free = pinned == 0
        target = x.copy()
        if free.any():
            pf = p[np.ix_(free, free)]
            rhs = -q[free]
            if not free.all():
                rhs = rhs - p[np.ix_(free, ~free)] @ x[~free]
            target[free] = np.linalg.solve(pf, rhs)

        step = target - x
        alpha = 1.0
        blocker = -1
        side = 0
        for i in np.nonzero(free)[0]:
            if step[i] > 0 and x[i] + step[i] > upper[i]:
                a = (upper[i] - x[i]) / step[i]
                if a < alpha:
                    alpha, blocker, side = a, i, 1
            elif step[i] < 0 and x[i] + step[i] < lower[i]:
                a = (lower[i] - x[i]) / step[i]
                if a < alpha:
                    alpha, blocker, side = a, i, -1
        if blocker >= 0:
            x = x + alpha * step
            x[blocker] = upper[blocker] if side > 0 else lower[blocker]
            pinned[blocker] = side
        else:
            x = target

        obj = qp.objective(x)
        if obj < best_obj:
            best_obj = obj
            best_x = x.copy()
        if blocker >= 0:
            continue

        # Full step taken: the free gradient is zero; release the worst
        # pinned coordinate whose multiplier wants to move inward.
        g = p @ x + q
        worst = -1
        worst_val = -tol
        for i in np.nonzero(pinned)[0]:
            lam = g[i] if pinned[i] < 0 else -g[i]
            if lam < worst_val:
                worst_val = lam
                worst = i
        if worst < 0:
            x = np.clip(x, lower, upper)
            return AllocationResult(
                tensions=TensionVector(tuple(x)),
                iterations=iterations,
                solve_time=time.perf_counter() - started,
                objective=qp.objective(x),
            )
        pinned[worst] = 0

    raise NonConvergenceError(
        f"box QP did not converge within {max_iterations} iterations",
        best=TensionVector(tuple(np.clip(best_x, lower, upper))),
        iterations=iterations)


def allocate(pose: PlanarPose, payload: PayloadModel,
             modules: list[ModuleGeometry], w_des: Wrench,
             weights: AllocationWeights | None = None,
             warm_start: TensionVector | None = None) -> AllocationResult:
    """Geometry -> Jacobian -> QP -> tensions, with wrench diagnostics."""
    if weights is None:
        weights = AllocationWeights()
    cables = compute_cable_states(pose, payload, modules)
    j = build_jacobian(cables)
    qp = formulate(j, w_des, weights,
                   lower=[m.t_min for m in modules],
                   upper=[m.t_max for m in modules])
    result = solve_box_qp(qp, warm_start=warm_start)
    achieved = Wrench(*j.apply(result.tensions))
    return AllocationResult(
        tensions=result.tensions,
        iterations=result.iterations,
        solve_time=result.solve_time,
        achieved_wrench=achieved,
        residual=w_des - achieved,
        objective=result.objective,
    )
