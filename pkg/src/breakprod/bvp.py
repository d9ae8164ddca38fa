"""Finite-difference Newton solver for the general Euler-Lagrange boundary-value problem.

For ``B(x) = b1 x**gamma`` and ``h(t) = a + b t**n`` the extremal satisfies

    x'' = b1**2 gamma x**(2 gamma - 1)
          + b1 gamma x**(gamma - 1) (c10 + s2/T + 2 beta10 d(t)) / (2 beta10)
          + (h(t) - 2 beta10 d'(t)) / (2 beta10),

with x(0) = x(T) = 0.  The interior nodes of a uniform grid are found by
damped Newton iteration on the three-point discretisation, whose Jacobian is
tridiagonal.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .errors import ParameterError, SingularityError, SingularJacobianError
from .model import (
    DEFAULT_INTERVALS,
    ModelInstance,
    Trajectory,
    demand_at,
    demand_rate_of_change,
    holding_cost_at,
)

logger = logging.getLogger(__name__)

#: Final solutions with any x or u below -BVP_FEAS_TOL are reported infeasible.
BVP_FEAS_TOL = 1e-6

MAX_HALVINGS = 30


@dataclass(frozen=True)
class GridSpec:
    T: float
    intervals: int = DEFAULT_INTERVALS

    def __post_init__(self):
        if self.intervals < 8 or self.intervals % 2:
            raise ParameterError(f"intervals must be even and >= 8, got {self.intervals}")
        if self.T <= 0:
            raise ParameterError("T must be positive")

    @property
    def step(self) -> float:
        return self.T / self.intervals

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.intervals + 1)


@dataclass(frozen=True)
class NewtonSettings:
    max_iters: int = 50
    residual_tol: float = 1e-8
    damping: float = 1.0
    regularization_eps: float = 1e-6

    def __post_init__(self):
        if self.residual_tol <= 0:
            raise ParameterError("residual_tol must be > 0")
        if not 0 < self.damping <= 1:
            raise ParameterError("damping must lie in (0, 1]")
        if self.regularization_eps < 0:
            raise ParameterError("regularization_eps must be >= 0")


@dataclass(frozen=True)
class BvpSolution:
    trajectory: Trajectory
    final_residual: float
    iterations: int
    converged: bool
    feasible: bool = True
    regularized: bool = False
    residual_history: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.converged and self.feasible


def _forcing(model: ModelInstance, t):
    beta = model.econ.beta10
    return (holding_cost_at(model.holding, t)
            - 2 * beta * demand_rate_of_change(model.demand, t)) / (2 * beta)


def _state_terms(model: ModelInstance, t, x, floor: float):
    """State-dependent part of x'' and its x-derivative.

    For gamma != 1 the power terms are evaluated at max(x, floor); the
    derivative is zero where the floor is active.
    """
    b1, gamma, beta = model.breakage.b1, model.breakage.gamma, model.econ.beta10
    weight = (model.econ.c10 + model.econ.s2 / model.T
              + 2 * beta * demand_at(model.demand, t)) / (2 * beta)
    x = np.asarray(x, dtype=float)
    if gamma == 1.0:
        return b1 * b1 * x + b1 * weight, np.full_like(x, b1 * b1)
    xe = np.maximum(x, floor)
    active = x > floor
    with np.errstate(divide="ignore", invalid="ignore"):
        value = (b1 * b1 * gamma * xe ** (2 * gamma - 1)
                 + b1 * gamma * xe ** (gamma - 1) * weight)
        slope = (b1 * b1 * gamma * (2 * gamma - 1) * xe ** (2 * gamma - 2)
                 + b1 * gamma * (gamma - 1) * xe ** (gamma - 2) * weight)
    return value, np.where(active, slope, 0.0)


def el_residual(model: ModelInstance, t, x, xdd, regularization_eps: float = 0.0):
    """Euler-Lagrange residual; zero along an extremal.

    Raises :class:`SingularityError` when gamma < 1 and x = 0 without regularisation.
    """
    x = np.asarray(x, dtype=float)
    gamma = model.breakage.gamma
    if gamma < 1 and model.breakage.b1 > 0 and regularization_eps == 0 and np.any(x <= 0):
        raise SingularityError("x**(gamma - 1) is singular at x = 0 for gamma < 1; "
                               "pass regularization_eps > 0")
    value, _ = _state_terms(model, t, x, regularization_eps)
    return xdd - value - _forcing(model, t)


def initial_guess(model: ModelInstance, t) -> np.ndarray:
    """The no-breakage cubic extremal, which already meets both boundary conditions."""
    beta, T = model.econ.beta10, model.T
    k2 = model.holding.a / (2 * beta) - model.demand.d2
    k3 = 2 * model.demand.d3 - model.holding.b / (2 * beta)
    B = k3 * T * T / 6 - k2 * T / 2
    return B * t + k2 * t ** 2 / 2 - k3 * t ** 3 / 6


def _discrete_residual(model, t, x, h, floor):
    # (x[i-1] - x[i]) + (x[i+1] - x[i]) keeps the cancellation small
    second = ((x[:-2] - x[1:-1]) + (x[2:] - x[1:-1])) / (h * h)
    value, slope = _state_terms(model, t[1:-1], x[1:-1], floor)
    return second - value - _forcing(model, t[1:-1]), slope


def solve_bvp(model: ModelInstance, grid: GridSpec | None = None,
              settings: NewtonSettings | None = None, x0=None) -> BvpSolution:
    """Solve the discretised Euler-Lagrange equation with damped Newton.

    The returned trajectory carries u recovered from x by u = x' + d + B(x),
    with x' from second-order finite differences.  Non-convergence and sign
    violations are reported through the flags on :class:`BvpSolution`; they
    never raise.
    """
    grid = grid or GridSpec(model.T)
    settings = settings or NewtonSettings()
    if not np.isclose(grid.T, model.T):
        raise ParameterError("grid horizon differs from model horizon")
    t, h = grid.times, grid.step
    floor = settings.regularization_eps if model.breakage.gamma != 1.0 else 0.0
    if model.breakage.gamma < 1 and model.breakage.b1 > 0 and floor == 0:
        raise SingularityError("gamma < 1 needs regularization_eps > 0")

    x = initial_guess(model, t) if x0 is None else np.array(x0, dtype=float)
    x[0] = x[-1] = 0.0
    n_inner = grid.intervals - 1
    off = np.full(n_inner, 1.0 / (h * h))

    F, slope = _discrete_residual(model, t, x, h, floor)
    norm = float(np.max(np.abs(F)))
    history = [norm]
    iterations = 0
    while norm > settings.residual_tol and iterations < settings.max_iters:
        iterations += 1
        bands = np.vstack([off, -2.0 / (h * h) - slope, off])
        try:
            delta = solve_banded((1, 1), bands, -F)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"singular Jacobian at Newton iteration {iterations}") from exc
        if not np.all(np.isfinite(delta)):
            raise SingularJacobianError(f"non-finite Newton step at iteration {iterations}")

        lam = settings.damping
        for _ in range(MAX_HALVINGS + 1):
            trial = x.copy()
            trial[1:-1] += lam * delta
            F_trial, slope_trial = _discrete_residual(model, t, trial, h, floor)
            norm_trial = float(np.max(np.abs(F_trial)))
            if norm_trial < norm:
                break
            lam *= 0.5
        else:
            logger.warning("line search stalled at Newton iteration %d (residual %.3e)",
                           iterations, norm)
            break
        x, F, slope, norm = trial, F_trial, slope_trial, norm_trial
        history.append(norm)
        logger.debug("newton %d: residual %.3e step %.3g", iterations, norm, lam)

    converged = norm <= settings.residual_tol
    xdot = np.gradient(x, h, edge_order=2)
    b1, gamma = model.breakage.b1, model.breakage.gamma
    u = xdot + demand_at(model.demand, t) + b1 * np.maximum(x, 0.0) ** gamma
    feasible = bool(np.min(x) >= -BVP_FEAS_TOL and np.min(u) >= -BVP_FEAS_TOL)
    regularized = bool(floor > 0 and gamma < 1 and np.any(x[1:-1] < floor))
    if not converged:
        logger.warning("BVP not converged after %d iterations (residual %.3e)", iterations, norm)
    traj = Trajectory(t, x, u, demand_at(model.demand, t))
    return BvpSolution(traj, norm, iterations, converged, feasible, regularized, history)


@dataclass(frozen=True)
class ConvergenceReport:
    intervals: list[int]
    errors: list[float]
    orders: list[float]
    reference: str

    @property
    def monotone(self) -> bool:
        return all(e1 > e2 for e1, e2 in zip(self.errors, self.errors[1:]))


def _analytic_stock(model: ModelInstance):
    from . import analytic

    if model.breakage.gamma != 1.0 or model.holding.n != 1.0:
        return None
    if model.breakage.b1 == 0.0:
        c = analytic.coefficients_1b(model)
        return lambda t: analytic.x_1b(c, model, t)
    c = analytic.coefficients_1a(model)
    return lambda t: analytic.x_1a(c, model, t)


def grid_convergence(model: ModelInstance, intervals: list[int],
                     settings: NewtonSettings | None = None,
                     reference_intervals: int | None = None) -> ConvergenceReport:
    """Max-node state error of :func:`solve_bvp` over a sequence of grids.

    The reference is the closed-form extremal when one exists, otherwise the
    solution on ``reference_intervals`` (default: twice the finest grid).
    """
    if len(intervals) < 3:
        raise ParameterError("need at least three grids")
    exact = None if reference_intervals else _analytic_stock(model)
    if exact is not None:
        label = "analytic"
    else:
        m_ref = reference_intervals or 2 * max(intervals)
        ref = solve_bvp(model, GridSpec(model.T, m_ref), settings).trajectory
        exact = lambda t: np.interp(t, ref.times, ref.x)  # noqa: E731
        label = f"grid M={m_ref}"
    errors = []
    for m in intervals:
        sol = solve_bvp(model, GridSpec(model.T, m), settings)
        errors.append(float(np.max(np.abs(sol.trajectory.x - exact(sol.trajectory.times)))))
    orders = []
    for (m1, e1), (m2, e2) in zip(zip(intervals, errors), zip(intervals[1:], errors[1:])):
        # undefined when the scheme is exact (round-off level errors)
        orders.append(float(np.log(e1 / e2) / np.log(m2 / m1)) if min(e1, e2) > 0 else float("nan"))
    return ConvergenceReport(list(intervals), errors, orders, label)
