"""Direct transcription: optimise sampled production rates against simulated stock.

The control ``u`` lives on a uniform grid of M intervals.  The stock is
integrated with the implicit trapezoidal rule and profit is summed with the
matching trapezoidal weights: Simpson's alternating 4/2 weights would price
odd and even control samples differently while the dynamics weight them
equally, and the optimum degenerates into a sawtooth.  (Simpson remains
available through ``rule="simpson"``, and reported profits use it.)  The fixed
final state is imposed through a quadratic penalty ``mu * x(T)**2`` with an
increasing schedule of weights.  Gradients are
the exact discrete adjoint of this computation, and the bound ``u >= 0`` is
handled by projected gradient ascent with a monotone Armijo search along the
projection arc.  The ascent direction is scaled by the known curvature of the
objective (wear-tear term plus the rank-one terminal penalty), which makes the
step exact for linear breakage.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .model import (
    DEFAULT_INTERVALS,
    ModelInstance,
    Trajectory,
    _integrand,
    demand_at,
    holding_cost_at,
    simpson_weights,
    uniform_grid,
)

logger = logging.getLogger(__name__)

#: Stock below -X_FEAS_TOL anywhere marks a plan as infeasible.
X_FEAS_TOL = 1e-3
#: Allowed |x(T)| for a converged plan.
TERMINAL_TOL = 1e-3
#: Relative resolution assumed for objective values in the line search.
ROUNDOFF = 1e-13


@dataclass(frozen=True)
class TranscriptionSettings:
    intervals: int = DEFAULT_INTERVALS
    max_iters: int = 500
    grad_tol: float = 1e-5
    terminal_penalty_schedule: tuple[float, ...] = (1e1, 1e3, 1e5, 1e6)
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40

    def __post_init__(self):
        if self.intervals < 8 or self.intervals % 2:
            raise ParameterError("intervals must be even and >= 8")
        if self.grad_tol <= 0:
            raise ParameterError("grad_tol must be > 0")
        mus = self.terminal_penalty_schedule
        if not mus or any(m2 <= m1 for m1, m2 in zip(mus, mus[1:])) or mus[0] <= 0:
            raise ParameterError("penalty schedule must be positive and strictly increasing")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise ParameterError("line-search parameters must lie in (0, 1)")


@dataclass
class OptimizationReport:
    trajectory: Trajectory
    profit: float
    terminal_violation: float
    projected_gradient_norm: float
    initial_projected_gradient_norm: float
    iterations: int
    converged: bool
    feasible: bool
    stage_violations: list[float] = field(default_factory=list)
    #: accepted objective values, one list per penalty stage
    objective_history: list[list[float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.converged and self.feasible


def _check_controls(model: ModelInstance, u) -> tuple[np.ndarray, int, float]:
    u = np.asarray(u, dtype=float)
    M = len(u) - 1
    if u.ndim != 1 or M < 2 or M % 2:
        raise ParameterError("control samples must be 1-D with an even number of intervals")
    return u, M, model.T / M


def _step_solver(model: ModelInstance, c: float):
    """Solver for y + c * B(y) = r with B(y) = b1 * max(y, 0)**gamma."""
    b1, gamma = model.breakage.b1, model.breakage.gamma
    if b1 == 0.0:
        return lambda r: r
    cb = c * b1
    if gamma == 1.0:
        return lambda r: r / (1.0 + cb) if r > 0.0 else r
    if gamma == 2.0:
        # positive root of cb*y**2 + y - r = 0, cancellation-free form
        return lambda r: 2.0 * r / (1.0 + math.sqrt(1.0 + 4.0 * cb * r)) if r > 0.0 else r

    def solve(r):
        if r <= 0.0:
            return r
        # g(y) = y + cb*y**gamma - r is increasing with g(0) < 0 <= g(r)
        lo, hi, y = 0.0, r, r
        for _ in range(100):
            g = y + cb * y ** gamma - r
            if g > 0.0:
                hi = y
            else:
                lo = y
            if abs(g) <= 1e-14 * max(r, 1.0):
                return y
            dg = 1.0 + cb * gamma * y ** (gamma - 1.0) if y > 0.0 else math.inf
            y_new = y - g / dg
            y = y_new if lo < y_new < hi else 0.5 * (lo + hi)
        return y

    return solve


def _breakage_slope(model: ModelInstance, x):
    b1, gamma = model.breakage.b1, model.breakage.gamma
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    out = np.zeros_like(x)
    out[pos] = b1 * gamma * x[pos] ** (gamma - 1.0)
    return out


def simulate_forward(model: ModelInstance, u_grid) -> np.ndarray:
    """Stock samples from x(0) = 0 under the implicit trapezoidal rule.

    Breakage acts on max(x, 0), so a plan that drives the stock negative is
    integrated on regardless; callers flag it from the returned samples.
    """
    u, M, h = _check_controls(model, u_grid)
    t = uniform_grid(model.T, M)
    c = 0.5 * h
    net = u - demand_at(model.demand, t)
    solve = _step_solver(model, c)
    b1, gamma = model.breakage.b1, model.breakage.gamma
    x = np.empty(M + 1)
    x[0] = 0.0
    xk = 0.0
    for k in range(M):
        bk = b1 * xk ** gamma if xk > 0.0 else 0.0
        xk = solve(xk + c * (net[k] - bk + net[k + 1]))
        x[k + 1] = xk
    if x.min() < -X_FEAS_TOL:
        logger.debug("forward simulation left x >= 0 (min %.3g)", x.min())
    return x


def trapezoid_weights(intervals: int, T: float) -> np.ndarray:
    w = np.full(intervals + 1, T / intervals)
    w[0] = w[-1] = 0.5 * T / intervals
    return w


def _weights(rule: str, M: int, T: float) -> np.ndarray:
    if rule == "trapezoid":
        return trapezoid_weights(M, T)
    if rule == "simpson":
        return simpson_weights(M, T)
    raise ParameterError(f"unknown quadrature rule {rule!r}")


def _profit(model: ModelInstance, u, x, w) -> float:
    t = uniform_grid(model.T, len(u) - 1)
    return float(np.dot(w, _integrand(model, t, x, u)))


def _value(model, u, x, mu, w) -> float:
    return _profit(model, u, x, w) - mu * x[-1] ** 2


def _gradient(model, u, x, mu, w) -> np.ndarray:
    t = uniform_grid(model.T, len(u) - 1)
    C11 = model.econ.c10 + model.econ.s2 / model.T
    dJdx = -w * holding_cost_at(model.holding, t)
    dJdx[-1] -= 2.0 * mu * x[-1]
    dJdu = -w * (C11 + 2.0 * model.econ.beta10 * u)
    return _adjoint(model, u, x, dJdx, dJdu)


def _terminal_sensitivity(model, u, x) -> np.ndarray:
    seed = np.zeros(len(u))
    seed[-1] = 1.0
    return _adjoint(model, u, x, seed, np.zeros(len(u)))


def objective(model: ModelInstance, u_grid, mu: float = 0.0, rule: str = "trapezoid") -> float:
    """Profit of the simulated plan minus the terminal penalty mu * x(T)**2."""
    u, M, _ = _check_controls(model, u_grid)
    return _value(model, u, simulate_forward(model, u), mu, _weights(rule, M, model.T))


def _adjoint(model: ModelInstance, u, x, dJdx, dJdu) -> np.ndarray:
    """Total derivative given partials of J with respect to the states and controls.

    Step residuals R_k = x_{k+1} - x_k - h/2 (f_k + f_{k+1}); multipliers
    solve nu_{j-1} (1 + h/2 B'_j) - nu_j (1 - h/2 B'_j) = dJ/dx_j, nu_M = 0.
    """
    M = len(u) - 1
    c = 0.5 * model.T / M
    slope = _breakage_slope(model, x)
    nu = np.zeros(M + 1)
    for j in range(M, 0, -1):
        nu[j - 1] = (dJdx[j] + nu[j] * (1.0 - c * slope[j])) / (1.0 + c * slope[j])
    grad = np.array(dJdu, dtype=float)
    grad[:-1] += c * nu[:-1]
    grad[1:] += c * nu[:-1]
    return grad


def gradient(model: ModelInstance, u_grid, mu: float = 0.0, rule: str = "trapezoid") -> np.ndarray:
    """Exact gradient of :func:`objective` with respect to every control sample."""
    u, M, _ = _check_controls(model, u_grid)
    return _gradient(model, u, simulate_forward(model, u), mu, _weights(rule, M, model.T))


def terminal_sensitivity(model: ModelInstance, u_grid) -> np.ndarray:
    """Gradient of the final stock x(T) with respect to the control samples."""
    u, _, _ = _check_controls(model, u_grid)
    return _terminal_sensitivity(model, u, simulate_forward(model, u))


def project(u) -> np.ndarray:
    return np.maximum(np.asarray(u, dtype=float), 0.0)


def projected_gradient(u, g) -> np.ndarray:
    """Ascent gradient with components blocked by the active bound u = 0 removed."""
    return np.where((u > 0.0) | (g > 0.0), g, 0.0)


def _scaled_direction(g, free, w, s, beta, mu):
    """(2 beta W + 2 mu s s^T)^{-1} g on the free variables, via Sherman-Morrison."""
    d = np.zeros_like(g)
    diag = 2.0 * beta * w[free]
    dg, ds = g[free] / diag, s[free] / diag
    d[free] = dg - ds * (2.0 * mu * np.dot(s[free], dg)) / (1.0 + 2.0 * mu * np.dot(s[free], ds))
    return d


def _ascend(model, u, mu, w, settings, history):
    """Scaled projected gradient ascent for one penalty weight."""
    beta = model.econ.beta10
    x = simulate_forward(model, u)
    f = _value(model, u, x, mu, w)
    g = _gradient(model, u, x, mu, w)
    pg = float(np.linalg.norm(projected_gradient(u, g)))
    it = 0
    while pg > settings.grad_tol and it < settings.max_iters:
        it += 1
        free = (u > 0.0) | (g > 0.0)
        direction = _scaled_direction(g, free, w, _terminal_sensitivity(model, u, x), beta, mu)
        if np.dot(g, project(u + direction) - u) <= 0.0:
            # the scaled step leaves the projection arc uphill-less; plain metric
            direction = g / (2.0 * beta * w)
        lam = 1.0
        for _ in range(settings.max_backtracks):
            trial = project(u + lam * direction)
            slope = float(np.dot(g, trial - u))
            x_trial = simulate_forward(model, trial)
            f_trial = _value(model, trial, x_trial, mu, w)
            if slope > 0.0 and f_trial >= f + settings.armijo * slope:
                break
            # near the optimum the predicted gain can fall below the resolution
            # of f; then any non-decreasing step is accepted
            if 0.0 < slope <= ROUNDOFF * max(abs(f), 1.0) and f_trial >= f:
                break
            lam *= settings.backtrack
        else:
            # typically the objective change has hit round-off
            logger.info("line search failed (mu=%g, iteration %d, projected gradient %.3e)",
                        mu, it, pg)
            break
        u, x, f = trial, x_trial, f_trial
        g = _gradient(model, u, x, mu, w)
        history.append(f)
        pg = float(np.linalg.norm(projected_gradient(u, g)))
    return u, pg, it


def optimize(model: ModelInstance, settings: TranscriptionSettings | None = None) -> OptimizationReport:
    """Maximise discretised profit over u >= 0 with a terminal-penalty continuation.

    Starts from u = d(t) (zero stock throughout) and warm-starts every penalty
    stage from the previous one.  Failure to converge is reported through the
    flags of the returned :class:`OptimizationReport`, with the last iterate.
    """
    settings = settings or TranscriptionSettings()
    M = settings.intervals
    t = uniform_grid(model.T, M)
    w = trapezoid_weights(M, model.T)
    u = project(demand_at(model.demand, t))
    mu0 = settings.terminal_penalty_schedule[0]
    pg0 = float(np.linalg.norm(projected_gradient(u, gradient(model, u, mu0))))

    history: list[list[float]] = []
    violations = []
    total_iters = 0
    pg = pg0
    for mu in settings.terminal_penalty_schedule:
        history.append([])
        u, pg, it = _ascend(model, u, mu, w, settings, history[-1])
        total_iters += it
        violations.append(abs(float(simulate_forward(model, u)[-1])))
        logger.info("penalty %g: %d iterations, |x(T)| = %.3e, projected gradient %.3e",
                    mu, it, violations[-1], pg)

    x = simulate_forward(model, u)
    traj = Trajectory(t, x, u, demand_at(model.demand, t))
    violation = abs(float(x[-1]))
    converged = pg <= settings.grad_tol and violation <= TERMINAL_TOL
    feasible = bool(x.min() >= -X_FEAS_TOL and u.min() >= 0.0)
    if not converged:
        logger.warning("transcription not converged: projected gradient %.3e, |x(T)| = %.3e",
                       pg, violation)
    return OptimizationReport(
        trajectory=traj,
        profit=_profit(model, u, x, simpson_weights(M, model.T)),
        terminal_violation=violation,
        projected_gradient_norm=pg,
        initial_projected_gradient_norm=pg0,
        iterations=total_iters,
        converged=converged,
        feasible=feasible,
        stage_violations=violations,
        objective_history=history,
    )
