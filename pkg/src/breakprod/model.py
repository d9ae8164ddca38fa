"""Model parameters and the primitive functions of the production-inventory problem.

The stock level ``x(t)`` of a breakable item evolves as

    dx/dt = u(t) - d(t) - B(x),      x(0) = x(T) = 0,

with quadratic demand ``d``, stock-dependent breakage ``B(x) = b1 * x**gamma``
and production rate ``u``.  Profit per unit time is revenue ``p * d(t)`` minus
holding, production and set-up costs.  Every function here accepts scalars or
numpy arrays.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Mapping

import numpy as np
from scipy.integrate import simpson

from .errors import InfeasibleStateError, ParameterError

#: Feasibility tolerance (units) for the x >= 0 and u >= 0 checks.
TOL_FEAS = 1e-9

#: Default number of uniform intervals for trajectory evaluation.
DEFAULT_INTERVALS = 1200


@dataclass(frozen=True)
class DemandPoly:
    d1: float
    d2: float
    d3: float


@dataclass(frozen=True)
class HoldingCostLaw:
    a: float
    b: float
    n: float = 1.0


@dataclass(frozen=True)
class BreakabilityLaw:
    b1: float
    gamma: float = 1.0


@dataclass(frozen=True)
class EconomicParams:
    c10: float
    L: float
    N: float
    beta10: float
    s1: float
    s2: float
    p: float

    @property
    def cd(self) -> float:
        """Development cost N + L."""
        return self.N + self.L


@dataclass(frozen=True)
class ModelInstance:
    """One planning problem: demand, costs, breakage law and horizon ``T``.

    Boundary conditions ``x(0) = x(T) = 0`` are implied for every problem
    built from an instance.  Construction validates all parameter domains.
    """

    demand: DemandPoly
    holding: HoldingCostLaw
    breakage: BreakabilityLaw
    econ: EconomicParams
    T: float

    def __post_init__(self) -> None:
        if not np.isfinite(self.T) or self.T <= 0:
            raise ParameterError(f"T must be positive, got {self.T}")
        for group in (self.demand, self.holding, self.breakage, self.econ):
            for f in fields(group):
                value = getattr(group, f.name)
                if not np.isfinite(value):
                    raise ParameterError(f"{f.name} must be finite, got {value}")
        for f in fields(self.econ):
            if getattr(self.econ, f.name) < 0:
                raise ParameterError(f"{f.name} must be >= 0")
        if self.econ.beta10 <= 0:
            raise ParameterError("beta10 must be > 0")
        if self.breakage.b1 < 0:
            raise ParameterError(f"b1 must be >= 0 (negative breakability), got {self.breakage.b1}")
        if self.breakage.gamma <= 0:
            raise ParameterError("gamma must be > 0")
        if self.holding.a <= 0:
            raise ParameterError("a must be > 0")
        if self.holding.n < 0:
            raise ParameterError("n must be >= 0")
        # t**n is monotone on [0, T], so the endpoints bound h.
        if min(holding_cost_at(self.holding, 0.0), holding_cost_at(self.holding, self.T)) < 0:
            raise ParameterError("holding cost a + b*t**n is negative on [0, T]")
        checkpoints = [0.0, self.T]
        d2, d3 = self.demand.d2, self.demand.d3
        if d3 != 0:
            vertex = -d2 / (2 * d3)
            if 0 < vertex < self.T:
                checkpoints.append(vertex)
        if min(demand_at(self.demand, t) for t in checkpoints) < 0:
            raise ParameterError("demand d1 + d2*t + d3*t**2 is negative on [0, T]")

    # flat parameter view, keyed like the config file
    def to_flat(self) -> dict[str, float]:
        flat: dict[str, float] = {"T": self.T}
        for group in (self.demand, self.holding, self.breakage, self.econ):
            flat.update(asdict(group))
        return flat

    @classmethod
    def from_flat(cls, params: Mapping[str, float]) -> "ModelInstance":
        def pick(kind):
            return kind(**{f.name: float(params[f.name]) for f in fields(kind)})

        return cls(
            demand=pick(DemandPoly),
            holding=pick(HoldingCostLaw),
            breakage=pick(BreakabilityLaw),
            econ=pick(EconomicParams),
            T=float(params["T"]),
        )

    def with_params(self, **changes: float) -> "ModelInstance":
        """Return a copy with flat parameters (``b1=0.11``, ``T=10``, ...) replaced."""
        flat = self.to_flat()
        unknown = set(changes) - set(flat)
        if unknown:
            raise ParameterError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        flat.update(changes)
        return ModelInstance.from_flat(flat)


#: Flat parameter names in a fixed order.
PARAMETER_NAMES = ("L", "N", "c10", "beta10", "p", "s1", "s2", "a", "b", "n",
                   "d1", "d2", "d3", "T", "b1", "gamma")


def table1_instance(b1: float = 0.02) -> ModelInstance:
    """The reference numerical instance (L=40, N=60, c10=0.7, ...) with given ``b1``."""
    return ModelInstance(
        demand=DemandPoly(d1=7.0, d2=4.0, d3=2.0),
        holding=HoldingCostLaw(a=3.0, b=0.2, n=1.0),
        breakage=BreakabilityLaw(b1=b1, gamma=1.0),
        econ=EconomicParams(c10=0.7, L=40.0, N=60.0, beta10=0.5, s1=10.0, s2=3.0, p=200.0),
        T=12.0,
    )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of stock ``x``, production ``u`` and demand ``d`` on a time grid.

    Structural invariants (ordering, endpoints, lengths) are enforced here;
    sign feasibility is checked with :meth:`is_feasible` so that solvers can
    still return, and flag, infeasible iterates.
    """

    times: np.ndarray
    x: np.ndarray
    u: np.ndarray
    d: np.ndarray

    def __post_init__(self) -> None:
        for name in ("times", "x", "u", "d"):
            arr = np.array(getattr(self, name), dtype=float)
            if arr.ndim != 1:
                raise ValueError(f"{name} must be one-dimensional")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = len(self.times)
        if n < 2:
            raise ValueError("a trajectory needs at least two samples")
        if not (len(self.x) == len(self.u) == len(self.d) == n):
            raise ValueError("times, x, u, d must have equal length")
        if self.times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def is_feasible(self, tol: float = TOL_FEAS) -> bool:
        return bool(np.all(self.x >= -tol) and np.all(self.u >= -tol))

    def sample(self, times) -> "Trajectory":
        """Linear interpolation onto ``times`` (which must start at 0)."""
        times = np.asarray(times, dtype=float)
        return Trajectory(
            times,
            np.interp(times, self.times, self.x),
            np.interp(times, self.times, self.u),
            np.interp(times, self.times, self.d),
        )


def uniform_grid(T: float, intervals: int = DEFAULT_INTERVALS) -> np.ndarray:
    return np.linspace(0.0, T, intervals + 1)


def simpson_weights(intervals: int, T: float) -> np.ndarray:
    """Composite Simpson weights for ``intervals`` (even) uniform subintervals of [0, T]."""
    if intervals < 2 or intervals % 2:
        raise ValueError("Simpson's rule needs an even number of intervals >= 2")
    w = np.ones(intervals + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * (T / intervals) / 3.0


def _check_state(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < -TOL_FEAS):
        raise InfeasibleStateError(f"stock level must be >= 0, got min {np.min(x):g}")
    return np.maximum(x, 0.0)


def demand_at(demand: DemandPoly, t):
    return demand.d1 + demand.d2 * t + demand.d3 * t * t


def demand_rate_of_change(demand: DemandPoly, t):
    return demand.d2 + 2.0 * demand.d3 * t


def holding_cost_at(law: HoldingCostLaw, t):
    # numpy defines 0.0**0 == 1, which gives h(0) = a + b for n = 0
    return law.a + law.b * np.power(t, law.n)


def breakability_at(law: BreakabilityLaw, x):
    return law.b1 * np.power(_check_state(x), law.gamma)


def breakability_slope(law: BreakabilityLaw, x, floor: float = 0.0):
    """dB/dx = b1 * gamma * x**(gamma - 1), with ``x`` floored at ``floor``.

    No sign check: callers decide how to treat negative stock.
    """
    x = np.maximum(np.asarray(x, dtype=float), floor)
    if law.gamma == 1.0:
        return np.full_like(x, law.b1)
    with np.errstate(divide="ignore"):
        return law.b1 * law.gamma * np.power(x, law.gamma - 1.0)


def production_cost_rate(econ: EconomicParams, u):
    """Total production cost per unit time, c10*u + (N + L) + beta10*u**2."""
    return econ.c10 * u + econ.cd + econ.beta10 * u * u


def setup_cost_rate(econ: EconomicParams, u, T: float):
    if T <= 0:
        raise ParameterError(f"T must be positive, got {T}")
    return (econ.s1 + econ.s2 * u) / T


def state_rhs(model: ModelInstance, t, x, u):
    """Stock derivative u - d(t) - B(x)."""
    return u - demand_at(model.demand, t) - breakability_at(model.breakage, x)


def recover_control(model: ModelInstance, t, x, xdot):
    """Production rate that realises stock slope ``xdot``: xdot + d(t) + B(x)."""
    return xdot + demand_at(model.demand, t) + breakability_at(model.breakage, x)


def _integrand(model: ModelInstance, t, x, u):
    econ = model.econ
    return (econ.p * demand_at(model.demand, t)
            - holding_cost_at(model.holding, t) * x
            - production_cost_rate(econ, u)
            - setup_cost_rate(econ, u, model.T))


def profit_integrand(model: ModelInstance, t, x, u):
    """Instantaneous profit rate p*d - h*x - production cost - set-up cost."""
    x = _check_state(x)
    if np.any(np.asarray(u) < -TOL_FEAS):
        raise InfeasibleStateError("production rate must be >= 0")
    return _integrand(model, t, x, u)


def profit_of_trajectory(model: ModelInstance, traj: Trajectory) -> float:
    """Total profit over [0, T] by composite Simpson quadrature of the integrand."""
    if len(traj.times) < 3:
        raise ValueError("profit quadrature needs at least 3 grid points")
    if not np.isclose(traj.T, model.T, rtol=1e-12, atol=1e-12):
        raise ValueError(f"trajectory ends at {traj.T}, model horizon is {model.T}")
    values = _integrand(model, traj.times, traj.x, traj.u)
    return float(simpson(values, x=traj.times))


def dynamics_residual(model: ModelInstance, traj: Trajectory) -> float:
    """Max interior mismatch between central-difference dx/dt and u - d - B(x)."""
    t, x = traj.times, traj.x
    if len(t) < 3:
        return 0.0
    slope = (x[2:] - x[:-2]) / (t[2:] - t[:-2])
    rhs = state_rhs(model, t[1:-1], x[1:-1], traj.u[1:-1])
    return float(np.max(np.abs(slope - rhs)))
