"""Closed-form extremals for linear breakage (gamma = 1) and linear holding cost (n = 1).

With ``B(x) = b1*x`` the Euler-Lagrange condition of the profit functional is
the linear ODE

    x'' - b1**2 x = f(t),   f(t) = (a11 + a22 t + a33 t**2) / (2 beta10),

solved by ``A1 e^{b1 t} + B1 e^{-b1 t}`` plus a quadratic particular integral
("model 1a").  For ``b1 = 0`` the equation degenerates to ``x'' = f(t)`` with a
cubic solution ("model 1b").  Profits are obtained by exact integration of the
exponential-polynomial integrand, see :class:`ExpPoly`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .errors import SolverPathError
from .model import ModelInstance, Trajectory, demand_at, uniform_grid, DEFAULT_INTERVALS

#: Smallest admissible b1*T for the exponential solution; below it the
#: boundary system is too ill-conditioned and the b1 = 0 path must be used.
MIN_B1_T = 1e-6


class ExpPoly:
    """A finite sum ``sum_c P_c(t) * exp(c t)`` with polynomial coefficients.

    Closed under addition, multiplication and differentiation, and integrable
    in closed form, which is all the profit functional needs.
    """

    def __init__(self, terms=None):
        self.terms: dict[float, Polynomial] = {}
        for rate, poly in (terms or {}).items():
            if not isinstance(poly, Polynomial):
                poly = Polynomial(poly)
            self._add_term(float(rate), poly)

    @classmethod
    def poly(cls, coef) -> "ExpPoly":
        return cls({0.0: coef})

    @classmethod
    def exp(cls, rate: float, scale: float = 1.0) -> "ExpPoly":
        return cls({rate: [scale]})

    def _add_term(self, rate: float, poly: Polynomial) -> None:
        if rate in self.terms:
            self.terms[rate] = self.terms[rate] + poly
        else:
            self.terms[rate] = poly

    def __add__(self, other):
        if not isinstance(other, ExpPoly):
            other = ExpPoly.poly([other])
        out = ExpPoly(self.terms)
        for rate, poly in other.terms.items():
            out._add_term(rate, poly)
        return out

    __radd__ = __add__

    def __neg__(self):
        return ExpPoly({r: -p for r, p in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ExpPoly):
            return ExpPoly({r: p * other for r, p in self.terms.items()})
        out = ExpPoly()
        for r1, p1 in self.terms.items():
            for r2, p2 in other.terms.items():
                out._add_term(r1 + r2, p1 * p2)
        return out

    __rmul__ = __mul__

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros_like(t)
        for rate, poly in self.terms.items():
            total = total + (poly(t) if rate == 0.0 else poly(t) * np.exp(rate * t))
        return total

    def deriv(self) -> "ExpPoly":
        out = ExpPoly()
        for rate, poly in self.terms.items():
            out._add_term(rate, poly.deriv() + rate * poly)
        return out

    def integrate(self, lo: float, hi: float) -> float:
        """Exact integral over [lo, hi].

        For c != 0 the antiderivative of P(t) e^{ct} is
        e^{ct} * sum_k (-1)**k P^(k)(t) / c**(k+1).
        """
        total = 0.0
        for rate, poly in self.terms.items():
            if rate == 0.0:
                anti = poly.integ()
                total += anti(hi) - anti(lo)
                continue
            anti = Polynomial([0.0])
            dk = poly
            for k in range(poly.degree() + 1):
                anti = anti + ((-1) ** k / rate ** (k + 1)) * dk
                dk = dk.deriv()
            total += anti(hi) * np.exp(rate * hi) - anti(lo) * np.exp(rate * lo)
        return float(total)


@dataclass(frozen=True)
class Model1aCoefficients:
    """Constants of the exponential solution.

    ``u(t) = -(M1 + M2 t + M3 e^{b1 t})``, i.e. ``M3 = -2 A1 b1``.
    """

    a11: float
    a22: float
    a33: float
    C11: float
    A1: float
    B1: float
    M1: float
    M2: float
    M3: float


@dataclass(frozen=True)
class Model1bCoefficients:
    A: float
    B: float


def _linear_profit(model: ModelInstance, x: ExpPoly, u: ExpPoly) -> float:
    econ, T = model.econ, model.T
    d = ExpPoly.poly([model.demand.d1, model.demand.d2, model.demand.d3])
    h = ExpPoly.poly([model.holding.a, model.holding.b])
    C11 = econ.c10 + econ.s2 / T
    fixed = econ.cd + econ.s1 / T
    integrand = econ.p * d - h * x - C11 * u - econ.beta10 * (u * u) - fixed
    return integrand.integrate(0.0, T)


# -- model 1a -----------------------------------------------------------------

def coefficients_1a(model: ModelInstance) -> Model1aCoefficients:
    """Integration constants and composites of the b1 > 0, gamma = 1, n = 1 extremal."""
    b1, gamma = model.breakage.b1, model.breakage.gamma
    if gamma != 1.0 or model.holding.n != 1.0:
        raise SolverPathError("closed form needs gamma = 1 and n = 1")
    if b1 == 0.0:
        raise SolverPathError("b1 = 0: use the no-breakability solution (coefficients_1b)")
    if b1 * model.T < MIN_B1_T:
        raise SolverPathError(
            f"b1*T = {b1 * model.T:g} < {MIN_B1_T:g}: exponential solution is ill-conditioned; "
            "use the b1 = 0 solution")
    dem, hold, econ, T = model.demand, model.holding, model.econ, model.T
    beta = econ.beta10
    C11 = econ.c10 + econ.s2 / T
    a11 = hold.a + b1 * econ.c10 + b1 * econ.s2 / T + 2 * beta * b1 * dem.d1 - 2 * beta * dem.d2
    a22 = hold.b - 4 * beta * dem.d3 + 2 * beta * b1 * dem.d2
    a33 = 2 * beta * b1 * dem.d3

    shift = a33 / (b1 ** 4 * beta)
    f0 = a11 / (2 * beta)
    fT = (a11 + a22 * T + a33 * T * T) / (2 * beta)
    lhs = np.array([[1.0, 1.0], [np.exp(b1 * T), np.exp(-b1 * T)]])
    rhs = np.array([f0 / b1 ** 2 + shift, fT / b1 ** 2 + shift])
    A1, B1 = np.linalg.solve(lhs, rhs)

    M1 = a22 / (2 * b1 ** 2 * beta) + a11 / (2 * b1 * beta) + a33 / (b1 ** 3 * beta) - dem.d1
    M2 = a33 / (b1 ** 2 * beta) + a22 / (2 * b1 * beta) - dem.d2
    M3 = -2 * A1 * b1
    return Model1aCoefficients(a11=a11, a22=a22, a33=a33, C11=C11,
                               A1=float(A1), B1=float(B1), M1=M1, M2=M2, M3=M3)


def forcing_1a(coeffs: Model1aCoefficients, model: ModelInstance, t):
    """Right-hand side f(t) of x'' - b1**2 x = f(t)."""
    return (coeffs.a11 + coeffs.a22 * t + coeffs.a33 * t * t) / (2 * model.econ.beta10)


def stock_expression_1a(coeffs: Model1aCoefficients, model: ModelInstance) -> ExpPoly:
    b1, beta = model.breakage.b1, model.econ.beta10
    particular = -np.array([coeffs.a11, coeffs.a22, coeffs.a33]) / (2 * beta * b1 ** 2)
    particular[0] -= coeffs.a33 / (b1 ** 4 * beta)
    return (ExpPoly.exp(b1, coeffs.A1) + ExpPoly.exp(-b1, coeffs.B1)
            + ExpPoly.poly(particular))


def control_expression_1a(coeffs: Model1aCoefficients, model: ModelInstance) -> ExpPoly:
    return ExpPoly.exp(model.breakage.b1, -coeffs.M3) - ExpPoly.poly([coeffs.M1, coeffs.M2])


def x_1a(coeffs: Model1aCoefficients, model: ModelInstance, t):
    b1, beta = model.breakage.b1, model.econ.beta10
    t = np.asarray(t, dtype=float)
    return (coeffs.A1 * np.exp(b1 * t) + coeffs.B1 * np.exp(-b1 * t)
            - forcing_1a(coeffs, model, t) / b1 ** 2 - coeffs.a33 / (b1 ** 4 * beta))


def u_1a(coeffs: Model1aCoefficients, model: ModelInstance, t):
    t = np.asarray(t, dtype=float)
    return 2 * coeffs.A1 * model.breakage.b1 * np.exp(model.breakage.b1 * t) - coeffs.M1 - coeffs.M2 * t


def profit_1a(coeffs: Model1aCoefficients, model: ModelInstance) -> float:
    return _linear_profit(model, stock_expression_1a(coeffs, model),
                          control_expression_1a(coeffs, model))


# -- model 1b -----------------------------------------------------------------

def _cubic_terms(model: ModelInstance) -> tuple[float, float]:
    # x'' = k2 - k3 t  with  k2 = a/(2 beta) - d2,  k3 = 2 d3 - b/(2 beta)
    beta = model.econ.beta10
    k2 = model.holding.a / (2 * beta) - model.demand.d2
    k3 = 2 * model.demand.d3 - model.holding.b / (2 * beta)
    return k2, k3


def coefficients_1b(model: ModelInstance) -> Model1bCoefficients:
    """Constants of the cubic extremal without breakage, from x(0) = x(T) = 0."""
    if model.breakage.b1 != 0.0:
        raise SolverPathError("cubic solution requires b1 = 0")
    if model.holding.n != 1.0:
        raise SolverPathError("cubic solution requires n = 1")
    k2, k3 = _cubic_terms(model)
    T = model.T
    return Model1bCoefficients(A=0.0, B=k3 * T * T / 6 - k2 * T / 2)


def forcing_1b(model: ModelInstance, t):
    k2, k3 = _cubic_terms(model)
    return k2 - k3 * np.asarray(t, dtype=float)


def stock_expression_1b(coeffs: Model1bCoefficients, model: ModelInstance) -> ExpPoly:
    k2, k3 = _cubic_terms(model)
    return ExpPoly.poly([coeffs.A, coeffs.B, k2 / 2, -k3 / 6])


def control_expression_1b(coeffs: Model1bCoefficients, model: ModelInstance) -> ExpPoly:
    half = 1.0 / (2 * model.econ.beta10)
    return ExpPoly.poly([coeffs.B + model.demand.d1, model.holding.a * half, model.holding.b * half / 2])


def x_1b(coeffs: Model1bCoefficients, model: ModelInstance, t):
    k2, k3 = _cubic_terms(model)
    t = np.asarray(t, dtype=float)
    return coeffs.A + coeffs.B * t + k2 * t ** 2 / 2 - k3 * t ** 3 / 6


def u_1b(coeffs: Model1bCoefficients, model: ModelInstance, t):
    beta = model.econ.beta10
    t = np.asarray(t, dtype=float)
    return (coeffs.B + model.demand.d1 + model.holding.a / (2 * beta) * t
            + model.holding.b / (2 * beta) * t ** 2 / 2)


def profit_1b(coeffs: Model1bCoefficients, model: ModelInstance) -> float:
    return _linear_profit(model, stock_expression_1b(coeffs, model),
                          control_expression_1b(coeffs, model))


# -- sampled trajectories -------------------------------------------------------

def trajectory_1a(model: ModelInstance, times=None) -> Trajectory:
    coeffs = coefficients_1a(model)
    times = uniform_grid(model.T, DEFAULT_INTERVALS) if times is None else np.asarray(times, float)
    x = x_1a(coeffs, model, times)
    # pin the boundary values the closed form satisfies up to round-off
    x[0] = 0.0
    if times[-1] == model.T:
        x[-1] = 0.0
    return Trajectory(times, x, u_1a(coeffs, model, times), demand_at(model.demand, times))


def trajectory_1b(model: ModelInstance, times=None) -> Trajectory:
    coeffs = coefficients_1b(model)
    times = uniform_grid(model.T, DEFAULT_INTERVALS) if times is None else np.asarray(times, float)
    x = x_1b(coeffs, model, times)
    x[0] = 0.0
    if times[-1] == model.T:
        x[-1] = 0.0
    return Trajectory(times, x, u_1b(coeffs, model, times), demand_at(model.demand, times))
