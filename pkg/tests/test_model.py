from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from breakprod import analytic
from breakprod.errors import InfeasibleStateError, ParameterError
from breakprod.model import (
    PARAMETER_NAMES,
    BreakabilityLaw,
    DemandPoly,
    HoldingCostLaw,
    ModelInstance,
    Trajectory,
    breakability_at,
    demand_at,
    dynamics_residual,
    holding_cost_at,
    production_cost_rate,
    profit_integrand,
    profit_of_trajectory,
    recover_control,
    setup_cost_rate,
    simpson_weights,
    state_rhs,
    table1_instance,
    uniform_grid,
)

DEMAND = DemandPoly(7, 4, 2)


def test_demand_examples():
    np.testing.assert_allclose(demand_at(DEMAND, np.array([0.0, 1.0, 12.0])), [7, 13, 343])


def test_holding_cost_examples():
    assert holding_cost_at(HoldingCostLaw(3, 0.2, 1), 0.0) == 3
    assert holding_cost_at(HoldingCostLaw(3, 0.2, 1), 5.0) == pytest.approx(4)
    np.testing.assert_allclose(holding_cost_at(HoldingCostLaw(3, 0, 1), np.linspace(0, 12, 7)), 3)
    # 0**0 = 1: n = 0 gives the constant a + b
    assert holding_cost_at(HoldingCostLaw(3, 0.2, 0), 0.0) == pytest.approx(3.2)


def test_breakability_examples():
    assert breakability_at(BreakabilityLaw(0.02, 1), 0.0) == 0
    assert breakability_at(BreakabilityLaw(0.02, 1), 100.0) == pytest.approx(2)
    assert breakability_at(BreakabilityLaw(0.0, 1), 350.0) == 0


def test_cost_rate_examples(model):
    econ = model.econ
    assert econ.cd == 100
    assert production_cost_rate(econ, 0.0) == pytest.approx(100)
    assert production_cost_rate(econ, 100.0) == pytest.approx(5170)
    assert production_cost_rate(econ, 1.0) == pytest.approx(101.2)
    assert setup_cost_rate(econ, 0.0, 12) == pytest.approx(10 / 12)
    assert setup_cost_rate(econ, 100.0, 12) == pytest.approx(310 / 12)
    zero = model.with_params(s1=0, s2=0).econ
    assert setup_cost_rate(zero, 50.0, 12) == 0


def test_state_rhs_and_recovery(model, model_b0):
    assert state_rhs(model, 0.0, 0.0, 94.98) == pytest.approx(87.98)
    assert state_rhs(model_b0, 0.0, 0.0, 104.20) == pytest.approx(97.20)
    assert recover_control(model_b0, 0.0, 0.0, 97.2) == pytest.approx(104.2)
    assert recover_control(model, 0.0, 0.0, 0.0) == pytest.approx(7)
    t, x = 3.0, 120.0
    assert state_rhs(model, t, x, demand_at(model.demand, t) + 0.02 * x) == pytest.approx(0, abs=1e-12)


def test_profit_integrand_examples(model):
    assert profit_integrand(model, 0.0, 0.0, 0.0) == pytest.approx(1299.1666666666667)
    u = 94.98
    expected = 200 * 7 - (0.7 * u + 100 + 0.5 * u * u) - (10 + 3 * u) / 12
    assert profit_integrand(model, 0.0, 0.0, u) == pytest.approx(expected)
    empty = model.with_params(p=0, s1=0, N=0, L=0)
    assert profit_integrand(empty, 0.0, 0.0, 0.0) == 0


def test_infeasible_state_rejected(model):
    with pytest.raises(InfeasibleStateError):
        profit_integrand(model, 1.0, -1.0, 10.0)


def test_zero_plan_profit(model):
    # x = 0, u = 0 is not a plan the dynamics allow, but the functional is well-defined
    t = uniform_grid(model.T, 1200)
    traj = Trajectory(t, np.zeros_like(t), np.zeros_like(t), demand_at(model.demand, t))
    assert profit_of_trajectory(model, traj) == pytest.approx(303590, rel=1e-12)


def test_simpson_exact_on_cubic_holding_cost(model_b0):
    # constant h keeps h*x cubic; a linear h makes it quartic and Simpson is then only O(h^4)
    m0 = model_b0.with_params(b=0.0)
    c = analytic.coefficients_1b(m0)
    exact = 3.0 * analytic.stock_expression_1b(c, m0).integrate(0, 12)
    for m in (2, 4, 10, 64):
        t = uniform_grid(12, m)
        h = holding_cost_at(m0.holding, t) * analytic.x_1b(c, m0, t)
        np.testing.assert_allclose(simpson_weights(m, 12) @ h, exact, rtol=1e-13)


def test_simpson_fourth_order_on_quartic(model_b0):
    c = analytic.coefficients_1b(model_b0)
    exact = (analytic.stock_expression_1b(c, model_b0)
             * analytic.ExpPoly.poly([3.0, 0.2])).integrate(0, 12)
    errs = []
    for m in (8, 16, 32):
        t = uniform_grid(12, m)
        h = holding_cost_at(model_b0.holding, t) * analytic.x_1b(c, model_b0, t)
        errs.append(abs(simpson_weights(m, 12) @ h - exact))
    np.testing.assert_allclose(np.array(errs[:-1]) / errs[1:], 16, rtol=1e-6)


def test_dynamics_residual_examples(model):
    traj = analytic.trajectory_1a(model, uniform_grid(model.T, 1200))
    assert dynamics_residual(model, traj) < 1e-3
    u = np.array(traj.u)
    u[600] += 1.0
    bumped = Trajectory(traj.times, traj.x, u, traj.d)
    assert dynamics_residual(model, bumped) >= 1 - 1e-2
    steady = Trajectory(traj.times, np.zeros(1201), traj.d, traj.d)
    assert dynamics_residual(model, steady) < 1e-9


def test_invalid_instances():
    base = table1_instance()
    with pytest.raises(ParameterError, match="breakab"):
        base.with_params(b1=-0.1)
    with pytest.raises(ParameterError):
        base.with_params(beta10=0.0)
    with pytest.raises(ParameterError):
        base.with_params(T=0.0)
    with pytest.raises(ParameterError):
        base.with_params(a=0.0)
    # demand dips below zero at the vertex of the quadratic
    with pytest.raises(ParameterError):
        base.with_params(d1=1.0, d2=-4.0, d3=1.0)


def test_trajectory_structure():
    with pytest.raises(ValueError):
        Trajectory([0.0, 1.0, 1.0], [0, 1, 0], [1, 1, 1], [1, 1, 1])
    with pytest.raises(ValueError):
        Trajectory([0.5, 1.0], [0, 0], [1, 1], [1, 1])
    traj = Trajectory([0.0, 1.0], [0.0, -1e-12], [1.0, 1.0], [1.0, 1.0])
    assert traj.is_feasible()
    assert not Trajectory([0.0, 1.0], [0.0, -1e-3], [1.0, 1.0], [1.0, 1.0]).is_feasible()


def test_flat_round_trip():
    m = table1_instance(0.05)
    flat = m.to_flat()
    assert set(flat) == set(PARAMETER_NAMES)
    assert ModelInstance.from_flat(flat) == m


@settings(max_examples=200, deadline=None)
@given(t=st.floats(0, 12), x=st.floats(0, 1e3), u=st.floats(0, 1e3),
       b1=st.floats(0, 0.5), gamma=st.floats(0.2, 3))
def test_recover_control_inverts_state_rhs(t, x, u, b1, gamma):
    m = table1_instance(0.02).with_params(b1=b1, gamma=gamma)
    xdot = state_rhs(m, t, x, u)
    scale = abs(xdot) + breakability_at(m.breakage, x) + demand_at(m.demand, t)
    assert recover_control(m, t, x, xdot) == pytest.approx(u, abs=1e-14 * scale + 1e-12)


@settings(max_examples=50, deadline=None)
@given(p=st.floats(1, 500))
def test_profit_linear_in_price(p):
    m = table1_instance(0.02)
    traj = analytic.trajectory_1a(m, uniform_grid(12, 1200))
    j1 = profit_of_trajectory(m.with_params(p=p), traj)
    j2 = profit_of_trajectory(m.with_params(p=2 * p), traj)
    revenue = p * (7 * 12 + 2 * 144 + 2 * 1728 / 3)
    assert j2 - j1 == pytest.approx(revenue, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(["a", "b", "c10", "beta10", "s1", "s2", "N", "L"]),
       bump=st.floats(1e-3, 5))
def test_profit_decreases_in_costs(name, bump):
    m = table1_instance(0.02)
    traj = analytic.trajectory_1a(m, uniform_grid(12, 240))
    base = profit_of_trajectory(m, traj)
    value = m.to_flat()[name] + bump
    assert profit_of_trajectory(m.with_params(**{name: value}), traj) < base


@given(b1=st.floats(0, 2), gamma=st.floats(0.05, 4),
       xs=st.lists(st.floats(0, 1e4), min_size=2, max_size=20))
def test_breakability_nondecreasing(b1, gamma, xs):
    values = breakability_at(BreakabilityLaw(b1, gamma), np.sort(np.array(xs)))
    assert np.all(np.diff(values) >= 0)
