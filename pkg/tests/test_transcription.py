from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from breakprod import analytic as an
from breakprod import transcription as tr
from breakprod.errors import ParameterError
from breakprod.model import demand_at, table1_instance, uniform_grid

M = 1200
T_GRID = uniform_grid(12.0, M)


def fd_check(model, u, mu, coords, eps=1e-3):
    g = tr.gradient(model, u, mu)
    errs = []
    for k in coords:
        e = np.zeros_like(u)
        e[k] = eps
        fd = (tr.objective(model, u + e, mu) - tr.objective(model, u - e, mu)) / (2 * eps)
        errs.append(abs(fd - g[k]) / max(abs(g[k]), 1e-12))
    return np.array(errs)


@pytest.mark.parametrize("gamma, b1", [(1.0, 0.02), (2.0, 0.001)])
def test_adjoint_matches_finite_differences(gamma, b1):
    m = table1_instance(b1).with_params(gamma=gamma)
    rng = np.random.default_rng(11)
    u = demand_at(m.demand, T_GRID) + 40.0 + rng.uniform(-5, 5, M + 1)
    coords = rng.choice(M + 1, size=20, replace=False)
    assert np.max(fd_check(m, u, 1e3, coords)) < 1e-5


def test_beta_term_of_gradient(model_b0):
    u = demand_at(model_b0.demand, T_GRID) + 10.0
    w = tr.trapezoid_weights(M, 12.0)
    g0 = tr.gradient(model_b0, u)
    for k, du in [(0, 1.0), (317, 2.5), (M, -0.5)]:
        v = u.copy()
        v[k] += du
        diff = tr.gradient(model_b0, v) - g0
        expected = np.zeros_like(u)
        expected[k] = -2 * model_b0.econ.beta10 * du * w[k]
        np.testing.assert_allclose(diff, expected, atol=1e-12)


def test_stationary_at_cubic_extremal(model_b0):
    u = an.u_1b(an.coefficients_1b(model_b0), model_b0, T_GRID)
    g = tr.gradient(model_b0, u)
    s = tr.terminal_sensitivity(model_b0, u)
    # the terminal condition is a constraint here: remove its normal direction
    reduced = g - (g @ s) / (s @ s) * s
    g_zero = tr.gradient(model_b0, np.zeros(M + 1))
    assert np.linalg.norm(tr.projected_gradient(u, reduced)) < 1e-3 * np.linalg.norm(g_zero)


def test_simulate_forward_examples(model, model_b0):
    for b1 in (0.0, 0.02, 0.3):
        m = table1_instance(b1)
        np.testing.assert_allclose(tr.simulate_forward(m, demand_at(m.demand, T_GRID)), 0.0, atol=1e-9)
    c = an.coefficients_1a(model)
    x = tr.simulate_forward(model, an.u_1a(c, model, T_GRID))
    assert np.max(np.abs(x - an.x_1a(c, model, T_GRID))) < 0.1
    cb = an.coefficients_1b(model_b0)
    x = tr.simulate_forward(model_b0, an.u_1b(cb, model_b0, T_GRID))
    # trapezoid error on the cubic is (h^2/12) * T * |k3| = 3.8e-4
    assert np.max(np.abs(x - an.x_1b(cb, model_b0, T_GRID))) < 5e-4


def test_quadratic_step_solver_matches_newton():
    m = table1_instance(0.01).with_params(gamma=2.0)
    solve = tr._step_solver(m, 0.005)
    r = np.linspace(-5.0, 800.0, 50)
    y = np.array([solve(v) for v in r])
    np.testing.assert_allclose(y + 0.005 * 0.01 * np.maximum(y, 0) ** 2, r, rtol=1e-13, atol=1e-12)


def test_objective_zero_plan(model):
    # u = 0 runs the stock negative: x = -D(t), and -h x adds holding revenue
    D = lambda s: 7 * s + 2 * s ** 2 + 2 * s ** 3 / 3  # noqa: E731
    exact = 303590 + quad(lambda s: (3 + 0.2 * s) * D(s), 0, 12)[0]
    assert tr.objective(model, np.zeros(M + 1)) == pytest.approx(exact, rel=1e-6)


def test_objective_at_model_1a(model):
    u = an.u_1a(an.coefficients_1a(model), model, T_GRID)
    assert tr.objective(model, u, rule="simpson") == pytest.approx(180913.30, rel=0.01)
    assert tr.objective(model, u, rule="simpson") == pytest.approx(180853.279, rel=1e-5)


def test_settings_validation():
    with pytest.raises(ParameterError):
        tr.TranscriptionSettings(intervals=6)
    with pytest.raises(ParameterError):
        tr.TranscriptionSettings(terminal_penalty_schedule=(10.0, 10.0))
    with pytest.raises(ParameterError):
        tr.TranscriptionSettings(grad_tol=0.0)


@given(st.lists(st.floats(-100, 100), min_size=3, max_size=30))
def test_projection_idempotent(values):
    u = tr.project(values)
    assert np.all(u >= 0)
    np.testing.assert_array_equal(tr.project(u), u)


@pytest.fixture(scope="module")
def report_1a():
    return tr.optimize(table1_instance(0.02))


def test_optimize_model_1a(report_1a):
    r = report_1a
    assert r.converged and r.feasible
    m = table1_instance(0.02)
    c = an.coefficients_1a(m)
    assert r.profit == pytest.approx(an.profit_1a(c, m), rel=1e-3)
    assert r.profit == pytest.approx(180913.30, rel=0.01)
    assert np.max(np.abs(r.trajectory.u - an.u_1a(c, m, r.trajectory.times))) < 2.0
    assert r.projected_gradient_norm <= 1e-2 * r.initial_projected_gradient_norm
    assert r.terminal_violation <= tr.TERMINAL_TOL


def test_optimizer_histories(report_1a):
    for stage in report_1a.objective_history:
        assert np.all(np.diff(stage) >= 0)
    v = report_1a.stage_violations
    assert all(b <= a for a, b in zip(v, v[1:]))


def test_optimize_no_breakage(model_b0):
    r = tr.optimize(model_b0)
    assert r.ok
    assert r.profit == pytest.approx(an.profit_1b(an.coefficients_1b(model_b0), model_b0), rel=1e-3)


def test_constant_control_without_time_variation():
    # a > 0 is required; with a tiny a the optimal rate drifts by a/(2 beta) per unit time
    m = table1_instance(0.0).with_params(a=1e-3, b=0.0, d2=0.0, d3=0.0)
    r = tr.optimize(m)
    assert r.converged
    u = r.trajectory.u
    assert np.ptp(u) < 0.1
    slope = np.polyfit(r.trajectory.times, u, 1)[0]
    assert slope == pytest.approx(m.holding.a / (2 * m.econ.beta10), rel=1e-2)


def test_non_convergence_is_flagged(model):
    r = tr.optimize(model, tr.TranscriptionSettings(max_iters=1, terminal_penalty_schedule=(10.0,)))
    assert not r.converged and not r.ok
