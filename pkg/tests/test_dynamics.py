from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cogbots.dynamics import (
    AttitudeState,
    ControllerGains,
    NumericalBlowUp,
    PlantParams,
    check_turning_gains,
    derivatives,
    max_stable_dt,
    rise_time,
    simulate_response,
    steady_state_theta,
    step,
)

PAPER_PLANT = PlantParams(m=1.0, k=0.1, c=0.0)
INITIAL = ControllerGains(2.5, 0.5)


def _exact(theta0, omega0, gains, plant, theta_ref, t):
    """Closed-form solution of the linear state equations via the matrix exponential."""
    from scipy.linalg import expm

    a = np.array([[0.0, 1.0], [-(gains.k_p + plant.k) / plant.m, -(gains.k_d + plant.c) / plant.m]])
    ss = steady_state_theta(gains, plant, theta_ref)
    x0 = np.array([theta0 - ss, omega0])
    x = expm(a * t) @ x0
    return x[0] + ss, x[1]


def test_equilibrium_at_origin():
    assert derivatives(AttitudeState(0, 0), INITIAL, PAPER_PLANT, 0.0) == (0.0, 0.0)


def test_equilibrium_at_steady_state():
    ss = steady_state_theta(INITIAL, PAPER_PLANT, 0.9)
    dth, dom = derivatives(AttitudeState(ss, 0.0), INITIAL, PAPER_PLANT, 0.9)
    assert dth == 0.0
    assert abs(dom) < 1e-15


def test_initial_acceleration():
    # 2.5 * 0.9 / 1
    _, dom = derivatives(AttitudeState(0, 0), INITIAL, PAPER_PLANT, 0.9)
    assert dom == pytest.approx(2.25, abs=1e-15)


def test_derivative_gain_damps():
    _, dom = derivatives(AttitudeState(0.0, 1.0), ControllerGains(2.5, 0.5), PlantParams(1, 0, 0), 0.0)
    assert dom == pytest.approx(-0.5)


@pytest.mark.parametrize(
    "gains, plant, ref, expected",
    [
        (INITIAL, PlantParams(k=0.0), 0.9, 0.9),
        (INITIAL, PAPER_PLANT, 0.0, 0.0),
        (INITIAL, PAPER_PLANT, 0.9, 2.25 / 2.6),
    ],
)
def test_steady_state(gains, plant, ref, expected):
    assert steady_state_theta(gains, plant, ref) == pytest.approx(expected, abs=1e-15)


def test_steady_state_rejects_zero_denominator():
    with pytest.raises(ValueError):
        steady_state_theta(ControllerGains(0.0, 1.0), PlantParams(k=0.0), 0.5)


def test_step_preserves_fixed_point():
    ss = steady_state_theta(INITIAL, PAPER_PLANT, 0.9)
    out = step(AttitudeState(ss, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.01)
    assert out.theta == pytest.approx(ss, abs=1e-15)
    assert abs(out.omega) < 1e-14


def test_long_horizon_converges_to_analytic_steady_state():
    resp = simulate_response(AttitudeState(0.04, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.01, 40.0)
    assert resp.theta[-1] == pytest.approx(0.8654, abs=1e-3)
    assert abs(resp.theta[-1] - 2.25 / 2.6) < 1e-3


def test_halving_dt_barely_moves_final_theta():
    a = simulate_response(AttitudeState(0.04, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.01, 20.0)
    b = simulate_response(AttitudeState(0.04, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.005, 20.0)
    assert abs(a.theta[-1] - b.theta[-1]) < 1e-6


def test_matches_matrix_exponential():
    gains = ControllerGains(4.75, 2.5)
    resp = simulate_response(AttitudeState(0.04, 0.0), gains, PAPER_PLANT, 0.9, 0.01, 5.0)
    for i in (10, 137, 500):
        th, om = _exact(0.04, 0.0, gains, PAPER_PLANT, 0.9, resp.times[i])
        assert resp.theta[i] == pytest.approx(th, abs=1e-8)
        assert resp.omega[i] == pytest.approx(om, abs=1e-8)


def test_fourth_order_convergence():
    gains = ControllerGains(2.5, 0.5)
    horizon = 4.0
    exact, _ = _exact(0.04, 0.0, gains, PAPER_PLANT, 0.9, horizon)
    errors = []
    for dt in (0.1, 0.05, 0.025):
        resp = simulate_response(AttitudeState(0.04, 0.0), gains, PAPER_PLANT, 0.9, dt, horizon)
        errors.append(abs(resp.theta[-1] - exact))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    for r in ratios:
        assert 12 < r < 20


def test_start_at_equilibrium_is_constant():
    ss = steady_state_theta(INITIAL, PAPER_PLANT, 0.9)
    resp = simulate_response(AttitudeState(ss, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.01, 5.0)
    assert np.max(np.abs(resp.theta - ss)) < 1e-14


def test_paper_scenario_starts_at_initial_angle():
    resp = simulate_response(AttitudeState(0.04, 0.0), INITIAL, PAPER_PLANT, 0.9, 0.01, 1.0)
    assert resp.theta[0] == 0.04
    assert resp.times[0] == 0.0


def test_stronger_gains_settle_faster():
    slow = simulate_response(AttitudeState(0.04, 0.0), ControllerGains(2.5, 0.5), PAPER_PLANT, 0.9, 0.01, 40.0)
    fast = simulate_response(AttitudeState(0.04, 0.0), ControllerGains(7.0, 4.5), PAPER_PLANT, 0.9, 0.01, 40.0)
    assert fast.settling_time() < slow.settling_time()


def test_rise_time_definition():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    th = np.array([0.0, 0.5, 0.95, 1.0])
    assert rise_time(t, th, 1.0) == 2.0
    assert rise_time(t, th * 0.5, 1.0) is None


def test_blow_up_is_signalled():
    with pytest.raises(NumericalBlowUp):
        step(AttitudeState(1e308, 1e308), ControllerGains(9.0, 5.0), PAPER_PLANT, 0.0, 0.01)


def test_stability_bound_is_enforced():
    gains = ControllerGains(9.0, 5.0)
    limit = max_stable_dt(gains, PAPER_PLANT)
    assert 0.1 < limit < 1.0
    with pytest.raises(ValueError, match="stability"):
        simulate_response(AttitudeState(), gains, PAPER_PLANT, 0.9, limit * 1.01, 10.0)


def test_plant_validation():
    for kwargs in ({"m": 0}, {"k": -1}, {"c": -0.1}):
        with pytest.raises(ValueError):
            PlantParams(**kwargs)


def test_turning_gain_check():
    check_turning_gains(ControllerGains(2.5, 0.5), PAPER_PLANT, check_kd=False)
    with pytest.raises(ValueError, match="k_d"):
        check_turning_gains(ControllerGains(2.5, 0.5), PAPER_PLANT)
    with pytest.raises(ValueError, match="k_p"):
        check_turning_gains(ControllerGains(1.0, 3.0), PAPER_PLANT)
    with pytest.raises(ValueError, match="greater than 1"):
        check_turning_gains(ControllerGains(5.0, 5.0), PAPER_PLANT, eps_p=0.5)


@settings(max_examples=30, deadline=None)
@given(st.floats(1.2, 9.0), st.floats(0.2, 5.0), st.floats(-1.5, 1.5), st.floats(-1.0, 1.0))
def test_trajectories_converge_to_steady_state(kp, kd, ref, theta0):
    gains = ControllerGains(kp, kd)
    resp = simulate_response(AttitudeState(theta0, 0.0), gains, PAPER_PLANT, ref, 0.01, 80.0)
    assert abs(resp.theta[-1] - steady_state_theta(gains, PAPER_PLANT, ref)) < 1e-3
    assert math.isfinite(resp.omega[-1])
