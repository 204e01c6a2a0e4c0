"""Rotational spring-damper plant under PD heading control.

State equations::

    dtheta/dt = omega
    domega/dt = (-(k_d + c) * omega - (k_p + k) * theta + k_p * theta_ref) / m

The derivative gain enters as damping (``-k_d * omega``). Writing the PD law
with ``+k_d * omega`` would make the closed loop unstable, so the damping sign
of the state equation above is the one implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Real-axis / imaginary-axis stability limits of classical RK4 are ~2.785 and
# ~2.828; stay below both.
RK4_STABILITY_RADIUS = 2.7


class NumericalBlowUp(ArithmeticError):
    """Raised when integration produces a non-finite state."""


@dataclass(frozen=True)
class AttitudeState:
    theta: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class PlantParams:
    m: float = 1.0
    k: float = 0.1
    c: float = 0.0

    def __post_init__(self) -> None:
        if not self.m > 0:
            raise ValueError("inertia m must be positive")
        if self.k < 0 or self.c < 0:
            raise ValueError("spring k and damping c must be non-negative")


@dataclass(frozen=True)
class ControllerGains:
    k_p: float
    k_d: float


def check_turning_gains(gains: ControllerGains, plant: PlantParams, eps_p: float = 1.05,
                        eps_d: float = 1.05, check_kd: bool = True) -> None:
    """Validate that the gains can overcome the spring and turn the robot.

    Requires ``k_p > k + eps_p`` and, unless ``check_kd`` is false,
    ``k_d > k + eps_d``. Both margins must exceed 1.
    """
    if eps_p <= 1 or eps_d <= 1:
        raise ValueError("turning margins must be greater than 1")
    if not gains.k_p > plant.k + eps_p:
        raise ValueError(f"k_p={gains.k_p} must exceed k + eps_p = {plant.k + eps_p}")
    if check_kd and not gains.k_d > plant.k + eps_d:
        raise ValueError(f"k_d={gains.k_d} must exceed k + eps_d = {plant.k + eps_d}")


def derivatives(state: AttitudeState, gains: ControllerGains, plant: PlantParams,
                theta_ref: float) -> tuple[float, float]:
    domega = (-(gains.k_d + plant.c) * state.omega
              - (gains.k_p + plant.k) * state.theta
              + gains.k_p * theta_ref) / plant.m
    return state.omega, domega


def max_stable_dt(gains: ControllerGains, plant: PlantParams) -> float:
    a = np.array([[0.0, 1.0],
                  [-(gains.k_p + plant.k) / plant.m, -(gains.k_d + plant.c) / plant.m]])
    radius = float(np.max(np.abs(np.linalg.eigvals(a))))
    return math.inf if radius == 0 else RK4_STABILITY_RADIUS / radius


def step(state: AttitudeState, gains: ControllerGains, plant: PlantParams,
         theta_ref: float, dt: float) -> AttitudeState:
    """One classical fourth-order Runge-Kutta step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    th, om = state.theta, state.omega
    kp, kd, k, c, m = gains.k_p, gains.k_d, plant.k, plant.c, plant.m

    def f(t: float, w: float) -> tuple[float, float]:
        return w, (-(kd + c) * w - (kp + k) * t + kp * theta_ref) / m

    a1, b1 = f(th, om)
    a2, b2 = f(th + 0.5 * dt * a1, om + 0.5 * dt * b1)
    a3, b3 = f(th + 0.5 * dt * a2, om + 0.5 * dt * b2)
    a4, b4 = f(th + dt * a3, om + dt * b3)
    th_new = th + dt / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
    om_new = om + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
    if not (math.isfinite(th_new) and math.isfinite(om_new)):
        raise NumericalBlowUp(
            f"non-finite attitude after step: theta={th_new}, omega={om_new} "
            f"(from theta={th}, omega={om}, gains={gains}, dt={dt})"
        )
    return AttitudeState(th_new, om_new)


def steady_state_theta(gains: ControllerGains, plant: PlantParams, theta_ref: float) -> float:
    denom = gains.k_p + plant.k
    if denom == 0:
        raise ValueError("k_p + k must be non-zero")
    return gains.k_p * theta_ref / denom


@dataclass
class Response:
    times: np.ndarray
    theta: np.ndarray
    omega: np.ndarray
    steady_state: float
    rise_time: float | None

    def settling_time(self, band: float = 0.02) -> float | None:
        """First time after which theta stays within ``band`` (relative) of steady state."""
        span = abs(self.steady_state - self.theta[0]) or 1.0
        outside = np.nonzero(np.abs(self.theta - self.steady_state) > band * span)[0]
        if outside.size == 0:
            return float(self.times[0])
        last = outside[-1]
        if last + 1 >= self.times.size:
            return None
        return float(self.times[last + 1])


def rise_time(times: np.ndarray, theta: np.ndarray, steady_state: float,
              fraction: float = 0.9) -> float | None:
    """First time theta reaches ``fraction`` of the steady state, or None."""
    target = fraction * steady_state
    hit = theta >= target if steady_state >= 0 else theta <= target
    idx = np.flatnonzero(hit)
    return float(times[idx[0]]) if idx.size else None


def simulate_response(initial: AttitudeState, gains: ControllerGains, plant: PlantParams,
                      theta_ref: float, dt: float, horizon: float) -> Response:
    if not dt > 0 or not horizon > 0:
        raise ValueError("dt and horizon must be positive")
    limit = max_stable_dt(gains, plant)
    if dt >= limit:
        raise ValueError(f"dt={dt} exceeds the RK4 stability bound {limit:.4g} for these gains")
    n = int(round(horizon / dt))
    times = np.arange(n + 1) * dt
    theta = np.empty(n + 1)
    omega = np.empty(n + 1)
    state = initial
    theta[0], omega[0] = state.theta, state.omega
    for i in range(1, n + 1):
        state = step(state, gains, plant, theta_ref, dt)
        theta[i], omega[i] = state.theta, state.omega
    ss = steady_state_theta(gains, plant, theta_ref)
    return Response(times, theta, omega, ss, rise_time(times, theta, ss))
