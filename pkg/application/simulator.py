"""Fixed-step simulation of the craft under a current field.

The plant is advanced with classical fourth-order Runge-Kutta; the current is
re-evaluated at every stage because the body-frame current depends on the
heading and yaw rate. Time is always ``k * dt`` for an integer step index.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Protocol, TypeVar

import numpy as np

from domain.config import SimSection
from domain.current_field import CurrentField, current_at
from domain.errors import IntegrationError, PreconditionError
from domain.hydrodynamics import LinearResidual, control_effectiveness, plant_derivative, residual_dynamics
from domain.trajectory import Trajectory, TrajectorySample
from domain.vehicle import Current, VehicleParams, wrap_angle

logger = logging.getLogger(__name__)

X = TypeVar("X", float, np.ndarray)


def rk4_step(f: Callable[[float, X], X], t: float, x: X, dt: float) -> X:
    """One classical Runge-Kutta step of x' = f(t, x)."""
    if not dt > 0.0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


class Plant(Protocol):
    def derivative(self, zeta: np.ndarray, tau_b: np.ndarray, current: Current) -> np.ndarray:
        ...


class NonlinearPlant:
    """True craft: equations of motion with the vehicle's own theta."""

    def __init__(self, params: VehicleParams) -> None:
        self.params = params

    def derivative(self, zeta: np.ndarray, tau_b: np.ndarray, current: Current) -> np.ndarray:
        return plant_derivative(self.params, zeta, tau_b, current)


class LinearPlant:
    """Station linearization A zeta + B tau_b; the current is ignored."""

    def __init__(self, params: VehicleParams) -> None:
        self.params = params
        self._model = LinearResidual(params)
        self._theta = params.theta.as_array()
        self._g = control_effectiveness(params)

    def derivative(self, zeta: np.ndarray, tau_b: np.ndarray, current: Current) -> np.ndarray:
        return residual_dynamics(self._model, zeta, self._theta) + self._g @ tau_b


@dataclass(frozen=True, slots=True, eq=False)
class Measurement:
    zeta: np.ndarray
    nu_c: np.ndarray
    nu_c_dot: np.ndarray

    @property
    def current(self) -> Current:
        return Current((self.nu_c[0], self.nu_c[1], 0.0), (self.nu_c_dot[0], self.nu_c_dot[1], 0.0))


@dataclass(frozen=True, slots=True, eq=False)
class ControlOutput:
    tau_b: np.ndarray
    diagnostics: Dict[str, float] = field(default_factory=dict)


class Controller(Protocol):
    def __call__(self, step: int, t: float, measured: Measurement) -> ControlOutput:
        ...


class Simulator:
    def __init__(self, plant: Plant, current_field: CurrentField, sim: SimSection) -> None:
        self._plant = plant
        self._field = current_field
        self._sim = sim

    @property
    def dt(self) -> float:
        return self._sim.dt

    def current(self, t: float, zeta: np.ndarray) -> Current:
        return current_at(self._field, t, float(zeta[2]), float(zeta[5]))

    def derivative(self, t: float, zeta: np.ndarray, tau_b: np.ndarray) -> np.ndarray:
        return self._plant.derivative(zeta, tau_b, self.current(t, zeta))

    def step(self, zeta: np.ndarray, tau_b: np.ndarray, t: float, dt: Optional[float] = None,
             index: Optional[int] = None) -> np.ndarray:
        """Advance the true state over one step with tau_b held constant."""
        tau = np.asarray(tau_b, dtype=float)
        nxt = rk4_step(lambda s, z: self.derivative(s, z, tau), t, np.asarray(zeta, dtype=float),
                       self._sim.dt if dt is None else dt)
        if not np.all(np.isfinite(nxt)):
            raise IntegrationError("plant state became non-finite", index)
        return nxt

    def measure(self, zeta: np.ndarray, current: Current, rng: np.random.Generator) -> Measurement:
        """Additive zero-mean Gaussian noise; exact copies when a std is zero."""
        sim = self._sim
        z = np.array(zeta, dtype=float)
        nu_c = current.velocity
        nu_c_dot = current.acceleration
        if sim.noise_pose > 0.0:
            z[:3] += rng.normal(0.0, sim.noise_pose, 3)
        if sim.noise_velocity > 0.0:
            z[3:] += rng.normal(0.0, sim.noise_velocity, 3)
        if sim.noise_current > 0.0:
            nu_c[:2] += rng.normal(0.0, sim.noise_current, 2)
            nu_c_dot[:2] += rng.normal(0.0, sim.noise_current, 2)
        z[2] = wrap_angle(z[2])
        return Measurement(z, nu_c, nu_c_dot)

    def run(self, controller: Controller, initial_state: Optional[np.ndarray] = None,
            n_steps: Optional[int] = None) -> Trajectory:
        """Record samples k = 0..n_steps, calling ``controller`` on the measurement at each."""
        sim = self._sim
        steps = sim.n_steps if n_steps is None else n_steps
        zeta = np.array(sim.initial_state if initial_state is None else initial_state, dtype=float)
        rng = np.random.default_rng(sim.seed)
        trajectory = Trajectory(sim.dt)
        logger.info("simulating %d steps at dt=%s (seed %d)", steps, sim.dt, sim.seed)
        for k in range(steps + 1):
            t = k * sim.dt
            current = self.current(t, zeta)
            output = controller(k, t, self.measure(zeta, current, rng))
            tau = np.asarray(output.tau_b, dtype=float)
            if not np.all(np.isfinite(tau)):
                raise IntegrationError("controller returned a non-finite force", k)
            trajectory.append(TrajectorySample(k, t, zeta.copy(), current.velocity, current.acceleration,
                                               tau, dict(output.diagnostics)))
            if k < steps:
                zeta = self.step(zeta, tau, t, index=k)
        return trajectory


def build_plant(params: VehicleParams, mode: str) -> Plant:
    return LinearPlant(params) if mode == "linear-test" else NonlinearPlant(params)
