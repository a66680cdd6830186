"""History-stack collection run.

The current-free plant tracks a multi-sine earth-frame reference under PD
control. Every ``stride`` steps a candidate entry is built from the measured
signals, its derivative estimated by the smoother, and offered to the stack.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from application.simulator import ControlOutput, Measurement, NonlinearPlant, Simulator
from application.smoothing import state_derivative
from domain.config import ExperimentConfig
from domain.current_field import CurrentField
from domain.errors import CollectionError
from domain.history_stack import HistoryStack, StackEntry, rank_condition, sigma_min, stack_insert
from domain.hydrodynamics import rotation
from domain.vehicle import VehicleParams, wrap_angle

logger = logging.getLogger(__name__)

MARGINAL_RATIO = 1e-6

# (amplitude, frequency Hz, phase rad) per sinusoid, for x [m], y [m], psi [rad].
REFERENCE_TERMS = (
    ((1.5, 0.05, 0.0), (0.8, 0.13, 1.1), (0.3, 0.29, 2.9)),
    ((1.5, 0.07, 0.5), (0.8, 0.17, 2.3), (0.3, 0.31, 0.7)),
    ((0.8, 0.09, 1.7), (0.4, 0.23, 0.3), (0.2, 0.37, 1.9)),
)


@dataclass(frozen=True, slots=True)
class MultiSineReference:
    amplitude: float = 1.0

    def pose(self, t: float) -> np.ndarray:
        return self.amplitude * np.array([
            sum(a * math.sin(2.0 * math.pi * f * t + phase) for a, f, phase in terms)
            for terms in REFERENCE_TERMS])

    def velocity(self, t: float) -> np.ndarray:
        return self.amplitude * np.array([
            sum(a * 2.0 * math.pi * f * math.cos(2.0 * math.pi * f * t + phase) for a, f, phase in terms)
            for terms in REFERENCE_TERMS])


@dataclass(slots=True)
class TrackingController:
    """PD on the body-frame pose and velocity errors; keeps every measurement it sees."""
    reference: MultiSineReference
    kp: np.ndarray
    kd: np.ndarray
    measurements: List[Measurement] = field(default_factory=list)

    def __call__(self, step: int, t: float, measured: Measurement) -> ControlOutput:
        self.measurements.append(measured)
        zeta = measured.zeta
        rot_t = rotation(zeta[2]).T
        error = self.reference.pose(t) - zeta[:3]
        error[2] = wrap_angle(error[2])
        pose_error = rot_t @ error
        velocity_error = rot_t @ self.reference.velocity(t) - zeta[3:]
        return ControlOutput(self.kp * pose_error + self.kd * velocity_error)


def collect_stack(config: ExperimentConfig, params: VehicleParams) -> Tuple[HistoryStack, float]:
    """Run the tracking experiment and select the stack; raises CollectionError without full rank."""
    collect = config.collect
    sim = replace(config.sim, duration=collect.duration, initial_state=(0.0,) * 6)
    simulator = Simulator(NonlinearPlant(params), CurrentField.none(), sim)
    controller = TrackingController(MultiSineReference(collect.amplitude),
                                    np.array(collect.kp), np.array(collect.kd))
    logger.info("collecting for %.1f s (amplitude %.3g)", collect.duration, collect.amplitude)
    trajectory = simulator.run(controller)

    half = max(2, int(round(0.5 * config.stack.window / sim.dt)))
    times = trajectory.times
    zetas = np.array([m.zeta for m in controller.measurements])
    stack = HistoryStack(config.stack.capacity)
    rejected = 0
    offered = 0
    for k in range(half, len(times) - half, collect.stride):
        window = slice(k - half, k + half + 1)
        zeta_dot, d_err = state_derivative(times[window], zetas[window])
        sample = controller.measurements[k]
        # the force steps at t_k; the symmetric smoother sees the mean of both sides
        tau = 0.5 * (trajectory.samples[k - 1].tau_b + trajectory.samples[k].tau_b)
        candidate = StackEntry.build(params, times[k], sample.zeta, sample.nu_c, sample.nu_c_dot,
                                     tau, zeta_dot, d_err)
        offered += 1
        stack, accepted = stack_insert(stack, candidate, config.stack.swap_margin)
        if stack.full:
            rejected = 0 if accepted else rejected + 1
            if rejected >= collect.patience:
                break

    satisfied, y_min = rank_condition(stack)
    logger.info("offered %d candidates, stack holds %d, sigma_min=%.3e, y_min=%.3e",
                offered, len(stack), sigma_min(stack), y_min)
    if not satisfied:
        raise CollectionError("collected stack does not satisfy the rank condition", y_min)
    if y_min < MARGINAL_RATIO * float(np.linalg.eigvalsh(stack.gram)[-1]):
        logger.warning("rank condition is marginal: y_min=%.3e", y_min)
    return stack, y_min
