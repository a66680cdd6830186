from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from application.adp import ActorCritic, ActorState, CriticState, actor_step, extrapolation_set
from application.identifier import Identifier, IdentifierState
from application.riccati_oracle import linearize, solve_are
from application.simulator import ControlOutput, Measurement, Simulator, build_plant
from domain.config import ExperimentConfig
from domain.errors import PreconditionError
from domain.history_stack import HistoryStack
from domain.hydrodynamics import ConstantCurrentResidual, CurrentFreeResidual, LinearResidual, ResidualModel
from domain.trajectory import Trajectory
from domain.value_basis import BASIS
from domain.vehicle import THETA_FIELDS, VehicleParams

logger = logging.getLogger(__name__)

CRITIC_DIAGNOSTICS = ("delta", "delta_rms", "delta_ext_max", "gamma_norm", "lambda_min")

DIAGNOSTIC_NAMES = (
    ("zeta_tilde_norm", "theta_tilde_norm") + CRITIC_DIAGNOSTICS
    + ("wc_wa_gap", "wa_norm", "tau_c_err", "u1", "u2", "u3")
    + tuple(f"theta_hat_{name}" for name in THETA_FIELDS)
    + tuple(f"wc_{k}" for k in range(BASIS.size))
    + tuple(f"wa_{k}" for k in range(BASIS.size))
)


class StationKeepingController:
    """Per-step ADP controller: applied force, critic every ``critic_every`` steps, actor and identifier every step.

    With ``identifier`` None the parameter estimate stays at its initial value.
    """

    def __init__(self, actor_critic: ActorCritic, identifier: Optional[Identifier], dt: float,
                 critic: CriticState, actor: ActorState, estimate: IdentifierState,
                 theta_true: np.ndarray, freeze_actor: bool = False) -> None:
        self._ac = actor_critic
        self._identifier = identifier
        self._dt = dt
        self._critic_every = actor_critic.gains.critic_every
        self.critic = critic
        self.actor = actor
        self.estimate = estimate
        self._theta = np.asarray(theta_true, dtype=float)
        self._freeze_actor = freeze_actor
        self._held: Dict[str, float] = {}

    def __call__(self, step: int, t: float, measured: Measurement) -> ControlOutput:
        zeta = measured.zeta
        current = measured.current
        theta_hat = self.estimate.theta_hat
        tau, u = self._ac.applied_control(zeta, self.actor.W, theta_hat, current)

        if step % self._critic_every == 0:
            self.critic, on_policy, extrapolated = self._ac.critic_update(
                self.critic, zeta, theta_hat, self.actor.W, self._critic_every * self._dt)
            ext = np.abs(extrapolated.delta)
            self._held = {
                "delta": float(on_policy.delta[0]),
                "delta_rms": float(np.sqrt(np.mean(ext ** 2))),
                "delta_ext_max": float(ext.max()),
                "gamma_norm": self.critic.gamma_norm,
                "lambda_min": self._ac.excitation_monitor(theta_hat, self.actor.W, self.critic.Gamma),
            }
        if not self._freeze_actor:
            self.actor = actor_step(self.actor, self.critic.W, self._ac.gains, self._dt)

        zeta_tilde = self.estimate.zeta_tilde(zeta)
        if self._identifier is not None:
            self.estimate = self._identifier.step(self.estimate, zeta, current, tau, self._dt, step)
        else:
            self.estimate = IdentifierState(np.array(zeta, dtype=float), theta_hat)

        tau_c_err = self._ac.model.feedforward_error(zeta, current, self._theta, theta_hat)
        diagnostics = {
            "zeta_tilde_norm": float(np.linalg.norm(zeta_tilde)),
            "theta_tilde_norm": float(np.linalg.norm(self._theta - self.estimate.theta_hat)),
            **self._held,
            "wc_wa_gap": float(np.linalg.norm(self.critic.W - self.actor.W)),
            "wa_norm": self.actor.norm,
            "tau_c_err": float(np.linalg.norm(tau_c_err)),
            "u1": float(u[0]), "u2": float(u[1]), "u3": float(u[2]),
        }
        diagnostics.update((f"theta_hat_{n}", float(v)) for n, v in zip(THETA_FIELDS, self.estimate.theta_hat))
        diagnostics.update((f"wc_{k}", float(v)) for k, v in enumerate(self.critic.W))
        diagnostics.update((f"wa_{k}", float(v)) for k, v in enumerate(self.actor.W))
        return ControlOutput(tau, diagnostics)


def residual_model(config: ExperimentConfig, params: VehicleParams) -> ResidualModel:
    mode = config.mode
    if mode == "linear-test":
        return LinearResidual(params)
    if mode == "constant-current":
        return ConstantCurrentResidual(params, config.current_field().earth_velocity(0.0))
    return CurrentFreeResidual(params)


def ideal_weights(config: ExperimentConfig, params: VehicleParams) -> np.ndarray:
    """ARE weights of the current-free station linearization with the vehicle's theta."""
    return solve_are(linearize(params, params.theta), config.cost.to_weights()).weights


@dataclass(frozen=True, slots=True)
class StationKeepingSetup:
    simulator: Simulator
    controller: StationKeepingController
    initial_weights: np.ndarray


def build_station_keeping(config: ExperimentConfig, params: VehicleParams, stack: Optional[HistoryStack],
                          critic_weights: Optional[Sequence[float]] = None,
                          freeze_actor: bool = False) -> StationKeepingSetup:
    """Wire plant, residual model, identifier and actor-critic for ``config.mode``.

    Linear-test mode runs without an identifier and starts theta_hat at the true
    theta; the other modes start theta_hat at zero and need a stack.
    """
    adp = config.adp
    theta = params.theta.as_array()
    w_ideal = ideal_weights(config, params)
    points = extrapolation_set(adp.box_lower, adp.box_upper, adp.n_points, config.sim.seed)
    actor_critic = ActorCritic(residual_model(config, params), params, config.cost.to_weights(), adp, points)

    if config.mode == "linear-test":
        identifier = None
        theta_hat = theta
    else:
        if stack is None:
            raise PreconditionError(f"mode {config.mode!r} needs a history stack")
        identifier = Identifier(params, config.identifier, stack)
        theta_hat = None
    w_c = w_ideal if critic_weights is None else np.array(critic_weights, dtype=float)
    controller = StationKeepingController(
        actor_critic, identifier, config.sim.dt,
        CriticState.initial(w_c, adp.gamma0), ActorState(w_ideal.copy()),
        IdentifierState.initial(config.sim.initial_state, theta_hat), theta, freeze_actor)
    simulator = Simulator(build_plant(params, config.mode), config.current_field(), config.sim)
    logger.info("station keeping in %s mode, |W_ideal|=%.3e", config.mode, float(np.linalg.norm(w_ideal)))
    return StationKeepingSetup(simulator, controller, w_ideal)


def run_station_keeping(setup: StationKeepingSetup) -> Tuple[Trajectory, StationKeepingController]:
    return setup.simulator.run(setup.controller), setup.controller
