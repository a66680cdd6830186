"""Model-based actor-critic for the current-free residual problem.

The value function is V(zeta) = W^T sigma(zeta) over the quadratic basis. The
critic minimizes the Bellman error at the visited state and at a fixed set of
extrapolation states using the identified model, so no persistence of
excitation is needed. The actor tracks the critic inside a ball of radius
w_bar.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from domain.config import AdpGains
from domain.cost import CostWeights, local_cost
from domain.errors import NumericalFailureError, PreconditionError
from domain.hydrodynamics import ResidualModel, control_effectiveness, residual_dynamics
from domain.value_basis import BASIS, omega, sigma, value_gradient
from domain.vehicle import Current, VehicleParams

logger = logging.getLogger(__name__)

STATE_DIM = 6
MONITOR_TOLERANCE = 1e-12


@dataclass(frozen=True, slots=True, eq=False)
class CriticState:
    W: np.ndarray
    Gamma: np.ndarray
    Gamma_inv: np.ndarray
    saturated: bool = False

    @classmethod
    def initial(cls, weights: Sequence[float], gamma0: float) -> "CriticState":
        n = BASIS.size
        return cls(np.array(weights, dtype=float), gamma0 * np.eye(n), np.eye(n) / gamma0)

    @property
    def gamma_norm(self) -> float:
        return float(np.linalg.eigvalsh(self.Gamma)[-1])


@dataclass(frozen=True, slots=True, eq=False)
class ActorState:
    W: np.ndarray
    projected: bool = False

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.W))


@dataclass(frozen=True, slots=True, eq=False)
class BellmanBatch:
    """Bellman errors, regressors and normalizations at one or more states."""
    delta: np.ndarray
    omega: np.ndarray
    rho: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.rho < 1.0):
            raise PreconditionError("normalization rho must be at least 1")

    def __len__(self) -> int:
        return self.delta.shape[0]

    def weighted_gradient(self) -> np.ndarray:
        """sum_k omega_k delta_k / rho_k."""
        return (self.omega * (self.delta / self.rho)[:, None]).sum(axis=0)

    def information(self) -> np.ndarray:
        """sum_k omega_k omega_k^T / rho_k."""
        return (self.omega.T * (1.0 / self.rho)) @ self.omega


def extrapolation_set(lower: Sequence[float], upper: Sequence[float], n: int, seed: int) -> np.ndarray:
    """n scrambled Halton points scaled into the box [lower, upper); deterministic in (n, seed)."""
    if n < 1:
        raise PreconditionError(f"need at least one extrapolation point, got {n}")
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if lo.shape != (STATE_DIM,) or hi.shape != (STATE_DIM,) or not np.all(lo < hi):
        raise PreconditionError("extrapolation box must be six non-empty intervals")
    sampler = qmc.Halton(d=STATE_DIM, scramble=True, seed=seed)
    return qmc.scale(sampler.random(n), lo, hi)


def normalization(omegas: np.ndarray, gamma: np.ndarray, k_rho: float) -> np.ndarray:
    """rho = 1 + k_rho omega^T Gamma omega, batched."""
    return 1.0 + k_rho * np.einsum("...i,ij,...j->...", omegas, gamma, omegas)


def critic_step(critic: CriticState, on_policy: BellmanBatch, extrapolated: BellmanBatch,
                gains: AdpGains, dt: float) -> CriticState:
    """Euler step of the critic weights and of Gamma^-1; Gamma is held once it would pass gamma_bar.

    Gamma^-1 accumulates the normalized information of the visited state and of
    the extrapolation states, each with the gain it carries in the weight law;
    k_gamma_ext = 0 leaves only the visited state.
    """
    if not dt > 0.0:
        raise PreconditionError(f"dt must be positive, got {dt}")
    grad = gains.k_c1 * on_policy.weighted_gradient()
    info = gains.k_c1 * on_policy.information()
    if len(extrapolated):
        grad = grad + (gains.k_c2 / len(extrapolated)) * extrapolated.weighted_gradient()
        info = info + (gains.k_gamma_ext * gains.k_c2 / len(extrapolated)) * extrapolated.information()
    weights = critic.W - dt * critic.Gamma @ grad

    gamma_inv = critic.Gamma_inv + dt * (-gains.beta * critic.Gamma_inv + info)
    gamma_inv = 0.5 * (gamma_inv + gamma_inv.T)
    eig = np.linalg.eigvalsh(gamma_inv)
    if eig[0] <= 0.0 or not np.all(np.isfinite(eig)):
        raise NumericalFailureError(f"Gamma lost positive definiteness (lambda_min of inverse {eig[0]:.3e})")
    saturated = 1.0 / eig[0] > gains.gamma_bar
    if saturated:
        if not critic.saturated:
            logger.warning("critic gain reached gamma_bar=%.3g; holding Gamma", gains.gamma_bar)
        gamma, gamma_inv = critic.Gamma, critic.Gamma_inv
    else:
        gamma = np.linalg.inv(gamma_inv)
        gamma = 0.5 * (gamma + gamma.T)
    if not np.all(np.isfinite(weights)):
        raise NumericalFailureError("critic weights became non-finite")
    return CriticState(weights, gamma, gamma_inv, saturated)


def actor_step(actor: ActorState, critic_weights: np.ndarray, gains: AdpGains, dt: float) -> ActorState:
    """W_a' = proj{-k_a (W_a - W_c)} over the ball |W_a| <= w_bar."""
    w = actor.W
    update = -gains.k_a * (w - critic_weights)
    norm = float(np.linalg.norm(w))
    radial = float(w @ update)
    projected = norm >= gains.w_bar and radial > 0.0
    if projected:
        update = update - (radial / (norm * norm)) * w
    nxt = w + dt * update
    nxt_norm = float(np.linalg.norm(nxt))
    if nxt_norm > gains.w_bar:
        nxt = nxt * (gains.w_bar / nxt_norm)
        projected = True
    if projected and not actor.projected:
        logger.warning("actor weights on the projection boundary |W_a| = %.3g", gains.w_bar)
    return ActorState(nxt, projected)


class ActorCritic:
    def __init__(self, model: ResidualModel, params: VehicleParams, weights: CostWeights,
                 gains: AdpGains, points: np.ndarray) -> None:
        self._model = model
        self._g = control_effectiveness(params)
        self._weights = weights
        self.gains = gains
        self.points = np.asarray(points, dtype=float)

    @property
    def model(self) -> ResidualModel:
        return self._model

    def policy(self, zetas: np.ndarray, actor_weights: np.ndarray) -> np.ndarray:
        """u = -1/2 R^-1 g^T sigma'(zeta)^T W_a, batched over leading axes."""
        grad = value_gradient(zetas, actor_weights)
        return -0.5 * (grad @ self._g) @ self._weights.R_inv.T

    def bellman_error(self, zetas: np.ndarray, theta_hat: np.ndarray, critic_weights: np.ndarray,
                      actor_weights: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(delta, omega) with delta = r(zeta, u) + W_c^T omega and omega = sigma'(zeta) (Y_res theta + f_0res + g u)."""
        zetas = np.asarray(zetas, dtype=float)
        u = self.policy(zetas, actor_weights)
        flow = residual_dynamics(self._model, zetas, theta_hat) + u @ self._g.T
        om = omega(zetas, flow)
        return local_cost(zetas, u, self._weights) + om @ critic_weights, om

    def evaluate(self, zetas: np.ndarray, theta_hat: np.ndarray, critic: CriticState,
                 actor_weights: np.ndarray) -> BellmanBatch:
        z = np.atleast_2d(np.asarray(zetas, dtype=float))
        delta, om = self.bellman_error(z, theta_hat, critic.W, actor_weights)
        return BellmanBatch(delta, om, normalization(om, critic.Gamma, self.gains.k_rho))

    def critic_update(self, critic: CriticState, zeta: np.ndarray, theta_hat: np.ndarray,
                      actor_weights: np.ndarray, dt: float) -> Tuple[CriticState, BellmanBatch, BellmanBatch]:
        on_policy = self.evaluate(zeta, theta_hat, critic, actor_weights)
        extrapolated = self.evaluate(self.points, theta_hat, critic, actor_weights)
        updated = critic_step(critic, on_policy, extrapolated, self.gains, dt)
        logger.debug("critic step: delta=%.3e rms_ext=%.3e |Gamma|=%.3e", on_policy.delta[0],
                     float(np.sqrt(np.mean(extrapolated.delta ** 2))), updated.gamma_norm)
        return updated, on_policy, extrapolated

    def excitation_monitor(self, theta_hat: np.ndarray, actor_weights: np.ndarray, gamma: np.ndarray,
                           points: np.ndarray | None = None) -> float:
        """lambda_min of (1/N) sum omega_k omega_k^T / rho_k over the extrapolation states."""
        pts = self.points if points is None else np.atleast_2d(points)
        _, om = self.bellman_error(pts, theta_hat, np.zeros(BASIS.size), actor_weights)
        rho = normalization(om, gamma, self.gains.k_rho)
        gram = (om.T * (1.0 / rho)) @ om / len(pts)
        eig = np.linalg.eigvalsh(gram)
        value = float(eig[0]) if eig[0] > MONITOR_TOLERANCE * eig[-1] else 0.0
        if value == 0.0:
            logger.warning("excitation monitor reads 0 over %d extrapolation points", len(pts))
        return value

    def applied_control(self, zeta: np.ndarray, actor_weights: np.ndarray, theta_hat: np.ndarray,
                        current: Current) -> Tuple[np.ndarray, np.ndarray]:
        """(tau_b_hat, u_hat): the optimal virtual control plus the current feedforward."""
        u = self.policy(np.asarray(zeta, dtype=float), actor_weights)
        return u + self._model.feedforward(zeta, current, theta_hat), u

    def hamiltonian_residual(self, zetas: np.ndarray, theta_hat: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Bellman error with the critic and actor sharing ``weights``."""
        return self.bellman_error(zetas, theta_hat, weights, weights)[0]


def value(zeta: np.ndarray, critic_weights: np.ndarray) -> np.ndarray:
    return sigma(zeta) @ np.asarray(critic_weights, dtype=float)
