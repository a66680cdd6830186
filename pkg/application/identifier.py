"""Concurrent-learning system identifier.

The observer tracks the measured state with the current parameter estimate;
the parameter update combines the instantaneous observer error with the
recorded history stack. The stack term is advanced linearly-implicitly, which
keeps the update stable for any step while leaving its fixed points unchanged.
"""
from __future__ import annotations
import logging
import math
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np

from domain.config import IdentifierGains
from domain.errors import DiagnosticUnavailableError, IdentifierDivergenceError, PreconditionError
from domain.history_stack import HistoryStack, rank_condition
from domain.hydrodynamics import N_PARAMS, control_effectiveness, drift_known, regressor_full
from domain.vehicle import Current, VehicleParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True, eq=False)
class IdentifierState:
    zeta_hat: np.ndarray
    theta_hat: np.ndarray

    @classmethod
    def initial(cls, zeta: Sequence[float], theta_hat: Sequence[float] | None = None) -> "IdentifierState":
        theta = np.zeros(N_PARAMS) if theta_hat is None else np.array(theta_hat, dtype=float)
        return cls(np.array(zeta, dtype=float), theta)

    def zeta_tilde(self, zeta: np.ndarray) -> np.ndarray:
        return np.asarray(zeta, dtype=float) - self.zeta_hat


@dataclass(frozen=True, slots=True)
class ConvergenceDiagnostics:
    alpha_p: float
    k_p: float
    y_min: float
    d_bar: float
    d_theta: float


class Identifier:
    def __init__(self, params: VehicleParams, gains: IdentifierGains, stack: HistoryStack) -> None:
        self._params = params
        self._stack = stack
        self._g = control_effectiveness(params)
        self.k_zeta = np.array(gains.k_zeta, dtype=float)
        self.k_theta = float(gains.k_theta)
        self.gamma_theta = np.array(gains.gamma_theta, dtype=float)

    @property
    def stack(self) -> HistoryStack:
        return self._stack

    def observer_step(self, state: IdentifierState, zeta: np.ndarray, current: Current,
                      tau_b: np.ndarray, dt: float, step: int | None = None) -> IdentifierState:
        """zeta_hat' = Y theta_hat + f_0 + g tau_b + k_zeta zeta_tilde, one Euler step."""
        if not dt > 0.0:
            raise PreconditionError(f"dt must be positive, got {dt}")
        zeta = np.asarray(zeta, dtype=float)
        rate = (regressor_full(self._params, zeta, current) @ state.theta_hat
                + drift_known(self._params, zeta, current.acceleration)
                + self._g @ np.asarray(tau_b, dtype=float)
                + self.k_zeta * state.zeta_tilde(zeta))
        zeta_hat = state.zeta_hat + dt * rate
        if not np.all(np.isfinite(zeta_hat)):
            raise IdentifierDivergenceError("state estimate became non-finite", step)
        return replace(state, zeta_hat=zeta_hat)

    def parameter_step(self, state: IdentifierState, zeta: np.ndarray, current: Current,
                       zeta_tilde: np.ndarray, dt: float, step: int | None = None) -> IdentifierState:
        """(I + dt Gamma k_theta S) theta+ = theta + dt Gamma (Y^T zeta_tilde + k_theta b).

        S = sum Y_j^T Y_j and b = sum Y_j^T (zeta_dot_bar_j - f_0j - g tau_bj).
        """
        stack = self._stack
        if not stack.entries:
            raise PreconditionError("parameter update needs a non-empty history stack")
        y = regressor_full(self._params, zeta, current)
        gamma = self.gamma_theta
        lhs = np.eye(N_PARAMS) + dt * self.k_theta * gamma[:, None] * stack.gram
        rhs = state.theta_hat + dt * gamma * (y.T @ np.asarray(zeta_tilde, dtype=float)
                                              + self.k_theta * stack.moment)
        theta_hat = np.linalg.solve(lhs, rhs)
        if not np.all(np.isfinite(theta_hat)):
            raise IdentifierDivergenceError("parameter estimate became non-finite", step)
        return replace(state, theta_hat=theta_hat)

    def step(self, state: IdentifierState, zeta: np.ndarray, current: Current, tau_b: np.ndarray,
             dt: float, step: int | None = None) -> IdentifierState:
        """Observer and parameter updates, both driven by the pre-update zeta_tilde."""
        zeta_tilde = state.zeta_tilde(zeta)
        observed = self.observer_step(state, zeta, current, tau_b, dt, step)
        return self.parameter_step(observed, zeta, current, zeta_tilde, dt, step)

    def convergence_diagnostics(self) -> ConvergenceDiagnostics:
        return convergence_diagnostics(self._stack, self.k_zeta, self.k_theta)


def convergence_diagnostics(stack: HistoryStack, k_zeta: Sequence[float], k_theta: float) -> ConvergenceDiagnostics:
    """alpha_P = 0.5 min(2 k_zeta_min, k_theta y_min); K_P = sqrt(k_theta d_theta^2 / (2 alpha_P y_min))."""
    satisfied, y_min = rank_condition(stack)
    if not satisfied:
        raise DiagnosticUnavailableError(f"rank condition not satisfied (y_min={y_min:.3e})")
    alpha_p = 0.5 * min(2.0 * float(np.min(k_zeta)), k_theta * y_min)
    d_bar = stack.derivative_error_bound
    d_theta = d_bar * stack.regressor_norm_sum
    k_p = math.sqrt(k_theta * d_theta ** 2 / (2.0 * alpha_p * y_min))
    return ConvergenceDiagnostics(alpha_p, k_p, y_min, d_bar, d_theta)


def identifier_lyapunov(zeta_tilde: np.ndarray, theta_tilde: np.ndarray, gamma_theta: Sequence[float]) -> float:
    """V_P = 0.5 |zeta_tilde|^2 + 0.5 theta_tilde^T Gamma_theta^-1 theta_tilde."""
    zt = np.asarray(zeta_tilde, dtype=float)
    tt = np.asarray(theta_tilde, dtype=float)
    return float(0.5 * zt @ zt + 0.5 * tt @ (tt / np.asarray(gamma_theta, dtype=float)))


def lyapunov_bounds(gamma_theta: Sequence[float]) -> Tuple[float, float]:
    """(c1, c2) with c1 |Z|^2 <= V_P <= c2 |Z|^2, from the eigenvalues of Gamma_theta^-1."""
    inv = 1.0 / np.asarray(gamma_theta, dtype=float)
    return 0.5 * min(1.0, float(inv.min())), 0.5 * max(1.0, float(inv.max()))
