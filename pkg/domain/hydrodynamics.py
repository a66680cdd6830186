"""Planar (surge, sway, yaw) marine-craft model.

State ordering is zeta = [x, y, psi, u, v, r]; parameter ordering is
theta = [ca1, ca2, xu, yv, nr, xuu, yvv, nrr]. The hydrodynamic force
C_A(nu)nu + D(nu)nu is linear in theta and is written phi(nu) @ theta, which is
the building block of every regressor below. The restoring vector G is zero
(neutrally buoyant craft) and the centre of gravity sits at the body origin.

All functions are pure. The ``*_batch`` helpers accept arrays of shape
(..., 6) so Bellman errors can be extrapolated over many states at once.
"""
from __future__ import annotations
import math
from typing import Protocol, Sequence, Tuple, Union

import numpy as np

from domain.vehicle import (
    BodyVelocity,
    Current,
    ParameterVector,
    Pose,
    StateLike,
    VehicleParams,
    as_zeta,
)

N_PARAMS = 8

ThetaLike = Union[ParameterVector, np.ndarray, Sequence[float]]
VelocityLike = Union[BodyVelocity, np.ndarray, Sequence[float]]


def _theta(theta: ThetaLike) -> np.ndarray:
    if isinstance(theta, ParameterVector):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


def _vel(vel: VelocityLike) -> np.ndarray:
    if isinstance(vel, BodyVelocity):
        return vel.as_array()
    return np.asarray(vel, dtype=float)


def rotation(pose: Union[Pose, float]) -> np.ndarray:
    """J_E(eta): body-fixed to earth-fixed rotation about the yaw axis."""
    psi = pose.psi if isinstance(pose, Pose) else float(pose)
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def coriolis_rb(vel: VelocityLike, params: VehicleParams) -> np.ndarray:
    u, v, _ = _vel(vel)
    m = params.m
    return np.array([[0.0, 0.0, -m * v],
                     [0.0, 0.0, m * u],
                     [m * v, -m * u, 0.0]])


def coriolis_a(vel_rel: VelocityLike, theta: ThetaLike) -> np.ndarray:
    u, v, _ = _vel(vel_rel)
    ca1, ca2 = _theta(theta)[:2]
    return np.array([[0.0, 0.0, ca1 * v],
                     [0.0, 0.0, -ca2 * u],
                     [-ca1 * v, ca2 * u, 0.0]])


def damping(vel_rel: VelocityLike, theta: ThetaLike) -> np.ndarray:
    u, v, r = _vel(vel_rel)
    _, _, xu, yv, nr, xuu, yvv, nrr = _theta(theta)
    return np.diag([xu + xuu * abs(u), yv + yvv * abs(v), nr + nrr * abs(r)])


def hydrodynamic_regressor(nu: np.ndarray) -> np.ndarray:
    """phi(nu) with phi(nu) @ theta == C_A(nu) nu + D(nu) nu; shape (..., 3, 8)."""
    nu = np.asarray(nu, dtype=float)
    u, v, r = nu[..., 0], nu[..., 1], nu[..., 2]
    zero = np.zeros_like(u)
    row_u = [v * r, zero, u, zero, zero, np.abs(u) * u, zero, zero]
    row_v = [zero, -u * r, zero, v, zero, zero, np.abs(v) * v, zero]
    row_r = [-u * v, u * v, zero, zero, r, zero, zero, np.abs(r) * r]
    return np.stack([np.stack(row_u, axis=-1),
                     np.stack(row_v, axis=-1),
                     np.stack(row_r, axis=-1)], axis=-2)


def _lift(params: VehicleParams, phi: np.ndarray) -> np.ndarray:
    """[0; -M^-1 phi] for phi of shape (..., 3, 8)."""
    lower = -np.einsum("ij,...jk->...ik", params.M_inv, phi)
    return np.concatenate([np.zeros_like(lower), lower], axis=-2)


def kinematics_batch(zetas: np.ndarray) -> np.ndarray:
    """J_E(eta) nu for states of shape (..., 6)."""
    psi, u, v, r = zetas[..., 2], zetas[..., 3], zetas[..., 4], zetas[..., 5]
    c, s = np.cos(psi), np.sin(psi)
    return np.stack([c * u - s * v, s * u + c * v, r], axis=-1)


def rigid_body_coriolis_batch(params: VehicleParams, nu: np.ndarray) -> np.ndarray:
    """C_RB(nu) nu for velocities of shape (..., 3)."""
    u, v, r = nu[..., 0], nu[..., 1], nu[..., 2]
    m = params.m
    return np.stack([-m * v * r, m * u * r, np.zeros_like(u)], axis=-1)


def regressor_full(params: VehicleParams, state: StateLike, current: Current) -> np.ndarray:
    """Y(zeta, nu_c): 6x8, the current-relative hydrodynamics."""
    zeta = as_zeta(state)
    nu_r = zeta[3:] - current.velocity
    return _lift(params, hydrodynamic_regressor(nu_r))


def drift_known(params: VehicleParams, state: StateLike, current_accel: Sequence[float]) -> np.ndarray:
    """f_0(zeta, nu_c_dot): kinematics, rigid-body Coriolis and added-mass current forcing."""
    zeta = as_zeta(state)
    nu = zeta[3:]
    forcing = params.M_A @ np.asarray(current_accel, dtype=float) - rigid_body_coriolis_batch(params, nu)
    return np.concatenate([kinematics_batch(zeta), params.M_inv @ forcing])


def control_effectiveness(params: VehicleParams) -> np.ndarray:
    return np.vstack([np.zeros((3, 3)), params.M_inv])


def residual_regressor(params: VehicleParams, state: StateLike) -> np.ndarray:
    return residual_regressor_batch(params, as_zeta(state))


def residual_drift(params: VehicleParams, state: StateLike) -> np.ndarray:
    return residual_drift_batch(params, as_zeta(state))


def residual_regressor_batch(params: VehicleParams, zetas: np.ndarray) -> np.ndarray:
    return _lift(params, hydrodynamic_regressor(zetas[..., 3:]))


def residual_drift_batch(params: VehicleParams, zetas: np.ndarray) -> np.ndarray:
    coriolis = rigid_body_coriolis_batch(params, zetas[..., 3:])
    lower = -np.einsum("ij,...j->...i", params.M_inv, coriolis)
    return np.concatenate([kinematics_batch(zetas), lower], axis=-1)


def feedforward_regressor(state: StateLike, current: Current) -> np.ndarray:
    """Y_c(zeta, nu_c): 3x8 with Y_c theta = (C_A + D)(nu_r) nu_r - (C_A + D)(nu) nu."""
    nu = as_zeta(state)[3:]
    return hydrodynamic_regressor(nu - current.velocity) - hydrodynamic_regressor(nu)


def current_feedforward(params: VehicleParams, state: StateLike, current: Current,
                        theta_hat: ThetaLike) -> np.ndarray:
    """tau_c_hat = -M_A nu_c_dot + Y_c theta_hat."""
    return -params.M_A @ current.acceleration + feedforward_regressor(state, current) @ _theta(theta_hat)


def feedforward_error(params: VehicleParams, state: StateLike, current: Current,
                      theta: ThetaLike, theta_hat: ThetaLike) -> np.ndarray:
    """tau_c - tau_c_hat; only the theta error survives."""
    return feedforward_regressor(state, current) @ (_theta(theta) - _theta(theta_hat))


def body_current(psi: float, r: float, eta_c_dot: Sequence[float],
                 eta_c_ddot: Sequence[float] = (0.0, 0.0)) -> Tuple[np.ndarray, np.ndarray]:
    """Body-frame current and its body-frame derivative from an earth-frame planar current.

    nu_c = R(psi)^T eta_c_dot, and d/dt nu_c = R(psi)^T eta_c_ddot + r * [v_c, -u_c].
    """
    c, s = math.cos(psi), math.sin(psi)
    ex, ey = float(eta_c_dot[0]), float(eta_c_dot[1])
    ax, ay = float(eta_c_ddot[0]), float(eta_c_ddot[1])
    u_c = c * ex + s * ey
    v_c = -s * ex + c * ey
    nu_c = np.array([u_c, v_c, 0.0])
    nu_c_dot = np.array([c * ax + s * ay + r * v_c, -s * ax + c * ay - r * u_c, 0.0])
    return nu_c, nu_c_dot


def _body_current_batch(zetas: np.ndarray, eta_c_dot: np.ndarray) -> np.ndarray:
    psi = zetas[..., 2]
    c, s = np.cos(psi), np.sin(psi)
    u_c = c * eta_c_dot[0] + s * eta_c_dot[1]
    v_c = -s * eta_c_dot[0] + c * eta_c_dot[1]
    return np.stack([u_c, v_c, np.zeros_like(u_c)], axis=-1)


def _constant_current_regressor_batch(params: VehicleParams, zetas: np.ndarray,
                                      eta_c_dot: np.ndarray) -> np.ndarray:
    nu_c = _body_current_batch(zetas, eta_c_dot)
    phi = hydrodynamic_regressor(zetas[..., 3:] - nu_c) - hydrodynamic_regressor(-nu_c)
    return _lift(params, phi)


def constant_current_mode(params: VehicleParams, state: StateLike, eta_c_dot: Sequence[float],
                          theta: ThetaLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual regressor, residual drift and steady feedforward for a constant earth-fixed current.

    Y_res theta = [0; -M^-1 (C_A + D)(nu_r) nu_r - M^-1 (C_A + D)(-nu_c) nu_c]
    tau_c = -M_A nu_c_dot - C_A(-nu_c) nu_c - D(-nu_c) nu_c
    """
    zeta = as_zeta(state)
    eta_c = np.asarray(eta_c_dot, dtype=float)
    nu_c, nu_c_dot = body_current(zeta[2], zeta[5], eta_c)
    y_res = _constant_current_regressor_batch(params, zeta, eta_c)
    f_res = residual_drift_batch(params, zeta)
    tau_c = -params.M_A @ nu_c_dot + hydrodynamic_regressor(-nu_c) @ _theta(theta)
    return y_res, f_res, tau_c


def plant_derivative(params: VehicleParams, state: StateLike, tau_b: Sequence[float],
                     current: Current, theta: ThetaLike | None = None) -> np.ndarray:
    """zeta_dot from the equations of motion evaluated with the matrix-valued terms.

    M nu_dot = tau_b + M_A nu_c_dot - C_RB(nu) nu - C_A(nu_r) nu_r - D(nu_r) nu_r
    """
    zeta = as_zeta(state)
    th = params.theta if theta is None else theta
    nu = zeta[3:]
    nu_r = nu - current.velocity
    rhs = (np.asarray(tau_b, dtype=float)
           + params.M_A @ current.acceleration
           - coriolis_rb(nu, params) @ nu
           - coriolis_a(nu_r, th) @ nu_r
           - damping(nu_r, th) @ nu_r)
    return np.concatenate([rotation(zeta[2]) @ nu, np.linalg.solve(params.M, rhs)])


def linear_regressor_batch(params: VehicleParams, zetas: np.ndarray) -> np.ndarray:
    """Regressor of the station linearization: only the linear damping columns survive."""
    nu = zetas[..., 3:]
    zero = np.zeros_like(nu[..., 0])
    cols = [zero, zero, nu[..., 0], zero, zero, zero, zero, zero]
    row_u = np.stack(cols, axis=-1)
    row_v = np.stack([zero, zero, zero, nu[..., 1], zero, zero, zero, zero], axis=-1)
    row_r = np.stack([zero, zero, zero, zero, nu[..., 2], zero, zero, zero], axis=-1)
    return _lift(params, np.stack([row_u, row_v, row_r], axis=-2))


class ResidualModel(Protocol):
    """Current-free (autonomous) model the optimal control problem is posed on."""

    def regressor(self, zetas: np.ndarray) -> np.ndarray:
        """Y_res for states (..., 6) -> (..., 6, 8)."""
        ...

    def known_drift(self, zetas: np.ndarray) -> np.ndarray:
        """f_0res for states (..., 6) -> (..., 6)."""
        ...

    def feedforward(self, zeta: np.ndarray, current: Current, theta_hat: np.ndarray) -> np.ndarray:
        """Current compensation added to the virtual control."""
        ...

    def feedforward_error(self, zeta: np.ndarray, current: Current, theta: np.ndarray,
                          theta_hat: np.ndarray) -> np.ndarray:
        """Exact minus estimated compensation."""
        ...


def residual_dynamics(model: ResidualModel, zetas: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
    """Y_res theta_hat + f_0res, batched."""
    return np.einsum("...ij,j->...i", model.regressor(zetas), theta_hat) + model.known_drift(zetas)


class CurrentFreeResidual:
    def __init__(self, params: VehicleParams) -> None:
        self._params = params

    def regressor(self, zetas: np.ndarray) -> np.ndarray:
        return residual_regressor_batch(self._params, zetas)

    def known_drift(self, zetas: np.ndarray) -> np.ndarray:
        return residual_drift_batch(self._params, zetas)

    def feedforward(self, zeta: np.ndarray, current: Current, theta_hat: np.ndarray) -> np.ndarray:
        return current_feedforward(self._params, zeta, current, theta_hat)

    def feedforward_error(self, zeta: np.ndarray, current: Current, theta: np.ndarray,
                          theta_hat: np.ndarray) -> np.ndarray:
        return feedforward_error(self._params, zeta, current, theta, theta_hat)


class ConstantCurrentResidual:
    def __init__(self, params: VehicleParams, eta_c_dot: Sequence[float]) -> None:
        self._params = params
        self._eta_c_dot = np.asarray(eta_c_dot, dtype=float)

    def regressor(self, zetas: np.ndarray) -> np.ndarray:
        return _constant_current_regressor_batch(self._params, zetas, self._eta_c_dot)

    def known_drift(self, zetas: np.ndarray) -> np.ndarray:
        return residual_drift_batch(self._params, zetas)

    def feedforward(self, zeta: np.ndarray, current: Current, theta_hat: np.ndarray) -> np.ndarray:
        return constant_current_mode(self._params, zeta, self._eta_c_dot, theta_hat)[2]

    def feedforward_error(self, zeta: np.ndarray, current: Current, theta: np.ndarray,
                          theta_hat: np.ndarray) -> np.ndarray:
        # tau_c is affine in theta with a theta-free part that cancels
        return self.feedforward(zeta, current, theta) - self.feedforward(zeta, current, theta_hat)


class LinearResidual:
    """Station linearization: zeta_dot = A zeta + B u with A linear in theta."""

    def __init__(self, params: VehicleParams) -> None:
        self._params = params

    def regressor(self, zetas: np.ndarray) -> np.ndarray:
        return linear_regressor_batch(self._params, zetas)

    def known_drift(self, zetas: np.ndarray) -> np.ndarray:
        nu = zetas[..., 3:]
        return np.concatenate([nu, np.zeros_like(nu)], axis=-1)

    def feedforward(self, zeta: np.ndarray, current: Current, theta_hat: np.ndarray) -> np.ndarray:
        return np.zeros(3)

    def feedforward_error(self, zeta: np.ndarray, current: Current, theta: np.ndarray,
                          theta_hat: np.ndarray) -> np.ndarray:
        return np.zeros(3)
