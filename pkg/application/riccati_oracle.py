"""Station linearization and continuous-time algebraic Riccati solution.

The CARE is solved by integrating the Riccati differential equation backward
in time from P = 0 with RK4 and, if the derivative has not yet settled below
tolerance, polishing the integrated (stabilizing) solution with Newton-Kleinman
iterations on Lyapunov equations.
"""
from __future__ import annotations
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from domain.cost import CostWeights
from domain.errors import PreconditionError, RiccatiError
from domain.hydrodynamics import control_effectiveness
from domain.value_basis import BASIS, STATE_DIM
from domain.vehicle import ParameterVector, VehicleParams

logger = logging.getLogger(__name__)

RDE_STEP = 1e-3
RDE_MAX_STEPS = 10_000
RDE_TOLERANCE = 1e-12
NEWTON_MAX_ITERATIONS = 50


@dataclass(frozen=True, slots=True, eq=False)
class LinearModel:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.A, dtype=float)
        b = np.asarray(self.B, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
            raise PreconditionError(f"incompatible shapes A {a.shape}, B {b.shape}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise PreconditionError("linear model must be finite")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)


@dataclass(frozen=True, slots=True, eq=False)
class RiccatiSolution:
    P: np.ndarray
    K: np.ndarray
    residual: float
    integration_steps: int
    newton_iterations: int
    derivative_norms: np.ndarray

    @property
    def weights(self) -> np.ndarray:
        return weights_from_P(self.P)


def linearize(params: VehicleParams, theta: ParameterVector | Sequence[float]) -> LinearModel:
    """Jacobian of the current-free residual dynamics at the station.

    The kinematics reduce to eta_dot = nu at psi = 0 and only the linear damping
    survives in the velocity rows; B is the control effectiveness g.
    """
    th = theta.as_array() if isinstance(theta, ParameterVector) else np.asarray(theta, dtype=float)
    a = np.zeros((STATE_DIM, STATE_DIM))
    a[:3, 3:] = np.eye(3)
    a[3:, 3:] = -params.M_inv @ np.diag(th[2:5])
    return LinearModel(a, control_effectiveness(params))


def is_stabilizable(model: LinearModel, tol: float = 1e-9) -> bool:
    """PBH test: rank [A - lambda I, B] = n for every eigenvalue with Re(lambda) >= 0."""
    n = model.A.shape[0]
    for lam in np.linalg.eigvals(model.A):
        if lam.real < -tol:
            continue
        pencil = np.hstack([model.A - lam * np.eye(n), model.B])
        if np.linalg.matrix_rank(pencil, tol=tol * max(1.0, np.abs(pencil).max())) < n:
            return False
    return True


def care_residual(model: LinearModel, weights: CostWeights | None, P: np.ndarray,
                  Q: np.ndarray | None = None, R: np.ndarray | None = None) -> np.ndarray:
    q, r = _cost(model, weights, Q, R)
    a, b = model.A, model.B
    return a.T @ P + P @ a - P @ b @ np.linalg.solve(r, b.T @ P) + q


def _cost(model: LinearModel, weights: CostWeights | None, Q: np.ndarray | None,
          R: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    if weights is not None:
        return weights.Q, weights.R
    if Q is None or R is None:
        raise PreconditionError("either cost weights or both Q and R are required")
    return np.atleast_2d(np.asarray(Q, dtype=float)), np.atleast_2d(np.asarray(R, dtype=float))


def solve_are(model: LinearModel, weights: CostWeights | None = None, *, Q: np.ndarray | None = None,
              R: np.ndarray | None = None, step: float = RDE_STEP, max_steps: int = RDE_MAX_STEPS,
              tol: float = RDE_TOLERANCE) -> RiccatiSolution:
    """Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0.

    ``weights`` carries the 6-state cost; small problems pass ``Q`` and ``R`` directly.
    """
    q, r = _cost(model, weights, Q, R)
    a, b = model.A, model.B
    n = a.shape[0]
    if q.shape != (n, n) or r.shape != (b.shape[1], b.shape[1]):
        raise PreconditionError(f"cost shapes Q {q.shape}, R {r.shape} do not match the model")
    if np.linalg.eigvalsh(0.5 * (q + q.T))[0] < 0.0 or np.linalg.eigvalsh(0.5 * (r + r.T))[0] <= 0.0:
        raise PreconditionError("Q must be positive semidefinite and R positive definite")
    if not is_stabilizable(model):
        raise RiccatiError("(A, B) is not stabilizable")
    s = b @ np.linalg.solve(r, b.T)

    def rde(p: np.ndarray) -> np.ndarray:
        return a.T @ p + p @ a - p @ s @ p + q

    p = np.zeros((n, n))
    norms = []
    steps = 0
    while steps < max_steps:
        k1 = rde(p)
        norm = float(np.abs(k1).max())
        norms.append(norm)
        if norm <= tol:
            break
        k2 = rde(p + 0.5 * step * k1)
        k3 = rde(p + 0.5 * step * k2)
        k4 = rde(p + step * k3)
        p = p + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        p = 0.5 * (p + p.T)
        steps += 1
        if not np.all(np.isfinite(p)):
            raise RiccatiError(f"Riccati integration diverged after {steps} steps")

    iterations = 0
    if norms[-1] > tol:
        p, iterations = _newton_kleinman(a, b, q, r, p, tol)
    gain = np.linalg.solve(r, b.T @ p)
    residual = float(np.abs(care_residual(model, None, p, q, r)).max())
    logger.info("CARE solved: %d integration steps, %d Newton iterations, residual %.2e",
                steps, iterations, residual)
    return RiccatiSolution(p, gain, residual, steps, iterations, np.array(norms))


def _newton_kleinman(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray,
                     p: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    for iteration in range(1, NEWTON_MAX_ITERATIONS + 1):
        gain = np.linalg.solve(r, b.T @ p)
        closed = a - b @ gain
        if np.linalg.eigvals(closed).real.max() >= 0.0:
            raise RiccatiError("integrated Riccati solution is not stabilizing; increase the horizon")
        nxt = solve_continuous_lyapunov(closed.T, -(q + gain.T @ r @ gain))
        nxt = 0.5 * (nxt + nxt.T)
        change = float(np.abs(nxt - p).max())
        p = nxt
        if change <= tol * max(1.0, float(np.abs(p).max())):
            return p, iteration
    raise RiccatiError(f"Newton-Kleinman did not converge in {NEWTON_MAX_ITERATIONS} iterations")


def weights_from_P(P: np.ndarray) -> np.ndarray:
    """Basis weights with W^T sigma(zeta) == zeta^T P zeta."""
    p = np.asarray(P, dtype=float)
    if p.shape != (STATE_DIM, STATE_DIM):
        raise PreconditionError(f"P must be {STATE_DIM}x{STATE_DIM}, got shape {p.shape}")
    if not np.allclose(p, p.T, rtol=0.0, atol=1e-9 * max(1.0, float(np.abs(p).max()))):
        raise PreconditionError("P must be symmetric")
    i, j = BASIS.left, BASIS.right
    return np.where(i == j, 1.0, 2.0) * p[i, j]


def hjb_residual(model: LinearModel, weights: CostWeights, P: np.ndarray, zetas: np.ndarray) -> np.ndarray:
    """r(zeta, u*) + grad V (A zeta + B u*) with V = zeta^T P zeta and u* = -R^-1 B^T P zeta."""
    z = np.atleast_2d(np.asarray(zetas, dtype=float))
    u = -(z @ P @ model.B) @ weights.R_inv.T
    grad = 2.0 * z @ P
    flow = z @ model.A.T + u @ model.B.T
    cost = (np.einsum("ki,ij,kj->k", z, weights.Q, z) + np.einsum("ki,ij,kj->k", u, weights.R, u))
    return cost + np.einsum("ki,ki->k", grad, flow)
