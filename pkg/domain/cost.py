from __future__ import annotations
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from domain.errors import PreconditionError

DEFAULT_Q = (20.0, 50.0, 20.0, 10.0, 10.0, 10.0)


def _symmetric_pd(name: str, matrix: np.ndarray, size: int) -> np.ndarray:
    if matrix.shape != (size, size):
        raise PreconditionError(f"{name} must be {size}x{size}, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise PreconditionError(f"{name} must be finite")
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
        raise PreconditionError(f"{name} must be symmetric")
    if np.linalg.eigvalsh(matrix).min() <= 0.0:
        raise PreconditionError(f"{name} must be positive definite")
    return matrix


@dataclass(frozen=True, slots=True, eq=False)
class CostWeights:
    Q: np.ndarray = field(default_factory=lambda: np.diag(DEFAULT_Q))
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    R_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "Q", _symmetric_pd("Q", np.asarray(self.Q, dtype=float), 6))
        object.__setattr__(self, "R", _symmetric_pd("R", np.asarray(self.R, dtype=float), 3))
        object.__setattr__(self, "R_inv", np.linalg.inv(self.R))

    @classmethod
    def from_diagonals(cls, q: Sequence[float], r: Sequence[float]) -> "CostWeights":
        return cls(np.diag(q), np.diag(r))

    @property
    def q_bounds(self) -> tuple[float, float]:
        eig = np.linalg.eigvalsh(self.Q)
        return float(eig[0]), float(eig[-1])


def local_cost(zeta: np.ndarray, u: np.ndarray, weights: CostWeights) -> np.ndarray:
    """r(zeta, u) = zeta^T Q zeta + u^T R u, batched over leading axes."""
    z = np.asarray(zeta, dtype=float)
    a = np.asarray(u, dtype=float)
    return (np.einsum("...i,ij,...j->...", z, weights.Q, z)
            + np.einsum("...i,ij,...j->...", a, weights.R, a))
