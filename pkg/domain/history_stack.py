from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from domain.errors import PreconditionError
from domain.hydrodynamics import control_effectiveness, drift_known, regressor_full
from domain.vehicle import Current, VehicleParams

logger = logging.getLogger(__name__)

DEFAULT_CAPACITY = 40
RANK_TOLERANCE = 1e-8
SWAP_MARGIN = 1e-2


@dataclass(frozen=True, slots=True, eq=False)
class StackEntry:
    """One recorded sample; ``target`` is zeta_dot_bar - f_0 - g tau_b."""
    t: float
    zeta: np.ndarray
    nu_c: np.ndarray
    nu_c_dot: np.ndarray
    tau_b: np.ndarray
    zeta_dot_bar: np.ndarray
    Y: np.ndarray
    target: np.ndarray
    d_err: float = 0.0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.Y)):
            raise PreconditionError(f"stack entry at t={self.t} has a non-finite regressor")

    @classmethod
    def build(cls, params: VehicleParams, t: float, zeta: Sequence[float], nu_c: Sequence[float],
              nu_c_dot: Sequence[float], tau_b: Sequence[float], zeta_dot_bar: Sequence[float],
              d_err: float = 0.0) -> "StackEntry":
        zeta = np.asarray(zeta, dtype=float)
        current = Current(tuple(nu_c), tuple(nu_c_dot))
        tau = np.asarray(tau_b, dtype=float)
        zdot = np.asarray(zeta_dot_bar, dtype=float)
        y = regressor_full(params, zeta, current)
        target = zdot - drift_known(params, zeta, current.acceleration) - control_effectiveness(params) @ tau
        return cls(float(t), zeta, current.velocity, current.acceleration, tau, zdot, y, target, float(d_err))


@dataclass(frozen=True, slots=True, eq=False)
class HistoryStack:
    capacity: int = DEFAULT_CAPACITY
    entries: Tuple[StackEntry, ...] = ()
    gram: Optional[np.ndarray] = field(default=None, repr=False)
    moment: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise PreconditionError("stack capacity must be at least 1")
        if len(self.entries) > self.capacity:
            raise PreconditionError(f"{len(self.entries)} entries exceed capacity {self.capacity}")
        if self.entries and self.gram is None:
            object.__setattr__(self, "gram", sum(e.Y.T @ e.Y for e in self.entries))
            object.__setattr__(self, "moment", sum(e.Y.T @ e.target for e in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.capacity

    @property
    def n_params(self) -> int:
        return self.entries[0].Y.shape[1] if self.entries else 0

    @property
    def derivative_error_bound(self) -> float:
        """d_bar: the largest per-entry derivative error estimate."""
        return max((e.d_err for e in self.entries), default=0.0)

    @property
    def regressor_norm_sum(self) -> float:
        return float(sum(np.linalg.norm(e.Y, ord=2) for e in self.entries))


def _sigma_min(gram: np.ndarray) -> float:
    return float(np.sqrt(max(np.linalg.eigvalsh(gram)[0], 0.0)))


def sigma_min(stack: HistoryStack) -> float:
    """Smallest singular value of the vertically stacked regressors."""
    if not stack.entries:
        return 0.0
    return _sigma_min(stack.gram)


def _duplicates(stack: HistoryStack, candidate: StackEntry) -> bool:
    return any(np.array_equal(entry.Y, candidate.Y) for entry in stack.entries)


def stack_insert(stack: HistoryStack, candidate: StackEntry,
                 margin: float = SWAP_MARGIN) -> Tuple[HistoryStack, bool]:
    """Append while room remains, otherwise swap in the candidate where it most raises sigma_min.

    A swap must raise sigma_min by more than the relative ``margin``; a regressor
    already in the stack is never taken again.
    """
    if _duplicates(stack, candidate):
        return stack, False
    if not stack.full:
        return HistoryStack(stack.capacity, stack.entries + (candidate,)), True
    current = _sigma_min(stack.gram)
    cand_gram = candidate.Y.T @ candidate.Y
    best_index, best_value = -1, current * (1.0 + margin)
    for index, entry in enumerate(stack.entries):
        value = _sigma_min(stack.gram - entry.Y.T @ entry.Y + cand_gram)
        if value > best_value:
            best_index, best_value = index, value
    if best_index < 0:
        return stack, False
    entries = stack.entries[:best_index] + (candidate,) + stack.entries[best_index + 1:]
    logger.debug("stack entry %d replaced, sigma_min %.3e -> %.3e", best_index, current, best_value)
    return HistoryStack(stack.capacity, entries), True


def rank_condition(stack: HistoryStack) -> Tuple[bool, float]:
    """(rank(sum Y_j^T Y_j) == p, smallest eigenvalue of that sum)."""
    if not stack.entries:
        return False, 0.0
    eig = np.linalg.eigvalsh(stack.gram)
    y_min = float(eig[0])
    rank = int(np.sum(eig > RANK_TOLERANCE * eig[-1])) if eig[-1] > 0.0 else 0
    return rank == stack.n_params, y_min
