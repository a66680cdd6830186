"""Quadratic monomial basis for the value function.

sigma_k(zeta) = zeta_i * zeta_j over the ordered pairs i <= j, so the weight
vector W represents V(zeta) = W^T sigma(zeta) = zeta^T P zeta with P the
symmetric matrix of ``quadratic_form(W)``.
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple

import numpy as np

STATE_DIM = 6


@dataclass(frozen=True, slots=True)
class Basis:
    pairs: Tuple[Tuple[int, int], ...]

    @classmethod
    def quadratic(cls, n: int = STATE_DIM) -> "Basis":
        return cls(tuple((i, j) for i in range(n) for j in range(i, n)))

    @property
    def size(self) -> int:
        return len(self.pairs)

    @property
    def left(self) -> np.ndarray:
        return np.array([i for i, _ in self.pairs])

    @property
    def right(self) -> np.ndarray:
        return np.array([j for _, j in self.pairs])


BASIS = Basis.quadratic()
_I = BASIS.left
_J = BASIS.right


def sigma(zeta: np.ndarray) -> np.ndarray:
    """Basis activations; works on (..., 6) and returns (..., 21)."""
    z = np.asarray(zeta, dtype=float)
    return z[..., _I] * z[..., _J]


def sigma_prime(zeta: np.ndarray) -> np.ndarray:
    """Jacobian d sigma / d zeta, shape (21, 6)."""
    z = np.asarray(zeta, dtype=float)
    jac = np.zeros((BASIS.size, STATE_DIM))
    rows = np.arange(BASIS.size)
    np.add.at(jac, (rows, _I), z[_J])
    np.add.at(jac, (rows, _J), z[_I])
    return jac


def omega(zetas: np.ndarray, flows: np.ndarray) -> np.ndarray:
    """sigma'(zeta) @ f without forming the Jacobian; (..., 6) x (..., 6) -> (..., 21)."""
    return zetas[..., _I] * flows[..., _J] + zetas[..., _J] * flows[..., _I]


def quadratic_form(weights: np.ndarray) -> np.ndarray:
    """Symmetric P with zeta^T P zeta == weights^T sigma(zeta)."""
    w = np.asarray(weights, dtype=float)
    p = np.zeros((STATE_DIM, STATE_DIM))
    off = _I != _J
    p[_I, _J] = np.where(off, 0.5 * w, w)
    p[_J[off], _I[off]] = 0.5 * w[off]
    return p


def value_gradient(zetas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sigma'(zeta)^T W for states (..., 6)."""
    p = quadratic_form(weights)
    return 2.0 * np.asarray(zetas, dtype=float) @ p
