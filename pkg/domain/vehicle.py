from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple, Union

import numpy as np

from domain.errors import PreconditionError

THETA_FIELDS = ("ca1", "ca2", "xu", "yv", "nr", "xuu", "yvv", "nrr")
STATE_FIELDS = ("x", "y", "psi", "u", "v", "r")


def wrap_angle(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    return math.pi - (math.pi - angle) % (2.0 * math.pi)


def _require_finite(name: str, values: Sequence[float]) -> None:
    if not all(math.isfinite(v) for v in values):
        raise PreconditionError(f"{name} must be finite, got {tuple(values)}")


@dataclass(frozen=True, slots=True)
class Pose:
    x: float
    y: float
    psi: float

    def __post_init__(self) -> None:
        _require_finite("pose", (self.x, self.y, self.psi))
        object.__setattr__(self, "psi", wrap_angle(self.psi))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.psi])


@dataclass(frozen=True, slots=True)
class BodyVelocity:
    u: float
    v: float
    r: float

    def __post_init__(self) -> None:
        _require_finite("body velocity", (self.u, self.v, self.r))

    def as_array(self) -> np.ndarray:
        return np.array([self.u, self.v, self.r])


@dataclass(frozen=True, slots=True)
class State:
    pose: Pose
    vel: BodyVelocity

    @classmethod
    def from_array(cls, zeta: Sequence[float]) -> "State":
        z = np.asarray(zeta, dtype=float)
        if z.shape != (6,):
            raise PreconditionError(f"state must have dimension 6, got shape {z.shape}")
        return cls(Pose(z[0], z[1], z[2]), BodyVelocity(z[3], z[4], z[5]))

    @classmethod
    def zero(cls) -> "State":
        return cls.from_array(np.zeros(6))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.pose.as_array(), self.vel.as_array()])


StateLike = Union[State, np.ndarray, Sequence[float]]


def as_zeta(state: StateLike) -> np.ndarray:
    if isinstance(state, State):
        return state.as_array()
    z = np.asarray(state, dtype=float)
    if z.shape != (6,):
        raise PreconditionError(f"state must have dimension 6, got shape {z.shape}")
    return z


@dataclass(frozen=True, slots=True)
class Current:
    """Body-fixed irrotational current and its body-frame time derivative."""
    nu_c: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    nu_c_dot: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "nu_c", tuple(float(v) for v in self.nu_c))
        object.__setattr__(self, "nu_c_dot", tuple(float(v) for v in self.nu_c_dot))
        if len(self.nu_c) != 3 or len(self.nu_c_dot) != 3:
            raise PreconditionError("current vectors must have 3 components")
        _require_finite("current", self.nu_c + self.nu_c_dot)
        if self.nu_c[2] != 0.0:
            raise PreconditionError("current must be irrotational (nu_c[2] == 0)")

    @classmethod
    def none(cls) -> "Current":
        return cls()

    @property
    def velocity(self) -> np.ndarray:
        return np.array(self.nu_c)

    @property
    def acceleration(self) -> np.ndarray:
        return np.array(self.nu_c_dot)


@dataclass(frozen=True, slots=True)
class ParameterVector:
    ca1: float = 0.0
    ca2: float = 0.0
    xu: float = 0.0
    yv: float = 0.0
    nr: float = 0.0
    xuu: float = 0.0
    yvv: float = 0.0
    nrr: float = 0.0

    def __post_init__(self) -> None:
        _require_finite("theta", self.as_tuple())

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "ParameterVector":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (len(THETA_FIELDS),):
            raise PreconditionError(f"theta must have dimension {len(THETA_FIELDS)}, got shape {arr.shape}")
        return cls(*(float(v) for v in arr))

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in THETA_FIELDS)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple())


# Plausible magnitudes for a 40.8 kg craft; ca1 = Y_vdot, ca2 = X_udot.
DEFAULT_THETA = ParameterVector(ca1=-20.0, ca2=-5.0, xu=25.0, yv=40.0, nr=2.0,
                                xuu=15.0, yvv=30.0, nrr=1.5)


@dataclass(frozen=True, slots=True)
class VehicleParams:
    m: float = 40.8
    Iz: float = 1.5
    added_mass: Tuple[float, float, float] = (5.0, 20.0, 1.0)
    theta: ParameterVector = DEFAULT_THETA
    M_RB: np.ndarray = field(init=False, repr=False, compare=False)
    M_A: np.ndarray = field(init=False, repr=False, compare=False)
    M: np.ndarray = field(init=False, repr=False, compare=False)
    M_inv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "added_mass", tuple(float(v) for v in self.added_mass))
        if not (self.m > 0.0 and self.Iz > 0.0):
            raise PreconditionError(f"mass and inertia must be positive, got m={self.m}, Iz={self.Iz}")
        if len(self.added_mass) != 3 or any(a < 0.0 for a in self.added_mass):
            raise PreconditionError(f"added mass must be 3 non-negative values, got {self.added_mass}")
        m_rb = np.diag([self.m, self.m, self.Iz])
        m_a = np.diag(self.added_mass)
        mass = m_rb + m_a
        if np.linalg.eigvalsh(mass).min() <= 0.0:
            raise PreconditionError("M = M_RB + M_A must be positive definite")
        object.__setattr__(self, "M_RB", m_rb)
        object.__setattr__(self, "M_A", m_a)
        object.__setattr__(self, "M", mass)
        object.__setattr__(self, "M_inv", np.linalg.inv(mass))
