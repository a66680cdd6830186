from __future__ import annotations
import math
from dataclasses import dataclass
from typing import Tuple

from domain.errors import PreconditionError
from domain.hydrodynamics import body_current
from domain.vehicle import Current, Pose

CURRENT_MODES = ("time-varying", "constant-earth-fixed", "none")


@dataclass(frozen=True, slots=True)
class CurrentField:
    """Single earth-fixed direction, speed U0 + U1 sin(2 pi t / T_c)."""
    mode: str = "time-varying"
    direction: Tuple[float, float] = (1.0, 0.0)
    base_speed: float = 0.05
    amplitude: float = 0.02
    period: float = 60.0

    def __post_init__(self) -> None:
        if self.mode not in CURRENT_MODES:
            raise PreconditionError(f"unknown current mode {self.mode!r}, expected one of {CURRENT_MODES}")
        dx, dy = (float(v) for v in self.direction)
        norm = math.hypot(dx, dy)
        if not norm > 0.0:
            raise PreconditionError("current direction must be a nonzero 2-vector")
        object.__setattr__(self, "direction", (dx / norm, dy / norm))
        if self.base_speed < 0.0 or self.amplitude < 0.0:
            raise PreconditionError("current speeds must be non-negative")
        if not self.period > 0.0:
            raise PreconditionError("current period must be positive")
        if self.mode == "none" and (self.base_speed != 0.0 or self.amplitude != 0.0):
            raise PreconditionError("mode 'none' requires zero current speeds")

    @classmethod
    def none(cls) -> "CurrentField":
        return cls(mode="none", base_speed=0.0, amplitude=0.0)

    def earth_velocity(self, t: float) -> Tuple[float, float]:
        speed = self.base_speed
        if self.mode == "time-varying":
            speed += self.amplitude * math.sin(2.0 * math.pi * t / self.period)
        elif self.mode == "none":
            speed = 0.0
        return self.direction[0] * speed, self.direction[1] * speed

    def earth_acceleration(self, t: float) -> Tuple[float, float]:
        if self.mode != "time-varying":
            return 0.0, 0.0
        omega = 2.0 * math.pi / self.period
        rate = self.amplitude * omega * math.cos(omega * t)
        return self.direction[0] * rate, self.direction[1] * rate


def current_at(field: CurrentField, t: float, pose: Pose | float, r: float) -> Current:
    """Body-fixed current seen by a craft at ``pose`` turning at ``r``."""
    psi = pose.psi if isinstance(pose, Pose) else float(pose)
    nu_c, nu_c_dot = body_current(psi, r, field.earth_velocity(t), field.earth_acceleration(t))
    return Current(tuple(nu_c), tuple(nu_c_dot))
