"""Experiment configuration sections.

Each section is a frozen dataclass whose fields carry a ``kind`` in their
metadata (float, int, str, vector, matrix). The text adapter uses the kinds
to parse and serialize ``section.key = value`` lines; every section
validates itself on construction.
"""
from __future__ import annotations
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Tuple

import numpy as np

from domain.cost import DEFAULT_Q, CostWeights
from domain.current_field import CurrentField
from domain.errors import PreconditionError
from domain.vehicle import DEFAULT_THETA, ParameterVector, VehicleParams

RUN_MODES = ("time-varying", "constant-current", "linear-test")

Vector = Tuple[float, ...]
Matrix = Tuple[Tuple[float, ...], ...]


class FieldError(PreconditionError):
    def __init__(self, key: str, message: str) -> None:
        self.key = key
        super().__init__(f"{key}: {message}")


def _f(default: float) -> Any:
    return field(default=default, metadata={"kind": "float"})


def _i(default: int) -> Any:
    return field(default=default, metadata={"kind": "int"})


def _s(default: str) -> Any:
    return field(default=default, metadata={"kind": "str"})


def _v(default: Vector, size: int) -> Any:
    return field(default=tuple(default), metadata={"kind": "vector", "size": size})


def _m(default: Matrix, size: int) -> Any:
    return field(default=tuple(tuple(r) for r in default), metadata={"kind": "matrix", "size": size})


def _diag(values: Vector) -> Matrix:
    return tuple(tuple(float(v) if i == j else 0.0 for j in range(len(values))) for i, v in enumerate(values))


def _positive(key: str, *values: float) -> None:
    if not all(math.isfinite(v) and v > 0.0 for v in values):
        raise FieldError(key, f"must be positive, got {values if len(values) > 1 else values[0]}")


def _non_negative(key: str, value: float) -> None:
    if not (math.isfinite(value) and value >= 0.0):
        raise FieldError(key, f"must be non-negative, got {value}")


@dataclass(frozen=True, slots=True)
class VehicleConfig:
    m: float = _f(40.8)
    iz: float = _f(1.5)
    added_mass: Vector = _v((5.0, 20.0, 1.0), 3)
    theta: Vector = _v(DEFAULT_THETA.as_tuple(), 8)

    def __post_init__(self) -> None:
        _positive("m", self.m)
        _positive("iz", self.iz)
        for value in self.added_mass:
            _non_negative("added_mass", value)
        if not all(math.isfinite(v) for v in self.theta):
            raise FieldError("theta", "must be finite")

    def to_params(self) -> VehicleParams:
        return VehicleParams(self.m, self.iz, self.added_mass, ParameterVector.from_array(self.theta))


@dataclass(frozen=True, slots=True)
class CurrentConfig:
    mode: str = _s("time-varying")
    direction: Vector = _v((1.0, 0.0), 2)
    base_speed: float = _f(0.05)
    amplitude: float = _f(0.02)
    period: float = _f(60.0)

    def __post_init__(self) -> None:
        _non_negative("base_speed", self.base_speed)
        _non_negative("amplitude", self.amplitude)
        _positive("period", self.period)
        if math.hypot(*self.direction) == 0.0:
            raise FieldError("direction", "must be a nonzero 2-vector")
        try:
            self.to_field()
        except PreconditionError as exc:
            raise FieldError("mode", str(exc)) from exc

    def to_field(self) -> CurrentField:
        return CurrentField(self.mode, self.direction, self.base_speed, self.amplitude, self.period)


@dataclass(frozen=True, slots=True)
class SimSection:
    dt: float = _f(0.02)
    duration: float = _f(150.0)
    seed: int = _i(0)
    noise_pose: float = _f(0.0)
    noise_velocity: float = _f(0.0)
    noise_current: float = _f(0.0)
    initial_state: Vector = _v((4.0, 4.0, math.pi / 4.0, 0.0, 0.0, 0.0), 6)

    def __post_init__(self) -> None:
        _positive("dt", self.dt)
        if not self.duration >= self.dt:
            raise FieldError("duration", f"must be at least dt={self.dt}, got {self.duration}")
        if self.seed < 0:
            raise FieldError("seed", f"must be non-negative, got {self.seed}")
        for key in ("noise_pose", "noise_velocity", "noise_current"):
            _non_negative(key, getattr(self, key))
        if not all(math.isfinite(v) for v in self.initial_state):
            raise FieldError("initial_state", "must be finite")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


@dataclass(frozen=True, slots=True)
class IdentifierGains:
    k_zeta: Vector = _v((25.0,) * 6, 6)
    k_theta: float = _f(12.5)
    gamma_theta: Vector = _v((187.5, 937.5) + (37.5,) * 6, 8)

    def __post_init__(self) -> None:
        _positive("k_zeta", *self.k_zeta)
        _positive("k_theta", self.k_theta)
        _positive("gamma_theta", *self.gamma_theta)


@dataclass(frozen=True, slots=True)
class AdpGains:
    k_c1: float = _f(0.05)
    k_c2: float = _f(0.5)
    k_gamma_ext: float = _f(1.0)
    k_rho: float = _f(0.25)
    beta: float = _f(0.025)
    gamma0: float = _f(400.0)
    gamma_bar: float = _f(1e4)
    k_a: float = _f(1.0)
    w_bar: float = _f(1e4)
    n_points: int = _i(64)
    critic_every: int = _i(10)
    box_lower: Vector = _v((-0.2, -0.2, -0.05, -0.1, -0.1, -0.1), 6)
    box_upper: Vector = _v((0.2, 0.2, 0.05, 0.1, 0.1, 0.1), 6)

    def __post_init__(self) -> None:
        for key in ("k_c1", "k_c2", "k_rho", "beta", "gamma0", "gamma_bar", "k_a", "w_bar"):
            _positive(key, getattr(self, key))
        _non_negative("k_gamma_ext", self.k_gamma_ext)
        if self.gamma0 > self.gamma_bar:
            raise FieldError("gamma0", f"must not exceed gamma_bar={self.gamma_bar}")
        if self.n_points < 1:
            raise FieldError("n_points", "must be at least 1")
        if self.critic_every < 1:
            raise FieldError("critic_every", "must be at least 1")
        if not all(lo < hi for lo, hi in zip(self.box_lower, self.box_upper)):
            raise FieldError("box_lower", "every lower bound must be below its upper bound")


@dataclass(frozen=True, slots=True)
class CostConfig:
    q: Matrix = _m(_diag(DEFAULT_Q), 6)
    r: Matrix = _m(_diag((1.0, 1.0, 1.0)), 3)

    def __post_init__(self) -> None:
        try:
            CostWeights(np.array(self.q), np.eye(3))
        except PreconditionError as exc:
            raise FieldError("q", str(exc)) from exc
        try:
            CostWeights(np.diag(DEFAULT_Q), np.array(self.r))
        except PreconditionError as exc:
            raise FieldError("r", str(exc)) from exc

    def to_weights(self) -> CostWeights:
        return CostWeights(np.array(self.q), np.array(self.r))


@dataclass(frozen=True, slots=True)
class StackConfig:
    capacity: int = _i(40)
    path: str = _s("stack.csv")
    window: float = _f(0.5)
    swap_margin: float = _f(0.01)

    def __post_init__(self) -> None:
        if self.capacity < 1:
            raise FieldError("capacity", "must be at least 1")
        _positive("window", self.window)
        _non_negative("swap_margin", self.swap_margin)


@dataclass(frozen=True, slots=True)
class CollectConfig:
    duration: float = _f(120.0)
    amplitude: float = _f(1.0)
    kp: Vector = _v((60.0, 80.0, 10.0), 3)
    kd: Vector = _v((80.0, 100.0, 6.0), 3)
    stride: int = _i(10)
    patience: int = _i(60)

    def __post_init__(self) -> None:
        _positive("duration", self.duration)
        _non_negative("amplitude", self.amplitude)
        _positive("kp", *self.kp)
        _positive("kd", *self.kd)
        if self.stride < 1:
            raise FieldError("stride", "must be at least 1")
        if self.patience < 1:
            raise FieldError("patience", "must be at least 1")


@dataclass(frozen=True, slots=True)
class ReportConfig:
    position_threshold: float = _f(0.5)
    heading_threshold: float = _f(0.1)

    def __post_init__(self) -> None:
        _positive("position_threshold", self.position_threshold)
        _positive("heading_threshold", self.heading_threshold)


@dataclass(frozen=True, slots=True)
class RunSection:
    mode: str = _s("time-varying")
    output_dir: str = _s("out")

    def __post_init__(self) -> None:
        if self.mode not in RUN_MODES:
            raise FieldError("mode", f"must be one of {RUN_MODES}, got {self.mode!r}")


SECTIONS: Dict[str, type] = {
    "vehicle": VehicleConfig,
    "current": CurrentConfig,
    "sim": SimSection,
    "identifier": IdentifierGains,
    "adp": AdpGains,
    "cost": CostConfig,
    "stack": StackConfig,
    "collect": CollectConfig,
    "report": ReportConfig,
    "run": RunSection,
}


@dataclass(frozen=True, slots=True)
class ExperimentConfig:
    vehicle: VehicleConfig = field(default_factory=VehicleConfig)
    current: CurrentConfig = field(default_factory=CurrentConfig)
    sim: SimSection = field(default_factory=SimSection)
    identifier: IdentifierGains = field(default_factory=IdentifierGains)
    adp: AdpGains = field(default_factory=AdpGains)
    cost: CostConfig = field(default_factory=CostConfig)
    stack: StackConfig = field(default_factory=StackConfig)
    collect: CollectConfig = field(default_factory=CollectConfig)
    report: ReportConfig = field(default_factory=ReportConfig)
    run: RunSection = field(default_factory=RunSection)

    @property
    def mode(self) -> str:
        return self.run.mode

    def current_field(self) -> CurrentField:
        """Current field implied by the run mode."""
        if self.run.mode == "linear-test" or self.current.mode == "none":
            return CurrentField.none()
        if self.run.mode == "constant-current":
            return CurrentField("constant-earth-fixed", self.current.direction,
                                self.current.base_speed, 0.0, self.current.period)
        return self.current.to_field()
