from __future__ import annotations
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from domain.errors import PreconditionError
from domain.vehicle import STATE_FIELDS

BASE_COLUMNS = ("t",) + STATE_FIELDS + ("uc", "vc", "tau1", "tau2", "tau3", "ucdot", "vcdot")


@dataclass(frozen=True, slots=True, eq=False)
class TrajectorySample:
    step: int
    t: float
    zeta: np.ndarray
    nu_c: np.ndarray
    nu_c_dot: np.ndarray
    tau_b: np.ndarray
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def row(self, diagnostic_names: Sequence[str]) -> List[float]:
        values = [self.t, *self.zeta, self.nu_c[0], self.nu_c[1], *self.tau_b, self.nu_c_dot[0], self.nu_c_dot[1]]
        values.extend(self.diagnostics.get(name, math.nan) for name in diagnostic_names)
        return [float(v) for v in values]


@dataclass(slots=True)
class Trajectory:
    """Samples at t = k * dt; the step index is kept so time never accumulates."""
    dt: float
    diagnostic_names: Tuple[str, ...] = ()
    samples: List[TrajectorySample] = field(default_factory=list)

    def append(self, sample: TrajectorySample) -> None:
        if self.samples and sample.step != self.samples[-1].step + 1:
            raise PreconditionError(f"trajectory step {sample.step} does not follow {self.samples[-1].step}")
        if not self.diagnostic_names and sample.diagnostics:
            self.diagnostic_names = tuple(sample.diagnostics)
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def columns(self) -> Tuple[str, ...]:
        return BASE_COLUMNS + self.diagnostic_names

    def as_array(self) -> np.ndarray:
        return np.array([s.row(self.diagnostic_names) for s in self.samples]).reshape(len(self.samples), len(self.columns))

    def column(self, name: str) -> np.ndarray:
        try:
            index = self.columns.index(name)
        except ValueError:
            raise KeyError(f"no trajectory column {name!r}") from None
        return self.as_array()[:, index]

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def states(self) -> np.ndarray:
        return np.array([s.zeta for s in self.samples])


def settling_time(times: np.ndarray, inside: np.ndarray) -> Optional[float]:
    """First time after which ``inside`` stays true to the end, None if it never settles."""
    if inside.size == 0 or not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return float(times[0])
    return float(times[outside[-1] + 1])


def _nanmax(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.max()) if finite.size else math.nan


def _nanmin(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite.min()) if finite.size else math.nan


def _last(values: np.ndarray) -> float:
    finite = values[np.isfinite(values)]
    return float(finite[-1]) if finite.size else math.nan


@dataclass(slots=True)
class RunReport:
    mode: str
    seed: int
    n_samples: int
    final_pose_norm: float
    final_theta_error: float
    settling_time_position: Optional[float]
    settling_time_heading: Optional[float]
    min_lambda_min: float
    max_abs_delta: float
    max_extrapolated_delta: float
    max_gamma_norm: float
    max_actor_norm: float
    final_critic_actor_gap: float
    wall_clock_s: float = 0.0
    cpu_seconds: float = 0.0
    peak_rss_mb: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, object]) -> "RunReport":
        return cls(**data)


def summarize(trajectory: Trajectory, mode: str, seed: int,
              position_threshold: float, heading_threshold: float) -> RunReport:
    """RunReport metrics computed from trajectory columns only."""
    if not trajectory.samples:
        raise PreconditionError("cannot summarize an empty trajectory")
    data = trajectory.as_array()
    cols = {name: data[:, i] for i, name in enumerate(trajectory.columns)}
    times = cols["t"]
    planar = np.hypot(cols["x"], cols["y"])
    heading = np.abs(cols["psi"])

    def diag(name: str) -> np.ndarray:
        return cols.get(name, np.full(len(times), math.nan))

    return RunReport(
        mode=mode,
        seed=seed,
        n_samples=len(times),
        final_pose_norm=float(np.linalg.norm([cols["x"][-1], cols["y"][-1], cols["psi"][-1]])),
        final_theta_error=_last(diag("theta_tilde_norm")),
        settling_time_position=settling_time(times, planar <= position_threshold),
        settling_time_heading=settling_time(times, heading <= heading_threshold),
        min_lambda_min=_nanmin(diag("lambda_min")),
        max_abs_delta=_nanmax(np.abs(diag("delta"))),
        max_extrapolated_delta=_nanmax(diag("delta_ext_max")),
        max_gamma_norm=_nanmax(diag("gamma_norm")),
        max_actor_norm=_nanmax(diag("wa_norm")),
        final_critic_actor_gap=_last(diag("wc_wa_gap")),
    )
