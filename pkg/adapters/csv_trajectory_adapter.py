from __future__ import annotations
import csv
import logging

import numpy as np

from domain.errors import LabError
from domain.trajectory import BASE_COLUMNS, Trajectory, TrajectorySample
from ports.trajectory_repository import TrajectoryRepository

logger = logging.getLogger(__name__)


class TrajectoryFileError(LabError):
    pass


class CsvTrajectoryAdapter(TrajectoryRepository):
    def __init__(self, path: str) -> None:
        self._path = path

    def save(self, trajectory: Trajectory) -> None:
        names = trajectory.diagnostic_names
        try:
            with open(self._path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(trajectory.columns)
                for sample in trajectory.samples:
                    writer.writerow([repr(v) for v in sample.row(names)])
        except OSError as exc:
            raise TrajectoryFileError(f"cannot write trajectory {self._path}: {exc}") from exc
        logger.info("wrote %d trajectory samples to %s", len(trajectory), self._path)

    def load(self) -> Trajectory:
        try:
            with open(self._path, "r", encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                header = tuple(next(reader, ()))
                rows = [[float(v) for v in row] for row in reader]
        except OSError as exc:
            raise TrajectoryFileError(f"cannot read trajectory {self._path}: {exc}") from exc
        except ValueError as exc:
            raise TrajectoryFileError(f"{self._path}: malformed number: {exc}") from exc
        if header[:len(BASE_COLUMNS)] != BASE_COLUMNS:
            raise TrajectoryFileError(f"{self._path}: unexpected header {header}")
        names = header[len(BASE_COLUMNS):]
        data = np.array(rows).reshape(len(rows), len(header))
        dt = float(data[1, 0] - data[0, 0]) if len(rows) > 1 else 0.0
        trajectory = Trajectory(dt, names)
        for step, row in enumerate(data):
            trajectory.append(TrajectorySample(
                step=step,
                t=float(row[0]),
                zeta=row[1:7].copy(),
                nu_c=np.array([row[7], row[8], 0.0]),
                tau_b=row[9:12].copy(),
                nu_c_dot=np.array([row[12], row[13], 0.0]),
                diagnostics={name: float(v) for name, v in zip(names, row[14:])},
            ))
        return trajectory
