from __future__ import annotations
from typing import Protocol
from domain.trajectory import Trajectory

class TrajectoryRepository(Protocol):
    def load(self) -> Trajectory:
        ...

    def save(self, trajectory: Trajectory) -> None:
        """Persist every sample; identical trajectories must give identical bytes."""
        ...
