from __future__ import annotations
from typing import Protocol
from domain.history_stack import HistoryStack
from domain.vehicle import VehicleParams

class StackRepository(Protocol):
    def load(self, params: VehicleParams, capacity: int, require_rank: bool = True) -> HistoryStack:
        """Return the persisted stack with regressors recomputed for ``params``.

        Raises StackFileError when ``require_rank`` and the rank condition fails.
        """
        ...

    def save(self, stack: HistoryStack) -> None:
        ...
