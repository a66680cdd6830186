from __future__ import annotations
from typing import Protocol
from domain.config import ExperimentConfig

class ConfigRepository(Protocol):
    def load(self) -> ExperimentConfig:
        """Return the stored configuration, defaults filled in for omitted keys."""
        ...

    def save(self, config: ExperimentConfig) -> None:
        ...
