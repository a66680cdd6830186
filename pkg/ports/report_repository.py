from __future__ import annotations
from typing import Protocol
from domain.trajectory import RunReport

class ReportRepository(Protocol):
    def load(self) -> RunReport:
        ...

    def save(self, report: RunReport) -> None:
        ...
