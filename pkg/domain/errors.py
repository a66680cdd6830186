from __future__ import annotations
from typing import Optional


class LabError(Exception):
    """Base class for every failure raised by the station-keeping lab."""


class PreconditionError(LabError, ValueError):
    pass


class ConfigError(LabError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrationError(LabError):
    def __init__(self, message: str, step: Optional[int] = None) -> None:
        self.step = step
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)


class IdentifierDivergenceError(IntegrationError):
    pass


class NumericalFailureError(LabError):
    pass


class DiagnosticUnavailableError(LabError):
    pass


class RiccatiError(LabError):
    pass


class CollectionError(LabError):
    def __init__(self, message: str, y_min: float) -> None:
        self.y_min = y_min
        super().__init__(f"{message} (y_min={y_min:.3e})")


class StackFileError(LabError):
    pass
