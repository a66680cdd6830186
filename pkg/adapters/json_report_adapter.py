from __future__ import annotations
import json
import math
from typing import Any, Dict
from domain.errors import LabError
from domain.trajectory import RunReport
from ports.report_repository import ReportRepository

# null in these fields means "never settled"; elsewhere it stands for NaN
_OPTIONAL = ("settling_time_position", "settling_time_heading")

class ReportFileError(LabError):
    pass

def _clean(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value

class JsonReportAdapter(ReportRepository):
    def __init__(self, path: str) -> None:
        self._path = path

    def _read(self) -> Dict[str, Any]:
        try:
            with open(self._path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except (OSError, ValueError) as exc:
            raise ReportFileError(f"cannot read report {self._path}: {exc}") from exc

    def _write(self, data: Dict[str, Any]) -> None:
        try:
            with open(self._path, 'w', encoding='utf-8') as f:
                json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)
                f.write("\n")
        except OSError as exc:
            raise ReportFileError(f"cannot write report {self._path}: {exc}") from exc

    def load(self) -> RunReport:
        data = self._read()
        return RunReport.from_dict({k: (math.nan if v is None and k not in _OPTIONAL else v)
                                    for k, v in data.items()})

    def save(self, report: RunReport) -> None:
        self._write({k: _clean(v) for k, v in report.to_dict().items()})
