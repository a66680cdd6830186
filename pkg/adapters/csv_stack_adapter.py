from __future__ import annotations
import csv
import logging
from typing import List

from domain.errors import StackFileError
from domain.history_stack import HistoryStack, StackEntry, rank_condition
from domain.vehicle import VehicleParams
from ports.stack_repository import StackRepository

logger = logging.getLogger(__name__)

STACK_COLUMNS = (
    ["t", "x", "y", "psi", "u", "v", "r",
     "uc", "vc", "rc", "ucdot", "vcdot", "rcdot",
     "tau1", "tau2", "tau3",
     "xdot", "ydot", "psidot", "udot", "vdot", "rdot",
     "d_err"]
)


def _format(value: float) -> str:
    return repr(float(value))


class CsvStackAdapter(StackRepository):
    def __init__(self, path: str) -> None:
        self._path = path

    def save(self, stack: HistoryStack) -> None:
        try:
            with open(self._path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(STACK_COLUMNS)
                for e in stack.entries:
                    row = [e.t, *e.zeta, *e.nu_c, *e.nu_c_dot, *e.tau_b, *e.zeta_dot_bar, e.d_err]
                    writer.writerow([_format(v) for v in row])
        except OSError as exc:
            raise StackFileError(f"cannot write stack {self._path}: {exc}") from exc
        logger.info("wrote %d stack entries to %s", len(stack), self._path)

    def load(self, params: VehicleParams, capacity: int, require_rank: bool = True) -> HistoryStack:
        entries: List[StackEntry] = []
        try:
            with open(self._path, "r", encoding="utf-8", newline="") as f:
                reader = csv.reader(f)
                header = next(reader, None)
                if header != STACK_COLUMNS:
                    raise StackFileError(f"{self._path}: unexpected header {header}")
                for lineno, row in enumerate(reader, start=2):
                    try:
                        values = [float(v) for v in row]
                    except ValueError:
                        raise StackFileError(f"{self._path}:{lineno}: malformed number") from None
                    if len(values) != len(STACK_COLUMNS):
                        raise StackFileError(f"{self._path}:{lineno}: expected {len(STACK_COLUMNS)} columns")
                    entries.append(StackEntry.build(
                        params, values[0], values[1:7], values[7:10], values[10:13],
                        values[13:16], values[16:22], values[22]))
        except OSError as exc:
            raise StackFileError(f"cannot read stack {self._path}: {exc}") from exc
        if len(entries) > capacity:
            raise StackFileError(f"{self._path}: {len(entries)} entries exceed capacity {capacity}")
        stack = HistoryStack(capacity, tuple(entries))
        satisfied, y_min = rank_condition(stack)
        if require_rank and not satisfied:
            raise StackFileError(f"{self._path}: rank condition not satisfied (y_min={y_min:.3e})")
        logger.info("loaded %d stack entries from %s, y_min=%.3e", len(stack), self._path, y_min)
        return stack
