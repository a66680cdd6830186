"""Entry point wiring the hexagonal components."""
import sys
from typing import List, Optional

from adapters.csv_stack_adapter import CsvStackAdapter
from adapters.csv_trajectory_adapter import CsvTrajectoryAdapter
from adapters.json_report_adapter import JsonReportAdapter
from adapters.keyvalue_config_adapter import KeyValueConfigAdapter
from application.experiment_manager import ExperimentManager
from ui.cli import Cli


def build_manager() -> ExperimentManager:
    return ExperimentManager(CsvStackAdapter, CsvTrajectoryAdapter, JsonReportAdapter)


def build_cli() -> Cli:
    return Cli(build_manager(), KeyValueConfigAdapter)


def main(argv: Optional[List[str]] = None) -> int:
    return build_cli().main(argv)


if __name__ == '__main__':
    sys.exit(main())
