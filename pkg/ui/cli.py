"""Command-line surface: collect, run, oracle and check subcommands."""
from __future__ import annotations
import argparse
import json
import logging
import sys
from dataclasses import asdict
from typing import Any, Callable, Dict, List, Optional

from application.experiment_manager import ExperimentManager, with_overrides
from domain.config import RUN_MODES, ExperimentConfig
from domain.errors import LabError
from ports.config_repository import ConfigRepository

logger = logging.getLogger(__name__)

EXIT_LAB_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="station-keeping",
                                     description="Online ADP station keeping of a 3-DOF marine craft.")
    parser.add_argument("--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR"))
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("collect", "record a history stack from a tracking run"),
                       ("run", "simulate station keeping and write trajectory and report"),
                       ("oracle", "print the Riccati solution and ideal weights as JSON"),
                       ("check", "print stack rank and gain diagnostics as JSON")):
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", default="experiment.cfg", help="dotted-key config file (defaults if missing)")
        cmd.add_argument("--stack", help="history stack CSV path")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--mode", choices=RUN_MODES)
    return parser


class Cli:
    def __init__(self, manager: ExperimentManager, configs: Callable[[str], ConfigRepository]) -> None:
        self._manager = manager
        self._configs = configs
        manager.on_progress(self._report_progress)

    @staticmethod
    def _report_progress(phase: str, info: Dict[str, Any]) -> None:
        logger.info("%s: %s", phase, ", ".join(f"{key}={value}" for key, value in info.items()))

    def _config(self, args: argparse.Namespace) -> ExperimentConfig:
        config = self._configs(args.config).load()
        return with_overrides(config, seed=args.seed, mode=args.mode, stack_path=args.stack, output_dir=args.out)

    def execute(self, args: argparse.Namespace) -> object:
        config = self._config(args)
        if args.command == "collect":
            stack = self._manager.collect(config)
            return {"path": config.stack.path, "entries": len(stack)}
        if args.command == "run":
            return asdict(self._manager.run(config))
        if args.command == "oracle":
            return self._manager.oracle(config)
        return self._manager.check(config)

    def main(self, argv: Optional[List[str]] = None) -> int:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
        try:
            result = self.execute(args)
        except LabError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_LAB_ERROR
        print(json.dumps(result, indent=2, sort_keys=True, default=_jsonable))
        return 0


def _jsonable(value: object) -> object:
    if hasattr(value, "tolist"):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")
