from __future__ import annotations
import logging
import os
import time
from dataclasses import replace
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import psutil

from application.adp import ActorCritic, extrapolation_set
from application.data_collection import collect_stack
from application.identifier import convergence_diagnostics
from application.riccati_oracle import is_stabilizable, linearize, solve_are
from application.station_keeping import build_station_keeping, residual_model
from domain.config import ExperimentConfig
from domain.errors import DiagnosticUnavailableError
from domain.history_stack import HistoryStack, rank_condition, sigma_min
from domain.trajectory import RunReport, summarize
from ports.report_repository import ReportRepository
from ports.stack_repository import StackRepository
from ports.trajectory_repository import TrajectoryRepository

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
REPORT_FILE = "report.json"

ProgressListener = Callable[[str, Dict[str, Any]], None]


class ExperimentManager:
    """Runs the collect / run / oracle / check use cases against file-backed repositories.

    Repositories are built per call from the paths in the configuration.
    """

    def __init__(self,
                 stacks: Callable[[str], StackRepository],
                 trajectories: Callable[[str], TrajectoryRepository],
                 reports: Callable[[str], ReportRepository]) -> None:
        self._stacks = stacks
        self._trajectories = trajectories
        self._reports = reports
        self._listeners: List[ProgressListener] = []

    def on_progress(self, callback: ProgressListener) -> None:
        self._listeners.append(callback)

    def _notify(self, phase: str, **info: Any) -> None:
        for cb in self._listeners:
            cb(phase, info)

    def collect(self, config: ExperimentConfig) -> HistoryStack:
        params = config.vehicle.to_params()
        stack, y_min = collect_stack(config, params)
        self._stacks(config.stack.path).save(stack)
        self._notify("collected", path=config.stack.path, entries=len(stack), y_min=y_min)
        return stack

    def load_stack(self, config: ExperimentConfig, require_rank: bool = True) -> HistoryStack:
        return self._stacks(config.stack.path).load(config.vehicle.to_params(), config.stack.capacity, require_rank)

    def run(self, config: ExperimentConfig) -> RunReport:
        """Simulate, persist the trajectory, and report from the persisted file."""
        params = config.vehicle.to_params()
        stack = None if config.mode == "linear-test" else self.load_stack(config)
        setup = build_station_keeping(config, params, stack)

        process = psutil.Process()
        cpu_start = process.cpu_times()
        wall_start = time.perf_counter()
        trajectory = setup.simulator.run(setup.controller)
        wall = time.perf_counter() - wall_start
        cpu_end = process.cpu_times()
        rss_mb = process.memory_info().rss / 2 ** 20

        os.makedirs(config.run.output_dir, exist_ok=True)
        trajectory_path = os.path.join(config.run.output_dir, TRAJECTORY_FILE)
        repo = self._trajectories(trajectory_path)
        repo.save(trajectory)
        report = summarize(repo.load(), config.mode, config.sim.seed,
                           config.report.position_threshold, config.report.heading_threshold)
        report = replace(report, wall_clock_s=wall,
                         cpu_seconds=(cpu_end.user - cpu_start.user) + (cpu_end.system - cpu_start.system),
                         peak_rss_mb=rss_mb)
        report_path = os.path.join(config.run.output_dir, REPORT_FILE)
        self._reports(report_path).save(report)
        logger.info("run finished in %.2f s: final |eta|=%.3e, max |delta|=%.3e",
                    wall, report.final_pose_norm, report.max_abs_delta)
        self._notify("run", trajectory=trajectory_path, report=report_path)
        return report

    def oracle(self, config: ExperimentConfig) -> Dict[str, Any]:
        params = config.vehicle.to_params()
        model = linearize(params, params.theta)
        solution = solve_are(model, config.cost.to_weights())
        closed = np.linalg.eigvals(model.A - model.B @ solution.K)
        return {
            "stabilizable": is_stabilizable(model),
            "P": solution.P.tolist(),
            "K": solution.K.tolist(),
            "weights": solution.weights.tolist(),
            "residual": solution.residual,
            "closed_loop_max_real": float(closed.real.max()),
        }

    def check(self, config: ExperimentConfig) -> Dict[str, Any]:
        """Stack rank and identifier constants, plus the excitation monitor at the initial weights."""
        params = config.vehicle.to_params()
        stack = self.load_stack(config, require_rank=False)
        satisfied, y_min = rank_condition(stack)
        result: Dict[str, Any] = {
            "entries": len(stack),
            "rank_satisfied": satisfied,
            "y_min": y_min,
            "sigma_min": sigma_min(stack),
            "d_bar": stack.derivative_error_bound,
        }
        try:
            diag = convergence_diagnostics(stack, config.identifier.k_zeta, config.identifier.k_theta)
            result.update(alpha_p=diag.alpha_p, k_p=diag.k_p, d_theta=diag.d_theta)
        except DiagnosticUnavailableError as exc:
            logger.warning("identifier constants unavailable: %s", exc)
            result.update(alpha_p=None, k_p=None, d_theta=None)

        adp = config.adp
        weights = solve_are(linearize(params, params.theta), config.cost.to_weights()).weights
        points = extrapolation_set(adp.box_lower, adp.box_upper, adp.n_points, config.sim.seed)
        actor_critic = ActorCritic(residual_model(config, params), params, config.cost.to_weights(), adp, points)
        theta_hat = params.theta.as_array() if config.mode == "linear-test" else np.zeros(len(params.theta.as_tuple()))
        result["lambda_min"] = actor_critic.excitation_monitor(theta_hat, weights, adp.gamma0 * np.eye(len(weights)))
        return result


def with_overrides(config: ExperimentConfig, *, seed: Optional[int] = None, mode: Optional[str] = None,
                   stack_path: Optional[str] = None, output_dir: Optional[str] = None) -> ExperimentConfig:
    """Apply command-line overrides; the sections re-validate on replace."""
    if seed is not None:
        config = replace(config, sim=replace(config.sim, seed=seed))
    if mode is not None:
        config = replace(config, run=replace(config.run, mode=mode))
    if stack_path is not None:
        config = replace(config, stack=replace(config.stack, path=stack_path))
    if output_dir is not None:
        config = replace(config, run=replace(config.run, output_dir=output_dir))
    return config
