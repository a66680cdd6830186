import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from adapters.csv_stack_adapter import STACK_COLUMNS, CsvStackAdapter
from adapters.csv_trajectory_adapter import CsvTrajectoryAdapter, TrajectoryFileError
from adapters.json_report_adapter import JsonReportAdapter, ReportFileError
from domain.errors import StackFileError
from domain.trajectory import RunReport, Trajectory, TrajectorySample, summarize


def _trajectory(n=5, dt=0.1):
    trajectory = Trajectory(dt)
    for k in range(n):
        zeta = np.array([1.0 - 0.2 * k, 0.5, 0.1, 0.0, 0.0, 0.0])
        trajectory.append(TrajectorySample(k, k * dt, zeta, np.array([0.05, 0.0, 0.0]), np.zeros(3),
                                           np.array([1.0, 2.0, 3.0]),
                                           {"delta": -0.5 * k, "lambda_min": 0.1 + k, "wa_norm": math.nan}))
    return trajectory


def test_stack_round_trip_rebuilds_the_regressors(params, stack_factory, tmp_path):
    stack = stack_factory(n=12, d_bar=0.01)
    adapter = CsvStackAdapter(str(tmp_path / "stack.csv"))
    adapter.save(stack)
    loaded = adapter.load(params, 40)
    assert len(loaded) == 12
    for original, restored in zip(stack.entries, loaded.entries):
        assert_allclose(restored.Y, original.Y)
        assert_allclose(restored.target, original.target)
        assert restored.d_err == original.d_err
    assert_allclose(loaded.gram, stack.gram)


def test_stack_file_has_the_documented_header(stack_factory, tmp_path):
    path = tmp_path / "stack.csv"
    CsvStackAdapter(str(path)).save(stack_factory(n=2))
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split(",") == STACK_COLUMNS
    assert len(lines) == 3


def test_rank_deficient_stack_file_is_refused_unless_asked(params, stack_factory, tmp_path):
    adapter = CsvStackAdapter(str(tmp_path / "stack.csv"))
    adapter.save(stack_factory(n=1))
    with pytest.raises(StackFileError, match="rank condition"):
        adapter.load(params, 40)
    assert len(adapter.load(params, 40, require_rank=False)) == 1


@pytest.mark.parametrize("content, message", [
    ("t,x\n1,2\n", "unexpected header"),
    (",".join(STACK_COLUMNS) + "\n" + ",".join(["1"] * 22) + "\n", "expected 23 columns"),
    (",".join(STACK_COLUMNS) + "\n" + ",".join(["a"] * 23) + "\n", "malformed number"),
])
def test_malformed_stack_files(params, tmp_path, content, message):
    path = tmp_path / "stack.csv"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(StackFileError, match=message):
        CsvStackAdapter(str(path)).load(params, 40, require_rank=False)


def test_stack_over_capacity_is_refused(params, stack_factory, tmp_path):
    adapter = CsvStackAdapter(str(tmp_path / "stack.csv"))
    adapter.save(stack_factory(n=10))
    with pytest.raises(StackFileError, match="capacity"):
        adapter.load(params, 5)


def test_missing_stack_file(params, tmp_path):
    with pytest.raises(StackFileError):
        CsvStackAdapter(str(tmp_path / "absent.csv")).load(params, 40)


def test_trajectory_round_trip_keeps_columns_and_values(tmp_path):
    trajectory = _trajectory()
    adapter = CsvTrajectoryAdapter(str(tmp_path / "trajectory.csv"))
    adapter.save(trajectory)
    loaded = adapter.load()
    assert loaded.columns == trajectory.columns
    assert loaded.dt == pytest.approx(0.1)
    assert_allclose(loaded.as_array(), trajectory.as_array(), equal_nan=True)


def test_identical_trajectories_give_identical_bytes(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    CsvTrajectoryAdapter(str(first)).save(_trajectory())
    CsvTrajectoryAdapter(str(second)).save(_trajectory())
    assert first.read_bytes() == second.read_bytes()


def test_trajectory_with_a_foreign_header_is_refused(tmp_path):
    path = tmp_path / "trajectory.csv"
    path.write_text("time,x\n0,1\n", encoding="utf-8")
    with pytest.raises(TrajectoryFileError):
        CsvTrajectoryAdapter(str(path)).load()


def test_summary_reads_only_trajectory_columns():
    report = summarize(_trajectory(), "time-varying", 3, position_threshold=0.6, heading_threshold=0.2)
    assert report.n_samples == 5
    assert report.final_pose_norm == pytest.approx(math.sqrt(0.2 ** 2 + 0.5 ** 2 + 0.1 ** 2))
    assert report.settling_time_position == pytest.approx(0.4)
    assert report.settling_time_heading == 0.0
    assert report.max_abs_delta == pytest.approx(2.0)
    assert report.min_lambda_min == pytest.approx(0.1)
    assert math.isnan(report.max_actor_norm)
    assert math.isnan(report.final_theta_error)


def test_report_round_trip_maps_nan_and_unsettled_to_null(tmp_path):
    report = summarize(_trajectory(), "time-varying", 3, position_threshold=0.01, heading_threshold=0.2)
    assert report.settling_time_position is None
    adapter = JsonReportAdapter(str(tmp_path / "report.json"))
    adapter.save(report)
    text = (tmp_path / "report.json").read_text(encoding="utf-8")
    assert "NaN" not in text
    loaded = adapter.load()
    assert loaded.settling_time_position is None
    assert math.isnan(loaded.max_actor_norm)
    assert loaded.max_abs_delta == report.max_abs_delta
    assert isinstance(loaded, RunReport)


def test_unreadable_report(tmp_path):
    path = tmp_path / "report.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ReportFileError):
        JsonReportAdapter(str(path)).load()


def test_trajectory_header_puts_the_forces_before_the_current_rates(tmp_path):
    path = tmp_path / "trajectory.csv"
    CsvTrajectoryAdapter(str(path)).save(_trajectory(n=1))
    header = path.read_text(encoding="utf-8").splitlines()[0].split(",")
    assert header[:12] == ["t", "x", "y", "psi", "u", "v", "r", "uc", "vc", "tau1", "tau2", "tau3"]
    assert header[12:16] == ["ucdot", "vcdot", "delta", "lambda_min"]
