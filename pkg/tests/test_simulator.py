import math
from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from application.riccati_oracle import linearize
from application.simulator import (
    ControlOutput,
    LinearPlant,
    NonlinearPlant,
    Simulator,
    build_plant,
    rk4_step,
)
from domain.config import SimSection
from domain.current_field import CurrentField
from domain.errors import IntegrationError, PreconditionError
from domain.vehicle import Current, VehicleParams


class Recorder:
    def __init__(self, tau=(0.0, 0.0, 0.0)):
        self.tau = np.array(tau, dtype=float)
        self.measured = []

    def __call__(self, step, t, measured):
        self.measured.append(measured)
        return ControlOutput(self.tau, {"step": float(step)})


def test_rk4_step_matches_the_taylor_polynomial():
    h = 0.1
    assert rk4_step(lambda t, x: x, 0.0, 1.0, h) == pytest.approx(1 + h + h ** 2 / 2 + h ** 3 / 6 + h ** 4 / 24)


def test_rk4_step_rejects_non_positive_dt():
    with pytest.raises(PreconditionError):
        rk4_step(lambda t, x: x, 0.0, 1.0, 0.0)


def test_integrator_is_fourth_order():
    theta = replace(VehicleParams().theta, xuu=0.0, yvv=0.0, nrr=0.0)
    plant = NonlinearPlant(VehicleParams(theta=theta))
    start = (0.0, 0.0, 0.3, 0.8, -0.5, 0.6)

    def final_state(dt):
        sim = SimSection(dt=dt, duration=2.0, initial_state=start)
        return Simulator(plant, CurrentField.none(), sim).run(Recorder((5.0, -3.0, 0.5))).states[-1]

    reference = final_state(0.05 / 16)
    coarse = np.linalg.norm(final_state(0.05) - reference)
    fine = np.linalg.norm(final_state(0.025) - reference)
    assert 3.8 <= math.log2(coarse / fine) <= 4.3


def test_run_records_every_step_at_exact_times():
    sim = SimSection(dt=0.1, duration=1.0)
    trajectory = Simulator(NonlinearPlant(VehicleParams()), CurrentField(), sim).run(Recorder())
    assert len(trajectory) == 11
    assert [s.step for s in trajectory.samples] == list(range(11))
    assert all(s.t == s.step * 0.1 for s in trajectory.samples)
    assert trajectory.diagnostic_names == ("step",)


def test_noiseless_measurement_is_the_true_state():
    recorder = Recorder((1.0, 0.0, 0.0))
    sim = SimSection(dt=0.05, duration=0.5)
    trajectory = Simulator(NonlinearPlant(VehicleParams()), CurrentField(), sim).run(recorder)
    for sample, measured in zip(trajectory.samples, recorder.measured):
        assert_allclose(measured.zeta, sample.zeta, atol=1e-15)
        assert_allclose(measured.nu_c, sample.nu_c)


def test_noisy_runs_are_reproducible_from_the_seed():
    sim = SimSection(dt=0.05, duration=0.5, noise_pose=0.01, noise_velocity=0.01, noise_current=0.001, seed=3)
    simulator = Simulator(NonlinearPlant(VehicleParams()), CurrentField(), sim)

    def measured(s):
        recorder = Recorder()
        Simulator(NonlinearPlant(VehicleParams()), CurrentField(), s).run(recorder)
        return np.array([m.zeta for m in recorder.measured])

    first, second = measured(sim), measured(sim)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, measured(replace(sim, seed=4)))
    assert simulator.dt == 0.05


def test_non_finite_control_is_reported_with_its_step():
    class Broken(Recorder):
        def __call__(self, step, t, measured):
            return ControlOutput(np.array([np.nan, 0.0, 0.0]) if step == 3 else self.tau)

    sim = SimSection(dt=0.1, duration=1.0)
    with pytest.raises(IntegrationError) as info:
        Simulator(NonlinearPlant(VehicleParams()), CurrentField(), sim).run(Broken())
    assert info.value.step == 3


def test_simulator_feeds_the_body_frame_current():
    field = CurrentField(mode="constant-earth-fixed", base_speed=0.1)
    sim = SimSection(dt=0.1, duration=0.1, initial_state=(0.0, 0.0, math.pi / 2, 0.0, 0.0, 0.0))
    current = Simulator(NonlinearPlant(VehicleParams()), field, sim).current(0.0, np.array(sim.initial_state))
    assert_allclose(current.velocity, [0.0, -0.1, 0.0], atol=1e-15)


def test_linear_plant_matches_the_station_linearization(params, rng):
    plant = LinearPlant(params)
    model = linearize(params, params.theta)
    zeta, tau = rng.normal(size=6), rng.normal(size=3)
    expected = model.A @ zeta + model.B @ tau
    assert_allclose(plant.derivative(zeta, tau, Current((0.2, 0.1, 0.0))), expected, atol=1e-12)


def test_build_plant_picks_the_linear_plant_for_the_linear_test(params):
    assert isinstance(build_plant(params, "linear-test"), LinearPlant)
    assert isinstance(build_plant(params, "time-varying"), NonlinearPlant)
