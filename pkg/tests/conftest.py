from __future__ import annotations
from typing import Callable

import numpy as np
import pytest

from domain.config import ExperimentConfig, RunSection, SimSection
from domain.history_stack import HistoryStack, StackEntry
from domain.hydrodynamics import plant_derivative
from domain.vehicle import VehicleParams
from helpers import random_current, random_state

StackFactory = Callable[..., HistoryStack]


@pytest.fixture
def params() -> VehicleParams:
    return VehicleParams()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def stack_factory(params: VehicleParams) -> StackFactory:
    """Stacks whose derivatives come from the exact model, optionally offset by |e_j| = d_bar."""

    def build(seed: int = 7, n: int = 40, d_bar: float = 0.0, capacity: int = 40) -> HistoryStack:
        gen = np.random.default_rng(seed)
        entries = []
        for j in range(n):
            zeta = random_state(gen)
            current = random_current(gen)
            tau = gen.uniform(-20.0, 20.0, 3)
            zeta_dot = plant_derivative(params, zeta, tau, current)
            if d_bar > 0.0:
                direction = gen.normal(size=6)
                zeta_dot = zeta_dot + d_bar * direction / np.linalg.norm(direction)
            entries.append(StackEntry.build(params, 0.02 * j, zeta, current.nu_c, current.nu_c_dot,
                                            tau, zeta_dot, d_bar))
        return HistoryStack(capacity, tuple(entries))

    return build


@pytest.fixture
def linear_config() -> ExperimentConfig:
    return ExperimentConfig(sim=SimSection(duration=10.0), run=RunSection(mode="linear-test"))
