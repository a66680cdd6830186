from __future__ import annotations

import numpy as np

from domain.vehicle import Current


def random_state(rng: np.random.Generator, speed: float = 1.0) -> np.ndarray:
    return np.concatenate([rng.uniform(-3.0, 3.0, 2), rng.uniform(-np.pi, np.pi, 1),
                           rng.uniform(-speed, speed, 3)])


def random_current(rng: np.random.Generator, scale: float = 0.1) -> Current:
    return Current((*rng.uniform(-scale, scale, 2), 0.0), (*rng.uniform(-scale, scale, 2), 0.0))
