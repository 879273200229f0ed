"""
Seeded random streams of a single run.

Every run derives three independent generators from one integer seed, so the
environment trajectory never depends on how much randomness the optimizer consumed.
Two competitors built from the same seed therefore face the identical optimum path.
"""
import numpy as np

ENVIRONMENT_STREAM = 0
OPTIMIZER_STREAM = 1
SENSOR_STREAM = 2


def _stream(seed: int, key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


def environment_stream(seed: int) -> np.random.Generator:
    return _stream(seed, ENVIRONMENT_STREAM)


def optimizer_stream(seed: int) -> np.random.Generator:
    return _stream(seed, OPTIMIZER_STREAM)


def sensor_stream(seed: int) -> np.random.Generator:
    return _stream(seed, SENSOR_STREAM)
