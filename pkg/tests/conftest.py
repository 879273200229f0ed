from pathlib import Path

import numpy as np
import pytest

from amf.history import RunHistory
from amf.problem import DynamicProblem
from amf.models import BoxBounds, ChangeEvent, ChangeSchedule, IterationRecord

EXPERIMENTS_DIR = Path(__file__).resolve().parent.parent / "experiments"

STATIC = ChangeSchedule(change_frequency=10**9)


def static_sphere(optimum, bounds: BoxBounds | None = None) -> DynamicProblem:
    """Problem whose optimum never moves during a test."""
    optimum = np.asarray(optimum, dtype=np.float64)
    bounds = BoxBounds.uniform(optimum.shape[0]) if bounds is None else bounds
    return DynamicProblem(bounds, STATIC, optimum, np.random.default_rng(0))


def synthetic_history(
        fitness,
        x1=None,
        x2=None,
        optimum=None,
        events=(),
        start: int = 1,
        dimension: int = 2
) -> RunHistory:
    """History built directly from arrays, one row per fitness value."""
    fitness = np.asarray(fitness, dtype=np.float64)
    n = fitness.shape[0]
    x1 = np.full(n, 0.5) if x1 is None else np.asarray(x1, dtype=np.float64)
    x2 = np.full(n, 0.5) if x2 is None else np.asarray(x2, dtype=np.float64)
    optimum = np.full((n, dimension), 0.5) if optimum is None else np.asarray(optimum, dtype=np.float64)
    flagged = set(events)

    history = RunHistory(dimension=dimension, bounds=BoxBounds.uniform(dimension))
    cumulative = np.minimum.accumulate(fitness)
    for i in range(n):
        t = start + i
        history.rows.append(IterationRecord(
            t=t,
            current_best_fitness=float(fitness[i]),
            best_so_far_fitness=float(fitness[i]),
            cumulative_best_fitness=float(cumulative[i]),
            population_mean_fitness=float(fitness[i]),
            best_x1=float(x1[i]),
            best_x2=float(x2[i]),
            change_flag=t in flagged,
            optimum_snapshot=optimum[i],
        ))
    for t in sorted(flagged):
        history.add_change(ChangeEvent(detected_at=t, drift_magnitude=1.0, scheduled_at=t))
    return history


@pytest.fixture
def sphere_2d() -> DynamicProblem:
    return static_sphere([0.5, 0.5])


@pytest.fixture
def sphere_10d() -> DynamicProblem:
    return static_sphere(np.linspace(0.1, 0.9, 10))
