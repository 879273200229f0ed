from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from .problem import DynamicProblem
from .exceptions import ConfigurationError, DimensionMismatch
from .constants import DEFAULT_SENSOR_TOLERANCE
from .models import BoxBounds, ChangeEvent, SolutionVector


logger = logging.getLogger(__name__)


class ChangeSensor:
    """
    Detects landscape changes by re-evaluating reference points and comparing against cached values.

    References are the current best solution (row 0, once set) followed by fixed sentinels.
    Sentinels keep detection working when the best happens to sit at equal distance from the
    old and the new optimum, where its own value does not move.

    :param sentinels: (k, D) fixed reference points
    :param tolerance: Absolute drift above which a change is reported
    """
    __slots__ = (
        "sentinels",
        "tolerance",
        "last_detection",
        "evaluations",
        "_best",
        "_cached",
    )

    def __init__(self, sentinels: npt.ArrayLike, tolerance: float = DEFAULT_SENSOR_TOLERANCE):
        if tolerance < 0:
            raise ConfigurationError("Sensor tolerance must be non-negative.")
        sentinels = np.array(sentinels, dtype=np.float64)
        if sentinels.ndim != 2:
            raise DimensionMismatch("Sentinels must be a (k, D) matrix.")

        self.sentinels = sentinels
        self.tolerance = tolerance
        self.last_detection: int | None = None
        self.evaluations = 0

        self._best: SolutionVector | None = None
        self._cached: npt.NDArray[np.float64] | None = None

    @classmethod
    def with_random_sentinels(
            cls,
            bounds: BoxBounds,
            count: int,
            rng: np.random.Generator,
            tolerance: float = DEFAULT_SENSOR_TOLERANCE
    ) -> "ChangeSensor":
        """Sentinels drawn uniformly within bounds once, at setup."""
        return cls(rng.uniform(bounds.lower, bounds.upper, size=(count, bounds.dimension)), tolerance)

    @property
    def reference_points(self) -> npt.NDArray[np.float64]:
        if self._best is None:
            return self.sentinels
        return np.vstack([self._best[np.newaxis, :], self.sentinels])

    @property
    def cached_fitness(self) -> npt.NDArray[np.float64] | None:
        return None if self._cached is None else self._cached.copy()

    @property
    def is_primed(self) -> bool:
        return self._cached is not None

    def _evaluate(self, points: npt.NDArray[np.float64], problem: DynamicProblem, t: int) -> npt.NDArray[np.float64]:
        if points.shape[0] == 0:
            return np.empty(0)
        self.evaluations += points.shape[0]
        return problem.evaluate_many(points, t)

    def sense(self, problem: DynamicProblem, t: int) -> ChangeEvent | None:
        """
        Re-evaluates every reference at t. On drift above tolerance returns a ChangeEvent and
        refreshes all caches; otherwise leaves the caches as they were. The first call only primes.
        """
        points = self.reference_points
        if self._cached is None or self._cached.shape[0] != points.shape[0]:
            self._cached = self._evaluate(points, problem, t)
            return None

        current = self._evaluate(points, problem, t)
        if current.size == 0:
            return None
        drift = float(np.max(np.abs(current - self._cached)))
        if not drift > self.tolerance:
            return None

        self._cached = current
        self.last_detection = t
        scheduled = problem.last_change_at
        event = ChangeEvent(
            detected_at=t,
            drift_magnitude=drift,
            scheduled_at=scheduled if scheduled is not None and scheduled <= t else None,
        )
        logger.debug("Change sensed at t=%d (drift %.6g)", t, drift)
        return event

    def refresh_references(self, best: npt.ArrayLike, t: int, problem: DynamicProblem) -> "ChangeSensor":
        """Points the best-solution reference at `best` and caches its value at t; sentinels keep theirs."""
        best = np.array(best, dtype=np.float64)
        if best.shape != (self.sentinels.shape[1],):
            raise DimensionMismatch(f"Best solution has shape {best.shape}")
        best_value = self._evaluate(best[np.newaxis, :], problem, t)

        if self._cached is None:
            sentinel_values = self._evaluate(self.sentinels, problem, t)
        elif self._best is None:
            sentinel_values = self._cached
        else:
            sentinel_values = self._cached[1:]

        self._best = best
        self._cached = np.concatenate([best_value, sentinel_values])
        return self
