from __future__ import annotations

import logging
import threading

from functools import partial
from typing import Callable, Iterable

import numpy as np
import numpy.typing as npt
from sortedcontainers import SortedDict

from .streams import environment_stream
from .exceptions import DimensionMismatch
from .models import (
    BoxBounds,
    ChangeSchedule,
    Constraint,
    ScheduledChange,
    SolutionVector,
)


logger = logging.getLogger(__name__)


def clamp_to_bounds(x: npt.ArrayLike, bounds: BoxBounds) -> SolutionVector:
    """Projects every component (of one vector or of each row of a matrix) onto its interval."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != bounds.dimension:
        raise DimensionMismatch(f"Expected {bounds.dimension} components, got shape {x.shape}")
    return np.clip(x, bounds.lower, bounds.upper)


class DynamicProblem:
    """
    Time-varying minimization problem f(x, t) = sum_i (x_i - x*_i(t))^2 plus constraint penalties.

    The hidden optimum x* moves only inside `advance_clock`, at multiples of the schedule's
    change frequency. Every optimum the problem ever had is kept in a SortedDict keyed by the
    iteration it became active, so the landscape of any past iteration can still be evaluated.

    :param bounds: Box of the decision space
    :param schedule: Change frequency, severity and optional cap on the number of changes
    :param initial_optimum: x*(0), must lie within bounds
    :param rng: Environment stream, consumed only by optimum shifts
    :param constraints: Optional g/h constraints turned into quadratic penalties

    .. note::
        One writer, many readers: never advance the clock while evaluations for the same t are in flight.
    """
    __slots__ = (
        "bounds",
        "schedule",
        "constraints",
        "clock",
        "_rng",
        "_trajectory",
        "_changes",
        "_evaluations",
        "_lock",
    )

    def __init__(
            self,
            bounds: BoxBounds,
            schedule: ChangeSchedule,
            initial_optimum: npt.ArrayLike,
            rng: np.random.Generator,
            constraints: Iterable[Constraint] = ()
    ):
        optimum = np.array(initial_optimum, dtype=np.float64)
        if optimum.shape != (bounds.dimension,):
            raise DimensionMismatch(f"Optimum has shape {optimum.shape}, expected ({bounds.dimension},)")
        if np.any(optimum < bounds.lower) or np.any(optimum > bounds.upper):
            raise ValueError("Initial optimum must lie within bounds.")
        optimum.flags.writeable = False

        self.bounds = bounds
        self.schedule = schedule
        self.constraints: tuple[Constraint, ...] = tuple(constraints)
        self.clock = 0

        self._rng = rng
        self._trajectory: SortedDict[int, SolutionVector] = SortedDict({0: optimum})
        self._changes: list[ScheduledChange] = []
        self._evaluations = 0
        self._lock = threading.Lock()

    @property
    def dimension(self) -> int:
        return self.bounds.dimension

    @property
    def hidden_optimum(self) -> SolutionVector:
        """x*(clock). Ground truth for metrics, never handed to optimizers."""
        return self._trajectory.peekitem(-1)[1]

    @property
    def evaluations(self) -> int:
        return self._evaluations

    @property
    def changes(self) -> list[ScheduledChange]:
        return list(self._changes)

    @property
    def last_change_at(self) -> int | None:
        return self._changes[-1].time if self._changes else None

    def optimum_at(self, t: int) -> SolutionVector:
        """Returns the optimum active at iteration t (t must not lie in the future)."""
        if t < 0 or t > self.clock:
            raise ValueError(f"Iteration {t} outside of [0, {self.clock}]")
        index = self._trajectory.bisect_right(t) - 1
        return self._trajectory.peekitem(index)[1]

    def evaluate_many(self, xs: npt.ArrayLike, t: int | None = None) -> npt.NDArray[np.float64]:
        """
        Evaluates every row of an (M, D) matrix at iteration t (current clock by default).

        :raises DimensionMismatch: if rows do not have D components
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.dimension:
            raise DimensionMismatch(f"Expected rows of {self.dimension} components, got shape {xs.shape}")
        t = self.clock if t is None else t
        diff = xs - self.optimum_at(t)
        values = np.sum(diff * diff, axis=1)

        if self.constraints:
            penalties = np.array([
                sum(c.penalty(x, t) for c in self.constraints)
                for x in xs
            ])
            values = values + penalties

        with self._lock:
            self._evaluations += xs.shape[0]
        return values

    def evaluate(self, x: npt.ArrayLike, t: int | None = None) -> float:
        """f(x, t) plus penalties. Same code path as `evaluate_many`, so values agree bit for bit."""
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.dimension:
            raise DimensionMismatch(f"Expected {self.dimension} components, got shape {x.shape}")
        return float(self.evaluate_many(x[np.newaxis, :], t)[0])

    def frozen(self, t: int = 0) -> Callable[[SolutionVector], float]:
        """Static objective x -> f(x, t), the landscape the static baselines optimize."""
        self.optimum_at(t)
        return partial(self.evaluate, t=t)

    def _change_allowed(self) -> bool:
        cap = self.schedule.total_changes_cap
        return cap is None or len(self._changes) < cap

    def _random_direction(self) -> SolutionVector:
        while True:
            direction = self._rng.standard_normal(self.dimension)
            norm = np.linalg.norm(direction)
            if norm > 0.0:
                return direction / norm

    def advance_clock(self) -> ScheduledChange | None:
        """
        Moves time forward by one iteration. At multiples of the change frequency the optimum
        travels ``severity * range_i * u_i`` along a random unit direction u and is clamped to bounds.

        :returns: the ScheduledChange when the optimum moved, otherwise None
        """
        self.clock += 1
        if self.clock % self.schedule.change_frequency != 0 or not self._change_allowed():
            return None

        previous = self.hidden_optimum
        step = self.schedule.change_severity * self.bounds.span * self._random_direction()
        moved = clamp_to_bounds(previous + step, self.bounds)
        moved.flags.writeable = False
        self._trajectory[self.clock] = moved

        change = ScheduledChange(time=self.clock, shift_magnitude=float(np.linalg.norm(moved - previous)))
        self._changes.append(change)
        logger.debug("Optimum shifted at t=%d by %.6g", change.time, change.shift_magnitude)
        return change


def make_moving_optimum_problem(
        dimension: int,
        bounds: BoxBounds | None = None,
        schedule: ChangeSchedule | None = None,
        seed: int = 0,
        constraints: Iterable[Constraint] = ()
) -> DynamicProblem:
    """
    Builds the shifted-sphere benchmark with x*(0) drawn uniformly within bounds.

    Two problems built from the same arguments follow the same optimum trajectory.

    :raises InvalidBounds: through BoxBounds, if any lower bound is not below its upper bound
    :raises DimensionMismatch: if bounds do not have `dimension` axes
    """
    if dimension < 1:
        raise ValueError("Dimension must be positive.")
    bounds = BoxBounds.uniform(dimension) if bounds is None else bounds
    if bounds.dimension != dimension:
        raise DimensionMismatch(f"Bounds have {bounds.dimension} axes, problem has {dimension}")
    schedule = ChangeSchedule() if schedule is None else schedule

    rng = environment_stream(seed)
    initial_optimum = rng.uniform(bounds.lower, bounds.upper)
    return DynamicProblem(bounds, schedule, initial_optimum, rng, constraints)
