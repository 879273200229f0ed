from __future__ import annotations

import logging

from dataclasses import replace
from typing import Callable

import numpy as np

from .problem import DynamicProblem
from .sensing import ChangeSensor
from .adaptation import adapt
from .de import init_population, step_generation
from .streams import optimizer_stream, sensor_stream
from .exceptions import AMFError, EventNotInHistory
from .constants import DEFAULT_RECOVERY_BAND, DITHER_STEP, MAX_DITHER
from .history import RunHistory, config_fingerprint, record_iteration
from .models import (
    AdaptationOutcome,
    AdaptationStrategy,
    ChangeEvent,
    FeedbackState,
    FrameworkConfig,
    Population,
    Recovery,
)


logger = logging.getLogger(__name__)

PhaseListener = Callable[[int, str], None]


def apply_feedback(state: FeedbackState, outcome: AdaptationOutcome, recovery_iterations: int) -> FeedbackState:
    """
    Widens the burst's upper mutation bound by 0.1 (capped at 2.0) after a slow recovery,
    otherwise moves it halfway back toward its default.
    """
    if recovery_iterations > state.recovery_target:
        dither_hi = min(MAX_DITHER, state.dither_hi + DITHER_STEP)
    else:
        dither_hi = state.dither_hi - (state.dither_hi - state.dither_hi_default) / 2
    dither_hi = max(state.dither_hi_default, dither_hi)

    logger.debug(
        "Feedback after %s: recovery %d (target %d), dither_hi %.3f -> %.3f",
        outcome.strategy_used, recovery_iterations, state.recovery_target, state.dither_hi, dither_hi
    )
    return replace(state, dither_hi=dither_hi, last_recovery_iterations=recovery_iterations)


def recovery_time(history: RunHistory, event: ChangeEvent, band: float = DEFAULT_RECOVERY_BAND) -> Recovery:
    """
    Iterations from `event` until the current best fitness first drops below
    ``band * (best fitness on the row before the event)``. When that never happens before the
    next event (or the end of the run) the window length is returned, flagged as censored.

    :raises EventNotInHistory: if the event or its preceding row is missing
    """
    if not any(e.detected_at == event.detected_at for e in history.change_events):
        raise EventNotInHistory(f"No change event at t={event.detected_at}")
    index = history.row_index(event.detected_at)
    if index == 0:
        raise EventNotInHistory(f"No row precedes the event at t={event.detected_at}")

    threshold = band * history.rows[index - 1].current_best_fitness
    later = [e.detected_at for e in history.change_events if e.detected_at > event.detected_at]
    horizon = later[0] if later else history.rows[-1].t + 1

    for row in history.rows[index:]:
        if row.t >= horizon:
            break
        if row.current_best_fitness < threshold:
            return Recovery(iterations=row.t - event.detected_at, censored=False)
    return Recovery(iterations=horizon - event.detected_at, censored=True)


class AdaptiveFramework:
    """
    Main loop. Each iteration: advance the problem clock, sense, adapt on a detected change,
    run one DE generation, point the sensor at the new best, feed the recovery speed back into
    the burst's mutation range when enabled, then record a history row.

    :param problem: Dynamic problem, owned and advanced by the framework
    :param config: Run settings, including the seed of the optimizer and sensor streams
    :param listener: Optional callback receiving (t, phase) for 'sense', 'adapt', 'search',
        'feedback' and 'record'
    """
    __slots__ = (
        "problem",
        "config",
        "strategy",
        "feedback",
        "history",
        "population",
        "sensor",
        "listener",
        "_rng",
        "_episode",
        "_last_outcome",
    )

    def __init__(self, problem: DynamicProblem, config: FrameworkConfig, listener: PhaseListener | None = None):
        self.problem = problem
        self.config = config
        self.strategy: AdaptationStrategy = config.strategy
        self.listener = listener

        _, default_hi = config.strategy.local_search_config.mutation_bounds
        self.feedback = FeedbackState(
            dither_hi=default_hi,
            dither_hi_default=default_hi,
            recovery_target=config.recovery_target,
        )
        self.history = RunHistory(
            dimension=problem.dimension,
            bounds=problem.bounds,
            config_fingerprint=config_fingerprint(config, problem.bounds, problem.schedule),
            snapshot_stride=config.snapshot_stride,
        )
        self.population: Population | None = None
        self.sensor: ChangeSensor | None = None

        self._rng = optimizer_stream(config.seed)
        self._episode: tuple[ChangeEvent, float] | None = None
        self._last_outcome: AdaptationOutcome | None = None

    def _notify(self, t: int, phase: str):
        if self.listener is not None:
            self.listener(t, phase)

    def _initialize(self):
        self.population = init_population(self.problem, self.config.de, self._rng)
        self.sensor = ChangeSensor.with_random_sentinels(
            self.problem.bounds,
            self.config.sentinel_count,
            sensor_stream(self.config.seed),
            self.config.sensor_tolerance,
        )
        self.sensor.refresh_references(self.population.best, self.problem.clock, self.problem)

    def _close_episode(self, recovery_iterations: int):
        self._episode = None
        if not self.config.feedback_enabled or self._last_outcome is None:
            return
        self._notify(self.problem.clock, "feedback")
        self.feedback = apply_feedback(self.feedback, self._last_outcome, recovery_iterations)
        self.strategy = self.config.strategy.with_dither_upper(self.feedback.dither_hi)

    def _on_change(self, event: ChangeEvent):
        if self._episode is not None:
            self._close_episode(event.detected_at - self._episode[0].detected_at)

        pre_change_best = (
            self.history.rows[-1].current_best_fitness if self.history.rows else self.population.best_fitness
        )
        self.history.add_change(event)
        logger.info("Change detected at t=%d (scheduled at %s)", event.detected_at, event.scheduled_at)

        self.population, self._last_outcome = adapt(self.population, event, self.strategy, self.problem, self._rng)
        self._episode = (event, pre_change_best)

    def _track_recovery(self, t: int):
        if self._episode is None:
            return
        event, pre_change_best = self._episode
        if self.population.best_fitness < self.config.recovery_band * pre_change_best:
            self._close_episode(t - event.detected_at)

    def _iterate(self):
        self.problem.advance_clock()
        t = self.problem.clock

        self._notify(t, "sense")
        event = self.sensor.sense(self.problem, t)
        if event is not None:
            self._notify(t, "adapt")
            self._on_change(event)

        self._notify(t, "search")
        self.population = step_generation(self.population, self.problem, self.config.de, self._rng)
        self.sensor.refresh_references(self.population.best, t, self.problem)

        self._track_recovery(t)

        self._notify(t, "record")
        record_iteration(self.history, self.population, self.problem, t, changed=event is not None)

    def run(self) -> RunHistory:
        """
        Executes `total_iterations` iterations and returns the complete history. A module error
        stops the run; the partial history is returned with ``valid = False``.
        """
        logger.info(
            "Run started: D=%d, %d iterations, strategy=%s, seed=%d",
            self.problem.dimension, self.config.total_iterations, self.config.strategy.kind, self.config.seed
        )
        try:
            self._initialize()
            for _ in range(self.config.total_iterations):
                self._iterate()
        except (AMFError, ArithmeticError, ValueError) as ex:
            logger.error("Run aborted at t=%d: %s", self.problem.clock, ex)
            self.history.valid = False
            self.history.error = f"{type(ex).__name__}: {ex}"

        if self.population is not None:
            self.history.finish(
                self.population,
                self.problem,
                sensing_evaluations=self.sensor.evaluations if self.sensor else 0,
            )
        logger.info(
            "Run finished: %d rows, %d changes detected, final best %.6g",
            len(self.history.rows), len(self.history.change_events),
            self.history.final_best_fitness if self.history.final_best_fitness is not None else np.nan
        )
        return self.history


def run(problem: DynamicProblem, config: FrameworkConfig, listener: PhaseListener | None = None) -> RunHistory:
    return AdaptiveFramework(problem, config, listener).run()
