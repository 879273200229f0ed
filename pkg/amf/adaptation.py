from __future__ import annotations

import math
import logging

import numpy as np

from .problem import DynamicProblem
from .de import refresh_fitness, step_generation
from .exceptions import ConfigurationError
from .models import (
    AdaptationOutcome,
    AdaptationStrategy,
    ChangeEvent,
    Population,
    StrategyKind,
)


logger = logging.getLogger(__name__)


def components_to_reset(fraction: float, dimension: int) -> int:
    """round-half-up(fraction * D), at least one component and at most D."""
    return min(dimension, max(1, math.floor(fraction * dimension + 0.5)))


def partial_reinit(
        pop: Population,
        fraction: float,
        problem: DynamicProblem,
        rng: np.random.Generator
) -> Population:
    """
    For every member redraws exactly `components_to_reset(fraction, D)` distinct
    components uniformly within bounds, then re-evaluates the population at the current clock.
    """
    if not 0.0 < fraction <= 1.0:
        raise ConfigurationError("Re-initialization fraction must lie in (0, 1]")

    bounds = problem.bounds
    count = components_to_reset(fraction, pop.dimension)
    members = pop.members.copy()
    for row in members:
        axes = rng.choice(pop.dimension, size=count, replace=False)
        row[axes] = rng.uniform(bounds.lower[axes], bounds.upper[axes])

    fitness = problem.evaluate_many(members, problem.clock)
    return Population(members, fitness, pop.generation, problem.clock)


def local_search_burst(
        pop: Population,
        problem: DynamicProblem,
        strategy: AdaptationStrategy,
        rng: np.random.Generator
) -> tuple[Population, AdaptationOutcome]:
    """
    Runs `local_search_budget` generations of best1bin DE with the strategy's widened
    mutation range. Greedy selection means the best fitness never gets worse during the burst.
    """
    start = problem.evaluations
    fitness_before = pop.best_fitness
    for _ in range(strategy.local_search_budget):
        pop = step_generation(pop, problem, strategy.local_search_config, rng)

    outcome = AdaptationOutcome(
        strategy_used=StrategyKind.LOCAL_SEARCH_HIGH_MUTATION,
        evaluations_spent=problem.evaluations - start,
        fitness_before=fitness_before,
        fitness_after=pop.best_fitness,
    )
    return pop, outcome


def adapt(
        pop: Population,
        event: ChangeEvent,
        strategy: AdaptationStrategy,
        problem: DynamicProblem,
        rng: np.random.Generator
) -> tuple[Population, AdaptationOutcome]:
    """
    Responds to a fresh change event. Cached fitness is refreshed first so no value from the old
    landscape survives, then the strategy is applied: partial re-initialization, a local search
    burst, or the hybrid of both in that order.

    :raises ConfigurationError: for an unknown strategy kind
    """
    if event.detected_at != problem.clock:
        logger.warning("Adapting to a change sensed at t=%d while the clock reads %d", event.detected_at, problem.clock)

    start = problem.evaluations
    pop = refresh_fitness(pop, problem)
    fitness_before = pop.best_fitness

    match strategy.kind:
        case StrategyKind.PARTIAL_REINIT:
            pop = partial_reinit(pop, strategy.reinit_fraction, problem, rng)
        case StrategyKind.LOCAL_SEARCH_HIGH_MUTATION:
            pop, _ = local_search_burst(pop, problem, strategy, rng)
        case StrategyKind.HYBRID:
            pop = partial_reinit(pop, strategy.reinit_fraction, problem, rng)
            pop, _ = local_search_burst(pop, problem, strategy, rng)
        case _:
            raise ConfigurationError(f"Unknown adaptation strategy: {strategy.kind!r}")

    outcome = AdaptationOutcome(
        strategy_used=strategy.kind,
        evaluations_spent=problem.evaluations - start,
        fitness_before=fitness_before,
        fitness_after=pop.best_fitness,
    )
    logger.debug(
        "%s at t=%d: %.6g -> %.6g (%d evaluations)",
        outcome.strategy_used, event.detected_at, outcome.fitness_before, outcome.fitness_after,
        outcome.evaluations_spent
    )
    return pop, outcome
