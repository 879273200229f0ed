"""
Differential Evolution engine: rand/1/bin and best/1/bin.

Operators work row-wise, so one call handles a single vector or the whole population.
A generation draws all of its random numbers in a fixed order (donor keys, mutation
factors, forced crossover indices, crossover coins) before anything is evaluated,
which keeps trajectories identical however the trial evaluation is carried out.
"""
from __future__ import annotations

import logging

import numpy as np
import numpy.typing as npt

from .problem import DynamicProblem, clamp_to_bounds
from .constants import MIN_POPULATION_SIZE
from .exceptions import ConfigurationError, DimensionMismatch, NonFiniteFitness
from .models import (
    BoxBounds,
    DEConfig,
    DEVariant,
    Population,
    SolutionVector,
)


logger = logging.getLogger(__name__)

DONORS_PER_TARGET = 3


def init_population(
        problem: DynamicProblem,
        config: DEConfig,
        rng: np.random.Generator | int
) -> Population:
    """Draws N members uniformly within bounds and caches their fitness at the current clock."""
    rng = np.random.default_rng(rng)
    bounds = problem.bounds
    size = (config.population_for(problem.dimension), problem.dimension)
    members = rng.uniform(bounds.lower, bounds.upper, size=size)
    fitness = problem.evaluate_many(members, problem.clock)
    return Population(members=members, fitness=fitness, generation=0, evaluated_at=problem.clock)


def refresh_fitness(pop: Population, problem: DynamicProblem) -> Population:
    """Re-evaluates every member at the current clock."""
    fitness = problem.evaluate_many(pop.members, problem.clock)
    return Population(pop.members, fitness, pop.generation, problem.clock)


def pick_donors(
        rng: np.random.Generator,
        population_size: int,
        target_index: int | npt.ArrayLike
) -> npt.NDArray[np.intp]:
    """
    Returns indices (r1, r2, r3) per target: mutually distinct and never the target itself.

    Shape is (3,) for a single target and (M, 3) for M targets.
    """
    if population_size < MIN_POPULATION_SIZE:
        raise ConfigurationError(f"Mutation needs at least {MIN_POPULATION_SIZE} members, got {population_size}")
    targets = np.atleast_1d(np.asarray(target_index, dtype=np.intp))

    # a random permutation of the N-1 non-target slots, shifted past the target
    keys = rng.random((targets.size, population_size - 1))
    picks = np.argsort(keys, axis=1, kind="stable")[:, :DONORS_PER_TARGET]
    picks += picks >= targets[:, np.newaxis]

    return picks[0] if np.ndim(target_index) == 0 else picks


def difference_mutation(
        base: npt.ArrayLike,
        plus: npt.ArrayLike,
        minus: npt.ArrayLike,
        factor: float | npt.ArrayLike
) -> npt.NDArray[np.float64]:
    """v = base + F * (plus - minus), row-wise when F is a vector."""
    base = np.asarray(base, dtype=np.float64)
    factor = np.asarray(factor, dtype=np.float64)
    if factor.ndim == 1 and base.ndim == 2:
        factor = factor[:, np.newaxis]
    return base + factor * (np.asarray(plus, dtype=np.float64) - np.asarray(minus, dtype=np.float64))


def mutate(
        pop: Population,
        target_index: int | npt.ArrayLike,
        config: DEConfig,
        rng: np.random.Generator,
        bounds: BoxBounds
) -> SolutionVector:
    """
    Builds donor vector(s) for the given target index or indices.

    rand1bin uses x_r1 as base, best1bin the population best. A dithered F is drawn once per donor.
    The donor is clamped to bounds.

    :raises ConfigurationError: if the population has fewer than 4 members
    """
    donors = np.atleast_2d(pick_donors(rng, pop.size, target_index))
    factors = config.draw_mutation_factor(rng, size=donors.shape[0])

    if config.variant is DEVariant.BEST1BIN:
        base = np.broadcast_to(pop.best, (donors.shape[0], pop.dimension))
    else:
        base = pop.members[donors[:, 0]]

    mutant = difference_mutation(base, pop.members[donors[:, 1]], pop.members[donors[:, 2]], factors)
    mutant = clamp_to_bounds(mutant, bounds)
    return mutant[0] if np.ndim(target_index) == 0 else mutant


def crossover(
        target: npt.ArrayLike,
        donor: npt.ArrayLike,
        crossover_rate: float,
        rng: np.random.Generator
) -> SolutionVector:
    """
    Binomial crossover: component j comes from the donor if rand(j) <= CR or j is the
    forced index j_rand (one per trial), otherwise from the target.
    """
    target = np.asarray(target, dtype=np.float64)
    donor = np.asarray(donor, dtype=np.float64)
    if target.shape != donor.shape:
        raise DimensionMismatch(f"Target {target.shape} and donor {donor.shape} differ in shape")

    targets = np.atleast_2d(target)
    donors = np.atleast_2d(donor)
    count, dimension = targets.shape

    forced = rng.integers(dimension, size=count)
    take_donor = rng.random((count, dimension)) <= crossover_rate
    take_donor[np.arange(count), forced] = True

    trial = np.where(take_donor, donors, targets)
    return trial[0] if target.ndim == 1 else trial


def select(
        target: npt.ArrayLike,
        target_fitness: float | npt.ArrayLike,
        trial: npt.ArrayLike,
        trial_fitness: float | npt.ArrayLike
):
    """
    Greedy minimizing selection, ties won by the trial.

    :returns: (winner, winner_fitness, replaced); arrays when given a whole population
    :raises NonFiniteFitness: if any fitness value is NaN or infinite
    """
    target_fitness = np.asarray(target_fitness, dtype=np.float64)
    trial_fitness = np.asarray(trial_fitness, dtype=np.float64)
    if not (np.all(np.isfinite(target_fitness)) and np.all(np.isfinite(trial_fitness))):
        raise NonFiniteFitness("Selection received a non-finite fitness value.")

    replaced = trial_fitness <= target_fitness
    target = np.asarray(target, dtype=np.float64)
    trial = np.asarray(trial, dtype=np.float64)

    if replaced.ndim == 0:
        if replaced:
            return trial.copy(), float(trial_fitness), True
        return target.copy(), float(target_fitness), False

    winners = np.where(replaced[:, np.newaxis], trial, target)
    winner_fitness = np.where(replaced, trial_fitness, target_fitness)
    return winners, winner_fitness, replaced


def step_generation(
        pop: Population,
        problem: DynamicProblem,
        config: DEConfig,
        rng: np.random.Generator
) -> Population:
    """
    One synchronous generation: every donor and trial is built from the population as it
    was at the start of the step, trials are evaluated in one batch, then selection replaces
    members in a single join.
    """
    targets = np.arange(pop.size)
    donors = mutate(pop, targets, config, rng, problem.bounds)
    trials = crossover(pop.members, donors, config.crossover_rate, rng)
    trial_fitness = problem.evaluate_many(trials, problem.clock)

    members, fitness, replaced = select(pop.members, pop.fitness, trials, trial_fitness)
    logger.debug(
        "Generation %d: %d/%d replaced, best=%.6g",
        pop.generation + 1, int(np.count_nonzero(replaced)), pop.size, float(np.min(fitness))
    )
    return Population(members, fitness, pop.generation + 1, problem.clock)


def differential_evolution(
        problem: DynamicProblem,
        config: DEConfig,
        rng: np.random.Generator | int,
        generations: int | None = None
) -> Population:
    """Plain DE on the current landscape for `generations` (default: config.max_generations)."""
    rng = np.random.default_rng(rng)
    pop = init_population(problem, config, rng)
    for _ in range(config.max_generations if generations is None else generations):
        pop = step_generation(pop, problem, config, rng)
    return pop
