"""
Static comparison optimizers: a Cauchy-step simulated annealer and a perturb-plus-simplex
basin hopper. Both see only the landscape of iteration 0, so once they converge their
best-so-far traces stay flat however the problem moves afterwards.
"""
from __future__ import annotations

import math
import logging

from typing import Callable

import numpy as np
import numpy.typing as npt

from .simplex import nelder_mead
from .problem import DynamicProblem, clamp_to_bounds
from .models import AnnealConfig, BasinConfig, BaselineResult, SolutionVector


logger = logging.getLogger(__name__)

FROZEN_AT = 0


class _TracedObjective:
    """Counts calls and keeps the best-so-far value after each of them."""
    __slots__ = ("func", "limit", "trace", "best", "best_x", "improvements")

    def __init__(self, func: Callable[[SolutionVector], float], limit: int | None = None):
        self.func = func
        self.limit = limit
        self.trace: list[float] = []
        self.best = math.inf
        self.best_x: SolutionVector | None = None
        self.improvements: list[tuple[int, SolutionVector]] = []

    def __call__(self, x: SolutionVector) -> float:
        value = self.func(x)
        if value < self.best:
            self.best = value
            self.best_x = np.array(x, dtype=np.float64)
            self.improvements.append((len(self.trace), self.best_x))
        self.trace.append(self.best)
        return value

    @property
    def remaining(self) -> int | None:
        return None if self.limit is None else max(0, self.limit - len(self.trace))

    @property
    def exhausted(self) -> bool:
        return self.limit is not None and len(self.trace) >= self.limit

    def result(self, horizon: int | None) -> BaselineResult:
        return BaselineResult(
            best=self.best_x,
            best_fitness=self.best,
            trace=pad_trace(self.trace, horizon),
            evaluations=len(self.trace),
            improvements=tuple(self.improvements),
        )


def pad_trace(trace: npt.ArrayLike, horizon: int | None) -> npt.NDArray[np.float64]:
    """Extends a best-so-far trace with its last value up to `horizon` entries."""
    trace = np.asarray(trace, dtype=np.float64)
    if horizon is None or trace.size == 0 or trace.size >= horizon:
        return trace
    return np.concatenate([trace, np.full(horizon - trace.size, trace[-1])])


def anneal(
        problem: DynamicProblem,
        config: AnnealConfig,
        seed: int,
        horizon: int | None = None
) -> BaselineResult:
    """
    Metropolis search on the landscape frozen at t=0. Proposals add Cauchy steps scaled by
    ``step_scale * range * T_k / T_0``, so they shrink as the temperature T_k falls.
    """
    rng = np.random.default_rng(seed)
    objective = _TracedObjective(problem.frozen(FROZEN_AT))
    bounds = problem.bounds

    x = rng.uniform(bounds.lower, bounds.upper)
    fx = objective(x)
    for k in range(config.steps):
        temperature = config.temperature(k)
        scale = config.step_scale * bounds.span * (temperature / config.initial_temperature)
        candidate = clamp_to_bounds(x + scale * rng.standard_cauchy(problem.dimension), bounds)
        f_candidate = objective(candidate)

        delta = f_candidate - fx
        if delta <= 0.0 or rng.random() < math.exp(-delta / temperature):
            x, fx = candidate, f_candidate

    logger.debug("Annealing finished: %d evaluations, best %.6g", len(objective.trace), objective.best)
    return objective.result(horizon)


def basin_hop(
        problem: DynamicProblem,
        config: BasinConfig,
        seed: int,
        horizon: int | None = None,
        max_evaluations: int | None = None
) -> BaselineResult:
    """
    Basin hopping on the landscape frozen at t=0: perturb the incumbent uniformly by up to
    ``perturbation_scale * range`` per axis, descend with the simplex, keep the result if it improved.
    Stops after `hops` hops or `max_evaluations` objective calls.
    """
    rng = np.random.default_rng(seed)
    objective = _TracedObjective(problem.frozen(FROZEN_AT), limit=max_evaluations)
    bounds = problem.bounds

    x = rng.uniform(bounds.lower, bounds.upper)
    fx = objective(x)
    for hop in range(config.hops):
        if objective.exhausted:
            break
        offset = config.perturbation_scale * bounds.span * rng.uniform(-1.0, 1.0, problem.dimension)
        start = clamp_to_bounds(x + offset, bounds)
        local, f_local = nelder_mead(
            objective,
            start,
            bounds,
            iterations=config.local_simplex_iterations,
            max_evaluations=objective.remaining,
        )
        if f_local < fx:
            x, fx = local, f_local
            logger.debug("Hop %d accepted: %.6g", hop, fx)

    return objective.result(horizon)
