from __future__ import annotations

from typing import Callable

import numpy as np
import numpy.typing as npt

from .problem import clamp_to_bounds
from .constants import SIMPLEX_INITIAL_STEP
from .models import BoxBounds, SolutionVector


def initial_simplex(x_start: SolutionVector, bounds: BoxBounds, step: float = SIMPLEX_INITIAL_STEP) -> npt.NDArray[np.float64]:
    """x_start plus one vertex per axis, offset by step * range (downwards when the upper bound is in the way)."""
    dimension = bounds.dimension
    vertices = np.tile(np.asarray(x_start, dtype=np.float64), (dimension + 1, 1))
    offsets = step * bounds.span
    for i in range(dimension):
        if vertices[0, i] + offsets[i] <= bounds.upper[i]:
            vertices[i + 1, i] += offsets[i]
        else:
            vertices[i + 1, i] -= offsets[i]
    return vertices


def nelder_mead(
        func: Callable[[SolutionVector], float],
        x_start: SolutionVector,
        bounds: BoxBounds,
        iterations: int,
        max_evaluations: int | None = None,
        alpha: float = 1.0,
        gamma: float = 2.0,
        beta: float = 0.5,
        delta: float = 0.5
) -> tuple[SolutionVector, float]:
    """
    Derivative-free simplex descent within a box; every trial point is clamped to bounds.

    :param func: Objective to minimize
    :param x_start: Initial guess
    :param bounds: Box all vertices are projected onto
    :param iterations: Maximum number of simplex iterations
    :param max_evaluations: Stop once this many objective calls were made
    :param alpha: Reflection coefficient
    :param gamma: Expansion coefficient
    :param beta: Contraction coefficient
    :param delta: Shrink coefficient

    :returns: best vertex and its value
    """
    evaluations = 0

    def call(x: SolutionVector) -> float:
        nonlocal evaluations
        evaluations += 1
        return float(func(x))

    def exhausted() -> bool:
        return max_evaluations is not None and evaluations >= max_evaluations

    vertices = initial_simplex(x_start, bounds)
    values = []
    for v in vertices:
        if exhausted():
            break
        values.append(call(v))
    vertices = vertices[:len(values)]
    values = np.array(values)
    if len(values) == 0:
        return np.asarray(x_start, dtype=np.float64).copy(), float("inf")

    for _ in range(iterations):
        if exhausted() or len(values) < bounds.dimension + 1:
            break

        order = np.argsort(values, kind="stable")
        vertices, values = vertices[order], values[order]
        if np.ptp(vertices, axis=0).max() == 0.0:
            break

        centroid = vertices[:-1].mean(axis=0)
        worst = vertices[-1]

        # Reflection
        reflected = clamp_to_bounds(centroid + alpha * (centroid - worst), bounds)
        f_reflected = call(reflected)
        if values[0] <= f_reflected < values[-2]:
            vertices[-1], values[-1] = reflected, f_reflected
            continue

        # Expansion
        if f_reflected < values[0]:
            if exhausted():
                vertices[-1], values[-1] = reflected, f_reflected
                break
            expanded = clamp_to_bounds(centroid + gamma * (reflected - centroid), bounds)
            f_expanded = call(expanded)
            if f_expanded < f_reflected:
                vertices[-1], values[-1] = expanded, f_expanded
            else:
                vertices[-1], values[-1] = reflected, f_reflected
            continue

        if exhausted():
            break

        # Contraction, outside when the reflection beat the worst vertex, inside otherwise
        if f_reflected < values[-1]:
            contracted = clamp_to_bounds(centroid + beta * (reflected - centroid), bounds)
            f_contracted = call(contracted)
            if f_contracted <= f_reflected:
                vertices[-1], values[-1] = contracted, f_contracted
                continue
        else:
            contracted = clamp_to_bounds(centroid + beta * (worst - centroid), bounds)
            f_contracted = call(contracted)
            if f_contracted < values[-1]:
                vertices[-1], values[-1] = contracted, f_contracted
                continue

        # Shrink towards the best vertex
        for i in range(1, len(vertices)):
            if exhausted():
                break
            vertices[i] = vertices[0] + delta * (vertices[i] - vertices[0])
            values[i] = call(vertices[i])

    best = int(np.argmin(values))
    return vertices[best].copy(), float(values[best])
