from __future__ import annotations

from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd

from scipy.stats import gaussian_kde

from .history import RunHistory
from .constants import DEFAULT_DENSITY_GRID, DEFAULT_FITNESS_BINS, DEFAULT_SMOOTHING_WINDOW, FLOAT_FORMAT


KDE_POINTS = 200


def visit_density(history: RunHistory, grid: int = DEFAULT_DENSITY_GRID) -> npt.NDArray[np.int64]:
    """
    Returns a (grid, grid) count matrix of where the best solution sat in the plane of
    dimensions 1 and 2, binned over the bounds. Row i covers the i-th interval of dimension 1.

    :raises ValueError: if grid < 2 or the problem has fewer than two dimensions
    """
    if grid < 2:
        raise ValueError("Density grid needs at least 2 bins per axis")
    if history.dimension < 2:
        raise ValueError("Visit density needs at least two dimensions")

    bounds = history.bounds
    counts, _, _ = np.histogram2d(
        history.series("best_x1"),
        history.series("best_x2"),
        bins=grid,
        range=[[bounds.lower[0], bounds.upper[0]], [bounds.lower[1], bounds.upper[1]]],
    )
    return counts.astype(np.int64)


def fitness_distribution(
        history: RunHistory,
        bins: int = DEFAULT_FITNESS_BINS
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.int64]]:
    """Histogram of the current best fitness over all rows, as (bin edges, counts)."""
    if bins < 1:
        raise ValueError("Number of bins must be positive")
    counts, edges = np.histogram(history.series("current_best_fitness"), bins=bins)
    return edges, counts


def optimum_heatmap(history: RunHistory, stride: int = 1) -> npt.NDArray[np.float64]:
    """Optimum components at every stride-th row, shape (rows / stride, D)."""
    if stride < 1:
        raise ValueError("Stride must be positive")
    if not history.rows:
        return np.empty((0, history.dimension))
    return history.optimum_matrix()[::stride]


def smooth(series: npt.ArrayLike, window: int = DEFAULT_SMOOTHING_WINDOW) -> npt.NDArray[np.float64]:
    """
    Centered moving average. Near both ends the window shrinks to the available values,
    so the output has the input's length.

    :raises ValueError: if window is even or smaller than 1
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("Smoothing window must be a positive odd integer")

    values = np.array(series, dtype=np.float64)
    if window == 1:
        return values
    return pd.Series(values).rolling(window, center=True, min_periods=1).mean().to_numpy()


def solution_trajectory(history: RunHistory) -> pd.DataFrame:
    """Path of the best solution in the plane of dimensions 1 and 2."""
    return pd.DataFrame({
        "t": history.series("t").astype(np.int64),
        "x1": history.series("best_x1"),
        "x2": history.series("best_x2"),
    })


def fitness_kde(
        history: RunHistory,
        points: int | npt.ArrayLike = KDE_POINTS
) -> tuple[npt.NDArray[np.float64], npt.NDArray[np.float64]]:
    """
    Gaussian kernel density estimate of the current best fitness, bandwidth by Scott's rule.
    With an integer `points` the grid spans the data plus three bandwidths on each side.

    :returns: (grid, density)

    :raises ValueError: if the series has no spread
    """
    values = history.series("current_best_fitness")
    if values.size < 2 or not np.std(values) > 0.0:
        raise ValueError("Density estimate needs a fitness series with nonzero spread")

    try:
        kde = gaussian_kde(values, bw_method="scott")
    except np.linalg.LinAlgError as ex:
        raise ValueError(f"Density estimate failed: {ex}") from ex

    if np.isscalar(points):
        bandwidth = float(np.sqrt(kde.covariance[0, 0]))
        grid = np.linspace(values.min() - 3 * bandwidth, values.max() + 3 * bandwidth, int(points))
    else:
        grid = np.asarray(points, dtype=np.float64)
    return grid, kde(grid)


def distance_to_optimum(history: RunHistory) -> float:
    """Euclidean distance between the final best solution and the true optimum of the last row."""
    if history.final_best is None or not history.rows:
        raise ValueError("History holds no final solution")
    return float(np.linalg.norm(history.final_best - history.rows[-1].optimum_snapshot))


def write_heatmap(history: RunHistory, path: Path | str, stride: int = 1) -> Path:
    matrix = optimum_heatmap(history, stride)
    frame = pd.DataFrame(matrix, columns=[f"optimum_{j + 1}" for j in range(history.dimension)])
    frame.insert(0, "t", history.series("t").astype(np.int64)[::stride])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def write_density(history: RunHistory, path: Path | str, grid: int = DEFAULT_DENSITY_GRID) -> Path:
    """Headerless count matrix, rows along dimension 2 and columns along dimension 1."""
    pd.DataFrame(visit_density(history, grid).T).to_csv(path, index=False, header=False)
    return Path(path)


def write_fitness_distribution(history: RunHistory, path: Path | str, bins: int = DEFAULT_FITNESS_BINS) -> Path:
    edges, counts = fitness_distribution(history, bins)
    pd.DataFrame({
        "bin_low": edges[:-1],
        "bin_high": edges[1:],
        "count": counts,
    }).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def write_smoothed_fitness(history: RunHistory, path: Path | str, window: int = DEFAULT_SMOOTHING_WINDOW) -> Path:
    pd.DataFrame({
        "t": history.series("t").astype(np.int64),
        "current_best_fitness": history.series("current_best_fitness"),
        "smoothed_fitness": smooth(history.series("current_best_fitness"), window),
        "population_mean_fitness": history.series("population_mean_fitness"),
        "smoothed_mean_fitness": smooth(history.series("population_mean_fitness"), window),
    }).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)


def write_fitness_kde(history: RunHistory, path: Path | str, points: int = KDE_POINTS) -> Path:
    grid, density = fitness_kde(history, points)
    pd.DataFrame({"fitness": grid, "density": density}).to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return Path(path)
