import numpy as np
import pandas as pd
import pytest

from amf.history import RunHistory, record_iteration
from amf.problem import make_moving_optimum_problem
from amf.models import ChangeSchedule, Population
from amf.metrics import (
    distance_to_optimum,
    fitness_distribution,
    fitness_kde,
    optimum_heatmap,
    smooth,
    solution_trajectory,
    visit_density,
    write_density,
    write_fitness_kde,
    write_smoothed_fitness,
)
from tests.conftest import static_sphere, synthetic_history


def _tracked_history(problem, iterations):
    """Rows of a fixed one-member population while the problem's clock moves on."""
    pop = Population(np.full((1, problem.dimension), 0.5), np.array([1.0]))
    history = RunHistory(dimension=problem.dimension, bounds=problem.bounds)
    for t in range(1, iterations + 1):
        problem.advance_clock()
        record_iteration(history, pop, problem, t, changed=False)
    return history


def test_density_counts_every_row():
    rng = np.random.default_rng(0)
    history = synthetic_history(np.ones(300), x1=rng.random(300), x2=rng.random(300))
    counts = visit_density(history, grid=8)
    assert counts.shape == (8, 8)
    assert counts.sum() == 300


def test_density_single_cell():
    counts = visit_density(synthetic_history(np.ones(40)), grid=20)
    assert counts[10, 10] == 40
    assert counts.sum() == 40


def test_density_of_uniform_points_is_flat():
    rng = np.random.default_rng(11)
    history = synthetic_history(np.ones(2000), x1=rng.random(2000), x2=rng.random(2000))
    counts = visit_density(history, grid=10)
    chi_square = np.sum((counts - 20.0) ** 2 / 20.0)
    assert 55 < chi_square < 150


def test_density_rejects_bad_input():
    with pytest.raises(ValueError):
        visit_density(synthetic_history(np.ones(5)), grid=1)
    with pytest.raises(ValueError):
        visit_density(synthetic_history(np.ones(5), dimension=1, optimum=np.full((5, 1), 0.5)))


def test_fitness_distribution_constant_series():
    edges, counts = fitness_distribution(synthetic_history(np.full(50, 3.0)), bins=30)
    assert counts.sum() == 50
    assert edges.size == 31
    assert counts.max() == 50


def test_fitness_distribution_finds_both_modes():
    rng = np.random.default_rng(5)
    fitness = np.concatenate([rng.normal(1.0, 0.1, 500), rng.normal(5.0, 0.1, 500)])
    edges, counts = fitness_distribution(synthetic_history(fitness), bins=40)
    centers = (edges[:-1] + edges[1:]) / 2
    low, high = centers < 3.0, centers >= 3.0
    assert centers[low][np.argmax(counts[low])] == pytest.approx(1.0, abs=0.3)
    assert centers[high][np.argmax(counts[high])] == pytest.approx(5.0, abs=0.3)
    assert counts.sum() == 1000


def test_heatmap_of_static_problem_has_identical_rows():
    matrix = optimum_heatmap(_tracked_history(static_sphere([0.2, 0.4, 0.6]), 30))
    assert matrix.shape == (30, 3)
    assert np.all(matrix == matrix[0])


def test_heatmap_rows_change_only_at_scheduled_changes():
    problem = make_moving_optimum_problem(3, schedule=ChangeSchedule(10, 0.3), seed=2)
    history = _tracked_history(problem, 50)
    matrix = optimum_heatmap(history)

    assert np.all((matrix >= 0.0) & (matrix <= 1.0))
    t = history.series("t")
    moved = np.any(matrix[1:] != matrix[:-1], axis=1)
    np.testing.assert_array_equal(moved, t[1:] % 10 == 0)


def test_heatmap_stride():
    history = _tracked_history(static_sphere([0.5, 0.5]), 25)
    assert optimum_heatmap(history, stride=5).shape == (5, 2)
    with pytest.raises(ValueError):
        optimum_heatmap(history, stride=0)


def test_smooth_spreads_a_spike():
    np.testing.assert_allclose(smooth([0, 0, 3, 0, 0], window=3), [0, 1, 1, 1, 0])


def test_smooth_edge_cases():
    series = np.array([4.0, 1.0, 7.0])
    np.testing.assert_array_equal(smooth(series, window=1), series)
    np.testing.assert_allclose(smooth(np.full(10, 2.5), window=5), np.full(10, 2.5))
    with pytest.raises(ValueError):
        smooth(series, window=4)
    with pytest.raises(ValueError):
        smooth(series, window=0)


def test_solution_trajectory():
    history = synthetic_history(np.ones(3), x1=[0.1, 0.2, 0.3], x2=[0.9, 0.8, 0.7], start=5)
    frame = solution_trajectory(history)
    assert list(frame.columns) == ["t", "x1", "x2"]
    assert frame["t"].tolist() == [5, 6, 7]
    assert frame["x2"].tolist() == [0.9, 0.8, 0.7]


def test_fitness_kde_integrates_to_one():
    rng = np.random.default_rng(3)
    grid, density = fitness_kde(synthetic_history(rng.normal(2.0, 0.5, 400)), points=500)
    assert np.trapezoid(density, grid) == pytest.approx(1.0, abs=0.01)
    assert grid[np.argmax(density)] == pytest.approx(2.0, abs=0.2)


def test_fitness_kde_uses_scott_bandwidth():
    values = np.array([0.0, 1.0, 3.0, 4.0])
    bandwidth = np.std(values, ddof=1) * values.size ** -0.2
    expected = np.mean(np.exp(-0.5 * ((2.0 - values) / bandwidth) ** 2)) / (bandwidth * np.sqrt(2 * np.pi))

    grid, density = fitness_kde(synthetic_history(values), points=[2.0])
    assert grid.tolist() == [2.0]
    assert density[0] == pytest.approx(expected, rel=1e-9)


def test_fitness_kde_grid_covers_the_data():
    values = np.array([0.0, 1.0, 3.0, 4.0])
    bandwidth = np.std(values, ddof=1) * values.size ** -0.2
    grid, density = fitness_kde(synthetic_history(values), points=11)
    assert grid.size == density.size == 11
    assert grid[0] == pytest.approx(-3 * bandwidth)
    assert grid[-1] == pytest.approx(4.0 + 3 * bandwidth)
    assert np.all(density > 0)


def test_fitness_kde_needs_spread():
    with pytest.raises(ValueError):
        fitness_kde(synthetic_history(np.full(20, 1.0)))


def test_distance_to_optimum():
    history = synthetic_history(np.ones(4), optimum=np.tile([0.5, 0.5], (4, 1)))
    history.final_best = np.array([0.8, 0.9])
    assert distance_to_optimum(history) == pytest.approx(0.5)


def test_distance_needs_final_solution():
    with pytest.raises(ValueError):
        distance_to_optimum(synthetic_history(np.ones(4)))


def test_written_files(tmp_path):
    rng = np.random.default_rng(1)
    history = synthetic_history(rng.random(60), x1=rng.random(60), x2=rng.random(60))

    write_density(history, tmp_path / "density.csv", grid=6)
    density = pd.read_csv(tmp_path / "density.csv", header=None)
    assert density.shape == (6, 6)
    assert density.to_numpy().sum() == 60

    write_smoothed_fitness(history, tmp_path / "smoothed.csv", window=5)
    smoothed = pd.read_csv(tmp_path / "smoothed.csv", float_precision="round_trip")
    assert len(smoothed) == 60
    np.testing.assert_array_equal(smoothed["current_best_fitness"], history.series("current_best_fitness"))

    write_fitness_kde(history, tmp_path / "kde.csv", points=50)
    kde = pd.read_csv(tmp_path / "kde.csv", float_precision="round_trip")
    assert list(kde.columns) == ["fitness", "density"]
    assert len(kde) == 50
    grid, density = fitness_kde(history, points=50)
    np.testing.assert_array_equal(kde["density"], density)
