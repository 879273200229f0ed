import numpy as np
import pytest

from amf.streams import environment_stream
from amf.problem import DynamicProblem, clamp_to_bounds, make_moving_optimum_problem
from amf.exceptions import DimensionMismatch, InvalidBounds
from amf.models import BoxBounds, ChangeSchedule, Constraint, ConstraintKind
from tests.conftest import static_sphere


def test_objective_is_zero_at_own_optimum():
    problem = make_moving_optimum_problem(2, seed=7)
    assert problem.evaluate(problem.hidden_optimum, 0) == 0.0


def test_objective_one_dimension():
    problem = static_sphere([0.3])
    assert problem.evaluate([0.8], 0) == pytest.approx(0.25, abs=1e-15)


def test_objective_two_dimensions(sphere_2d):
    assert sphere_2d.evaluate([0.5, 0.9], 0) == pytest.approx(0.16, abs=1e-15)


def test_objective_matches_independent_summation():
    rng = np.random.default_rng(3)
    optimum = rng.uniform(size=10)
    problem = static_sphere(optimum)
    for x in rng.uniform(size=(25, 10)):
        expected = sum((xi - oi) ** 2 for xi, oi in zip(x, optimum))
        assert abs(problem.evaluate(x, 0) - expected) <= 1e-12


def test_single_and_batch_evaluation_agree():
    problem = make_moving_optimum_problem(5, seed=1)
    xs = np.random.default_rng(0).uniform(size=(8, 5))
    batch = problem.evaluate_many(xs)
    assert all(problem.evaluate(x) == value for x, value in zip(xs, batch))


def test_initial_optimum_within_bounds():
    problem = make_moving_optimum_problem(10, seed=42)
    assert np.all((problem.hidden_optimum >= 0.0) & (problem.hidden_optimum <= 1.0))


def test_invalid_bounds_rejected():
    with pytest.raises(InvalidBounds):
        make_moving_optimum_problem(2, bounds=BoxBounds([0.0, 1.0], [1.0, 1.0]))


def test_bounds_dimension_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        make_moving_optimum_problem(3, bounds=BoxBounds.uniform(2))


def test_evaluate_dimension_mismatch(sphere_2d):
    with pytest.raises(DimensionMismatch):
        sphere_2d.evaluate([0.1, 0.2, 0.3])


def test_evaluation_counter(sphere_2d):
    sphere_2d.evaluate([0.1, 0.1])
    sphere_2d.evaluate_many(np.zeros((4, 2)))
    assert sphere_2d.evaluations == 5


def test_change_happens_at_frequency():
    problem = make_moving_optimum_problem(3, schedule=ChangeSchedule(200, 0.1), seed=0)
    for _ in range(199):
        assert problem.advance_clock() is None
    change = problem.advance_clock()
    assert change is not None and change.time == 200
    assert problem.advance_clock() is None
    assert problem.clock == 201


def test_shift_replay():
    seed = 11
    problem = make_moving_optimum_problem(2, schedule=ChangeSchedule(200, 0.1), seed=seed)
    for _ in range(200):
        change = problem.advance_clock()

    rng = environment_stream(seed)
    start = rng.uniform(np.zeros(2), np.ones(2))
    direction = rng.standard_normal(2)
    direction /= np.linalg.norm(direction)
    expected = np.clip(start + 0.1 * direction, 0.0, 1.0)

    np.testing.assert_array_equal(problem.optimum_at(200), expected)
    np.testing.assert_array_equal(problem.optimum_at(199), start)
    assert change.shift_magnitude == pytest.approx(np.linalg.norm(expected - start), abs=1e-15)
    assert change.shift_magnitude <= 0.1 * np.sqrt(2) + 1e-15


def test_optimum_stays_within_bounds():
    problem = make_moving_optimum_problem(10, schedule=ChangeSchedule(5, 1.0), seed=42)
    for _ in range(500):
        problem.advance_clock()
        assert np.all((problem.hidden_optimum >= 0.0) & (problem.hidden_optimum <= 1.0))


def test_past_landscape_still_evaluable():
    problem = make_moving_optimum_problem(2, schedule=ChangeSchedule(10, 0.2), seed=5)
    first = problem.hidden_optimum.copy()
    for _ in range(30):
        problem.advance_clock()
    assert problem.evaluate(first, 3) == 0.0
    assert problem.evaluate(first, 30) > 0.0
    with pytest.raises(ValueError):
        problem.evaluate(first, 31)


def test_change_cap():
    problem = make_moving_optimum_problem(2, schedule=ChangeSchedule(10, 0.1, total_changes_cap=2), seed=0)
    for _ in range(100):
        problem.advance_clock()
    assert [c.time for c in problem.changes] == [10, 20]


def test_same_seed_same_trajectory():
    a = make_moving_optimum_problem(4, schedule=ChangeSchedule(3, 0.3), seed=9)
    b = make_moving_optimum_problem(4, schedule=ChangeSchedule(3, 0.3), seed=9)
    for _ in range(30):
        a.advance_clock()
        b.advance_clock()
        np.testing.assert_array_equal(a.hidden_optimum, b.hidden_optimum)


def test_frozen_objective_ignores_later_changes():
    problem = make_moving_optimum_problem(2, schedule=ChangeSchedule(1, 0.5), seed=2)
    objective = problem.frozen(0)
    start = problem.hidden_optimum.copy()
    problem.advance_clock()
    assert objective(start) == 0.0


def test_penalty_terms():
    inequality = Constraint(ConstraintKind.INEQUALITY, lambda x, t: x[0] - 0.2, weight=10.0)
    equality = Constraint(ConstraintKind.EQUALITY, lambda x, t: x[1] - 0.5, weight=2.0)
    problem = DynamicProblem(
        BoxBounds.uniform(2), ChangeSchedule(), [0.5, 0.5], np.random.default_rng(0), [inequality, equality]
    )
    # g = 0.3 violates, h = 0.4 violates
    expected = (0.5 - 0.5) ** 2 + (0.9 - 0.5) ** 2 + 10.0 * 0.3 ** 2 + 2.0 * 0.4 ** 2
    assert problem.evaluate([0.5, 0.9], 0) == pytest.approx(expected)
    # g satisfied, h satisfied
    assert problem.evaluate([0.1, 0.5], 0) == pytest.approx(0.16)


@pytest.mark.parametrize("x, expected", [
    ([-0.2, 0.5], [0.0, 0.5]),
    ([0.3, 0.7], [0.3, 0.7]),
    ([2.0, -3.0], [1.0, 0.0]),
])
def test_clamp_to_bounds(x, expected):
    bounds = BoxBounds.uniform(2)
    clamped = clamp_to_bounds(x, bounds)
    np.testing.assert_array_equal(clamped, expected)
    np.testing.assert_array_equal(clamp_to_bounds(clamped, bounds), clamped)


def test_clamp_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        clamp_to_bounds([0.1, 0.2, 0.3], BoxBounds.uniform(2))
