import numpy as np
import pytest

from amf.sensing import ChangeSensor
from amf.models import BoxBounds, ChangeSchedule
from amf.problem import make_moving_optimum_problem
from amf.exceptions import ConfigurationError, DimensionMismatch
from tests.conftest import static_sphere


def _watch(problem, sensor, iterations, best):
    events = []
    sensor.sense(problem, problem.clock)
    sensor.refresh_references(best, problem.clock, problem)
    for _ in range(iterations):
        problem.advance_clock()
        event = sensor.sense(problem, problem.clock)
        if event is not None:
            events.append(event)
        sensor.refresh_references(best, problem.clock, problem)
    return events


def test_static_problem_never_fires():
    problem = static_sphere(np.full(4, 0.3))
    sensor = ChangeSensor.with_random_sentinels(problem.bounds, 3, np.random.default_rng(0))
    assert _watch(problem, sensor, 1000, np.full(4, 0.6)) == []


def test_changes_detected_without_lag():
    problem = make_moving_optimum_problem(10, schedule=ChangeSchedule(200, 0.1), seed=3)
    sensor = ChangeSensor.with_random_sentinels(problem.bounds, 3, np.random.default_rng(1))
    events = _watch(problem, sensor, 1000, np.full(10, 0.5))

    assert [e.detected_at for e in events] == [200, 400, 600, 800, 1000]
    assert all(e.lag == 0 for e in events)
    assert all(e.drift_magnitude > sensor.tolerance for e in events)


@pytest.mark.slow
def test_static_problem_stays_quiet_while_the_best_moves():
    problem = make_moving_optimum_problem(10, schedule=ChangeSchedule(10**6, 0.1), seed=5)
    sensor = ChangeSensor.with_random_sentinels(problem.bounds, 3, np.random.default_rng(5))
    bounds = problem.bounds
    walk = np.random.default_rng(6)
    sensor.sense(problem, problem.clock)
    sensor.refresh_references(walk.uniform(bounds.lower, bounds.upper), problem.clock, problem)
    for _ in range(10_000):
        problem.advance_clock()
        assert sensor.sense(problem, problem.clock) is None, problem.clock
        sensor.refresh_references(walk.uniform(bounds.lower, bounds.upper), problem.clock, problem)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_every_change_detected_on_its_iteration(seed):
    problem = make_moving_optimum_problem(10, schedule=ChangeSchedule(20, 0.1), seed=seed)
    sensor = ChangeSensor.with_random_sentinels(problem.bounds, 3, np.random.default_rng(seed + 100))
    events = _watch(problem, sensor, 1000, np.full(10, 0.5))

    assert [e.detected_at for e in events] == list(range(20, 1001, 20))
    assert all(e.lag == 0 for e in events)


def test_first_call_only_primes(sphere_2d):
    sensor = ChangeSensor(np.array([[0.1, 0.1]]))
    assert not sensor.is_primed
    assert sensor.sense(sphere_2d, 0) is None
    assert sensor.is_primed


def _equidistant_setup():
    seed = 17
    schedule = ChangeSchedule(200, 0.1)
    scout = make_moving_optimum_problem(2, schedule=schedule, seed=seed)
    before = scout.hidden_optimum.copy()
    for _ in range(200):
        scout.advance_clock()
    after = scout.hidden_optimum.copy()
    return make_moving_optimum_problem(2, schedule=schedule, seed=seed), before, after


def test_equidistant_best_caught_by_sentinel():
    problem, before, after = _equidistant_setup()
    midpoint = (before + after) / 2
    assert abs(problem.evaluate(midpoint, 0) - np.sum((midpoint - after) ** 2)) < 1e-12

    with_sentinel = ChangeSensor([before])
    blind = ChangeSensor(np.empty((0, 2)))
    for sensor in (with_sentinel, blind):
        sensor.sense(problem, 0)
        sensor.refresh_references(midpoint, 0, problem)

    detected = {"sentinel": [], "blind": []}
    for _ in range(200):
        problem.advance_clock()
        for name, sensor in (("sentinel", with_sentinel), ("blind", blind)):
            if sensor.sense(problem, problem.clock) is not None:
                detected[name].append(problem.clock)

    assert detected["sentinel"] == [200]
    assert detected["blind"] == []


def test_refresh_points_at_new_best(sphere_2d):
    sensor = ChangeSensor(np.array([[0.1, 0.1], [0.9, 0.9]]))
    sensor.refresh_references([0.4, 0.4], 0, sphere_2d)
    sensor.refresh_references([0.45, 0.5], 0, sphere_2d)
    np.testing.assert_array_equal(sensor.reference_points[0], [0.45, 0.5])
    assert sensor.cached_fitness[0] == sphere_2d.evaluate([0.45, 0.5])


def test_refresh_is_idempotent(sphere_2d):
    sensor = ChangeSensor(np.array([[0.1, 0.1]]))
    sensor.refresh_references([0.3, 0.3], 0, sphere_2d)
    first = (sensor.reference_points.copy(), sensor.cached_fitness)
    sensor.refresh_references([0.3, 0.3], 0, sphere_2d)
    np.testing.assert_array_equal(sensor.reference_points, first[0])
    np.testing.assert_array_equal(sensor.cached_fitness, first[1])


def test_reference_count():
    problem = static_sphere(np.full(10, 0.5))
    sensor = ChangeSensor.with_random_sentinels(BoxBounds.uniform(10), 3, np.random.default_rng(0))
    sensor.refresh_references(np.full(10, 0.2), 0, problem)
    assert sensor.reference_points.shape == (4, 10)
    assert sensor.cached_fitness.shape == (4,)


def test_negative_tolerance_rejected():
    with pytest.raises(ConfigurationError):
        ChangeSensor(np.zeros((1, 2)), tolerance=-1.0)


def test_wrong_best_shape(sphere_2d):
    with pytest.raises(DimensionMismatch):
        ChangeSensor(np.zeros((1, 2))).refresh_references([0.1, 0.2, 0.3], 0, sphere_2d)
