import numpy as np
import pytest

from amf.problem import make_moving_optimum_problem
from amf.exceptions import ConfigurationError, NonFiniteFitness
from amf.models import BoxBounds, DEConfig, DEVariant, Population
from amf.de import (
    crossover,
    difference_mutation,
    differential_evolution,
    init_population,
    mutate,
    pick_donors,
    select,
    step_generation,
)
from tests.conftest import static_sphere


def test_init_population_within_bounds(sphere_2d):
    pop = init_population(sphere_2d, DEConfig(population_size=4), rng=1)
    assert pop.members.shape == (4, 2)
    assert np.all((pop.members >= 0.0) & (pop.members <= 1.0))
    assert pop.generation == 0
    np.testing.assert_array_equal(pop.fitness, sphere_2d.evaluate_many(pop.members))


def test_init_population_deterministic(sphere_2d):
    a = init_population(sphere_2d, DEConfig(population_size=6), rng=5)
    b = init_population(sphere_2d, DEConfig(population_size=6), rng=5)
    np.testing.assert_array_equal(a.members, b.members)


@pytest.mark.parametrize("dimension, expected", [(1, 10), (2, 20), (10, 100), (30, 100)])
def test_default_population_follows_dimension(dimension, expected):
    problem = static_sphere(np.full(dimension, 0.5))
    assert DEConfig().population_for(dimension) == expected
    assert init_population(problem, DEConfig(), rng=0).size == expected


def test_explicit_population_overrides_default(sphere_2d):
    assert init_population(sphere_2d, DEConfig(population_size=7), rng=0).size == 7


def test_best_index_matches_linear_scan(sphere_10d):
    pop = init_population(sphere_10d, DEConfig(population_size=50), rng=3)
    best = 0
    for i in range(pop.size):
        if pop.fitness[i] < pop.fitness[best]:
            best = i
    assert pop.best_index == best


def test_best_index_ties_go_to_lowest_index():
    pop = Population(np.zeros((4, 2)), np.array([1.0, 0.5, 0.5, 2.0]))
    assert pop.best_index == 1


def test_difference_mutation_arithmetic():
    np.testing.assert_array_equal(difference_mutation([1, 1], [2, 2], [0, 0], 0.5), [2.0, 2.0])


def test_identical_donors_give_base():
    np.testing.assert_array_equal(difference_mutation([0.3, 0.7], [0.2, 0.2], [0.2, 0.2], 0.9), [0.3, 0.7])


def test_pick_donors_distinct_and_exclude_target():
    rng = np.random.default_rng(0)
    for _ in range(200):
        target = int(rng.integers(6))
        donors = pick_donors(rng, 6, target)
        assert len(set(donors.tolist())) == 3
        assert target not in donors


def test_pick_donors_needs_four_members():
    with pytest.raises(ConfigurationError):
        pick_donors(np.random.default_rng(0), 3, 0)


def test_mutate_clamps_to_bounds():
    members = np.array([[1.0, 1.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    pop = Population(members, np.zeros(4))
    donors = mutate(pop, np.arange(4), DEConfig(population_size=4, mutation_factor=2.0), np.random.default_rng(1),
                    BoxBounds.uniform(2))
    assert np.all((donors >= 0.0) & (donors <= 1.0))


def test_dithered_factor_stays_in_range():
    config = DEConfig(variant=DEVariant.BEST1BIN, mutation_factor=(0.7, 1.2))
    factors = config.draw_mutation_factor(np.random.default_rng(0), size=10_000)
    assert factors.min() >= 0.7 and factors.max() <= 1.2


def test_crossover_full_rate_takes_donor():
    rng = np.random.default_rng(0)
    donor = rng.uniform(size=5)
    np.testing.assert_array_equal(crossover(np.zeros(5), donor, 1.0, rng), donor)


def test_crossover_zero_rate_changes_one_component():
    rng = np.random.default_rng(0)
    for _ in range(50):
        trial = crossover(np.zeros(6), np.ones(6), 0.0, rng)
        assert np.count_nonzero(trial) == 1


def test_crossover_expected_donor_share():
    rng = np.random.default_rng(12)
    trials = crossover(np.zeros((10_000, 10)), np.ones((10_000, 10)), 0.9, rng)
    assert trials.sum(axis=1).mean() == pytest.approx(1 + 0.9 * 9, abs=0.1)


@pytest.mark.parametrize("trial_fitness, trial_wins", [(1.0, True), (2.0, False), (0.0, True)])
def test_select(trial_fitness, trial_wins):
    winner, fitness, replaced = select([0.1, 0.1], 1.0, [0.2, 0.2], trial_fitness)
    assert replaced is trial_wins
    np.testing.assert_array_equal(winner, [0.2, 0.2] if trial_wins else [0.1, 0.1])
    assert fitness == (trial_fitness if trial_wins else 1.0)


def test_select_rejects_non_finite():
    with pytest.raises(NonFiniteFitness):
        select([0.1], 1.0, [0.2], float("nan"))


def test_identical_population_is_a_fixed_point(sphere_2d):
    members = np.tile([0.2, 0.8], (5, 1))
    pop = Population(members, sphere_2d.evaluate_many(members))
    stepped = step_generation(pop, sphere_2d, DEConfig(population_size=5, crossover_rate=0.3), np.random.default_rng(4))
    np.testing.assert_array_equal(stepped.members, members)
    assert stepped.generation == 1


def test_golden_generation(sphere_2d):
    """Four members in 2-D, one rand/1/bin generation replayed draw by draw."""
    seed, factor, rate = 2024, 0.5, 0.5
    members = np.array([
        [0.10, 0.90],
        [0.40, 0.20],
        [0.75, 0.65],
        [0.95, 0.05],
    ])
    pop = Population(members.copy(), sphere_2d.evaluate_many(members))
    config = DEConfig(population_size=4, mutation_factor=factor, crossover_rate=rate)
    stepped = step_generation(pop, sphere_2d, config, np.random.default_rng(seed))

    replay = np.random.default_rng(seed)
    keys = replay.random((4, 3))
    forced = replay.integers(2, size=4)
    coins = replay.random((4, 2))

    expected_members = members.copy()
    expected_fitness = pop.fitness.copy()
    for i in range(4):
        order = sorted(range(3), key=lambda k: keys[i, k])[:3]
        r1, r2, r3 = (k + 1 if k >= i else k for k in order)
        donor = np.clip(members[r1] + factor * (members[r2] - members[r3]), 0.0, 1.0)

        trial = members[i].copy()
        for j in range(2):
            if coins[i, j] <= rate or j == forced[i]:
                trial[j] = donor[j]

        trial_fitness = (trial[0] - 0.5) ** 2 + (trial[1] - 0.5) ** 2
        if trial_fitness <= pop.fitness[i]:
            expected_members[i] = trial
            expected_fitness[i] = trial_fitness

    np.testing.assert_array_equal(stepped.members, expected_members)
    np.testing.assert_allclose(stepped.fitness, expected_fitness, rtol=0, atol=1e-15)
    # synchronous update: the input population is left untouched
    np.testing.assert_array_equal(pop.members, members)


@pytest.mark.slow
def test_static_convergence():
    config = DEConfig(population_size=50, mutation_factor=0.8, crossover_rate=0.9, max_generations=1000)
    converged = 0
    for seed in range(20):
        problem = make_moving_optimum_problem(10, seed=seed)
        pop = differential_evolution(problem, config, rng=seed)
        converged += pop.best_fitness < 1e-6
    assert converged >= 18
