import math

from enum import Enum

try:
    from enum import StrEnum
except ImportError:  # Python < 3.11
    class StrEnum(str, Enum):
        __str__ = str.__str__
        __format__ = str.__format__
from dataclasses import dataclass, field, replace
from typing import Callable, NewType, TypeAlias

import numpy as np
import numpy.typing as npt

from .exceptions import InvalidBounds, ConfigurationError
from .constants import (
    DEFAULT_LOWER,
    DEFAULT_UPPER,
    DEFAULT_CHANGE_FREQUENCY,
    DEFAULT_CHANGE_SEVERITY,
    DEFAULT_PENALTY_WEIGHT,
    MIN_POPULATION_SIZE,
    POPULATION_PER_DIMENSION,
    MAX_DEFAULT_POPULATION,
    DEFAULT_MUTATION_FACTOR,
    DEFAULT_CROSSOVER_RATE,
    DEFAULT_MAX_GENERATIONS,
    DEFAULT_SENSOR_TOLERANCE,
    DEFAULT_SENTINEL_COUNT,
    DEFAULT_REINIT_FRACTION,
    DEFAULT_LOCAL_SEARCH_BUDGET,
    DEFAULT_DITHER,
    MAX_DITHER,
    DEFAULT_TOTAL_ITERATIONS,
    DEFAULT_RECOVERY_TARGET,
    DEFAULT_RECOVERY_BAND,
    DEFAULT_SNAPSHOT_STRIDE,
    DEFAULT_INITIAL_TEMPERATURE,
    DEFAULT_COOLING_EXPONENT,
    DEFAULT_ANNEAL_STEPS,
    DEFAULT_STEP_SCALE,
    DEFAULT_HOPS,
    DEFAULT_PERTURBATION_SCALE,
    DEFAULT_SIMPLEX_ITERATIONS,
)


SolutionVector: TypeAlias = npt.NDArray[np.float64]
Iteration = NewType("Iteration", int)
MutationFactor: TypeAlias = float | tuple[float, float]


class DEVariant(StrEnum):
    RAND1BIN = 'rand1bin'
    BEST1BIN = 'best1bin'


class StrategyKind(StrEnum):
    PARTIAL_REINIT = 'partial_reinit'
    LOCAL_SEARCH_HIGH_MUTATION = 'local_search_high_mutation'
    HYBRID = 'hybrid'


class BaselineKind(StrEnum):
    DUAL_ANNEALING = 'dual_annealing'
    BASIN_HOPPING = 'basin_hopping'


class ConstraintKind(Enum):
    INEQUALITY = 'g'
    """g(x, t) <= 0"""

    EQUALITY = 'h'
    """h(x, t) == 0"""


@dataclass(frozen=True, slots=True, eq=False)
class BoxBounds:
    """
    Per-axis box of the decision space.

    Both arrays are copied to read-only float64 vectors on construction.
    """
    lower: SolutionVector
    upper: SolutionVector

    def __post_init__(self):
        lower = np.array(self.lower, dtype=np.float64, ndmin=1)
        upper = np.array(self.upper, dtype=np.float64, ndmin=1)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise InvalidBounds(f"Bounds shapes differ: {lower.shape} vs {upper.shape}")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise InvalidBounds("Bounds must be finite.")
        if np.any(lower >= upper):
            raise InvalidBounds("Every lower bound must be strictly below its upper bound.")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @classmethod
    def uniform(cls, dimension: int, lower: float = DEFAULT_LOWER, upper: float = DEFAULT_UPPER) -> "BoxBounds":
        """Same interval on every axis, [0, 1]^D by default."""
        if dimension < 1:
            raise InvalidBounds("Dimension must be positive.")
        return cls(np.full(dimension, lower), np.full(dimension, upper))

    @property
    def dimension(self) -> int:
        return self.lower.shape[0]

    @property
    def span(self) -> SolutionVector:
        return self.upper - self.lower

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BoxBounds):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self) -> int:
        return hash((self.lower.tobytes(), self.upper.tobytes()))


@dataclass(frozen=True, slots=True)
class ChangeSchedule:
    """
    When and how far the hidden optimum moves.

    Attributes:
        change_frequency: Iterations between two changes.
        change_severity: Fraction of each axis range the optimum travels per change.
        total_changes_cap: Maximum number of changes, ``None`` for unlimited.
    """
    change_frequency: int = DEFAULT_CHANGE_FREQUENCY
    change_severity: float = DEFAULT_CHANGE_SEVERITY
    total_changes_cap: int | None = None

    def __post_init__(self):
        if self.change_frequency < 1:
            raise ConfigurationError("change_frequency must be >= 1")
        if not 0.0 < self.change_severity <= 1.0:
            raise ConfigurationError("change_severity must lie in (0, 1]")
        if self.total_changes_cap is not None and self.total_changes_cap < 0:
            raise ConfigurationError("total_changes_cap must be non-negative")


@dataclass(frozen=True, slots=True)
class Constraint:
    """Constraint g(x, t) <= 0 or h(x, t) == 0 handled by a quadratic penalty."""
    kind: ConstraintKind
    function: Callable[[SolutionVector, int], float]
    weight: float = DEFAULT_PENALTY_WEIGHT

    def penalty(self, x: SolutionVector, t: int) -> float:
        value = float(self.function(x, t))
        if self.kind is ConstraintKind.INEQUALITY:
            value = max(0.0, value)
        return self.weight * value * value


@dataclass(frozen=True, slots=True)
class ScheduledChange:
    """Ground-truth record of one optimum shift made by the generator."""
    time: int
    shift_magnitude: float


@dataclass(frozen=True, slots=True)
class ChangeEvent:
    """
    Change reported by the sensing mechanism.

    Attributes:
        detected_at: Iteration at which the drift was observed.
        drift_magnitude: Largest |f_new - f_cached| over the reference points.
        scheduled_at: Iteration of the generator's shift, when known.
    """
    detected_at: int
    drift_magnitude: float
    scheduled_at: int | None = None

    @property
    def lag(self) -> int | None:
        if self.scheduled_at is None:
            return None
        return self.detected_at - self.scheduled_at


def default_population_size(dimension: int) -> int:
    """10 members per dimension, capped at 100 and never below the 4 DE needs."""
    return max(MIN_POPULATION_SIZE, min(POPULATION_PER_DIMENSION * dimension, MAX_DEFAULT_POPULATION))


@dataclass(frozen=True, slots=True)
class DEConfig:
    """
    Differential Evolution settings.

    Attributes:
        population_size: Number of members N; ``None`` sizes the population from the dimension
            (10 per dimension, capped at 100, see `default_population_size`).
        mutation_factor: Fixed F, or a ``(low, high)`` interval F is drawn from once per donor.
        crossover_rate: Binomial crossover probability CR.
        variant: Mutation base vector, random member or population best.
        max_generations: Generations of a stand-alone run.
    """
    population_size: int | None = None
    mutation_factor: MutationFactor = DEFAULT_MUTATION_FACTOR
    crossover_rate: float = DEFAULT_CROSSOVER_RATE
    variant: DEVariant = DEVariant.RAND1BIN
    max_generations: int = DEFAULT_MAX_GENERATIONS

    def __post_init__(self):
        if self.population_size is not None and self.population_size < MIN_POPULATION_SIZE:
            raise ConfigurationError(
                f"population_size must be >= {MIN_POPULATION_SIZE} (three donors plus the target)"
            )
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigurationError("crossover_rate must lie in [0, 1]")
        if self.max_generations < 1:
            raise ConfigurationError("max_generations must be positive")
        if isinstance(self.mutation_factor, (tuple, list)):
            low, high = (float(v) for v in self.mutation_factor)
            if not 0.0 < low <= high:
                raise ConfigurationError("dither interval must satisfy 0 < low <= high")
            object.__setattr__(self, 'mutation_factor', (low, high))
        elif not self.mutation_factor > 0.0:
            raise ConfigurationError("mutation_factor must be positive")
        try:
            object.__setattr__(self, 'variant', DEVariant(self.variant))
        except ValueError as ex:
            raise ConfigurationError(f"Unknown DE variant: {self.variant!r}") from ex

    def population_for(self, dimension: int) -> int:
        if self.population_size is None:
            return default_population_size(dimension)
        return self.population_size

    @property
    def is_dithered(self) -> bool:
        return isinstance(self.mutation_factor, tuple)

    @property
    def mutation_bounds(self) -> tuple[float, float]:
        if isinstance(self.mutation_factor, tuple):
            return self.mutation_factor
        return float(self.mutation_factor), float(self.mutation_factor)

    def draw_mutation_factor(self, rng: np.random.Generator, size: int | None = None) -> float | npt.NDArray[np.float64]:
        """Fixed F, or one uniform draw from the dither interval per donor."""
        if isinstance(self.mutation_factor, tuple):
            low, high = self.mutation_factor
            return rng.uniform(low, high, size=size)
        if size is None:
            return float(self.mutation_factor)
        return np.full(size, float(self.mutation_factor))

    def with_dither_upper(self, high: float) -> "DEConfig":
        low, _ = self.mutation_bounds
        return replace(self, mutation_factor=(low, high))


@dataclass(slots=True, eq=False)
class Population:
    """
    Members are rows of an (N, D) matrix; ``fitness[i]`` is the value of row i
    at iteration ``evaluated_at``.
    """
    members: npt.NDArray[np.float64]
    fitness: npt.NDArray[np.float64]
    generation: int = 0
    evaluated_at: int = 0

    @property
    def size(self) -> int:
        return self.members.shape[0]

    @property
    def dimension(self) -> int:
        return self.members.shape[1]

    @property
    def best_index(self) -> int:
        # argmin returns the first minimum, so ties go to the lowest index
        return int(np.argmin(self.fitness))

    @property
    def best(self) -> SolutionVector:
        return self.members[self.best_index]

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[self.best_index])

    @property
    def mean_fitness(self) -> float:
        return float(np.mean(self.fitness))

    def copy(self) -> "Population":
        return Population(self.members.copy(), self.fitness.copy(), self.generation, self.evaluated_at)


def _default_local_search_config() -> DEConfig:
    return DEConfig(
        variant=DEVariant.BEST1BIN,
        mutation_factor=DEFAULT_DITHER,
        crossover_rate=DEFAULT_CROSSOVER_RATE,
    )


@dataclass(frozen=True, slots=True)
class AdaptationStrategy:
    """
    Response to a detected change.

    Attributes:
        kind: Partial re-initialization, high-mutation local search, or both in sequence.
        reinit_fraction: Share of each member's components redrawn.
        local_search_config: DE settings of the burst (best1bin with a widened F range).
        local_search_budget: Burst length in generations.
    """
    kind: StrategyKind = StrategyKind.HYBRID
    reinit_fraction: float = DEFAULT_REINIT_FRACTION
    local_search_config: DEConfig = field(default_factory=_default_local_search_config)
    local_search_budget: int = DEFAULT_LOCAL_SEARCH_BUDGET

    def __post_init__(self):
        try:
            object.__setattr__(self, 'kind', StrategyKind(self.kind))
        except ValueError as ex:
            raise ConfigurationError(f"Unknown adaptation strategy: {self.kind!r}") from ex
        if not 0.0 < self.reinit_fraction <= 1.0:
            raise ConfigurationError("reinit_fraction must lie in (0, 1]")
        if self.local_search_budget < 0:
            raise ConfigurationError("local_search_budget must be non-negative")
        low, high = self.local_search_config.mutation_bounds
        if not 0.0 < low <= high <= MAX_DITHER:
            raise ConfigurationError(f"local search dither must lie within (0, {MAX_DITHER}]")

    def with_dither_upper(self, high: float) -> "AdaptationStrategy":
        return replace(self, local_search_config=self.local_search_config.with_dither_upper(high))


@dataclass(frozen=True, slots=True)
class AdaptationOutcome:
    strategy_used: StrategyKind
    evaluations_spent: int
    fitness_before: float
    fitness_after: float


@dataclass(frozen=True, slots=True)
class FeedbackState:
    """
    Upper dither bound steered by how quickly the last change was recovered from.
    """
    dither_hi: float = DEFAULT_DITHER[1]
    dither_hi_default: float = DEFAULT_DITHER[1]
    recovery_target: int = DEFAULT_RECOVERY_TARGET
    last_recovery_iterations: int | None = None

    def __post_init__(self):
        if not self.dither_hi_default <= self.dither_hi <= MAX_DITHER:
            raise ConfigurationError(
                f"dither_hi must lie in [{self.dither_hi_default}, {MAX_DITHER}]"
            )


@dataclass(frozen=True, slots=True)
class FrameworkConfig:
    total_iterations: int = DEFAULT_TOTAL_ITERATIONS
    de: DEConfig = field(default_factory=DEConfig)
    strategy: AdaptationStrategy = field(default_factory=AdaptationStrategy)
    sensor_tolerance: float = DEFAULT_SENSOR_TOLERANCE
    sentinel_count: int = DEFAULT_SENTINEL_COUNT
    feedback_enabled: bool = False
    seed: int = 0
    recovery_target: int = DEFAULT_RECOVERY_TARGET
    recovery_band: float = DEFAULT_RECOVERY_BAND
    snapshot_stride: int = DEFAULT_SNAPSHOT_STRIDE

    def __post_init__(self):
        if self.total_iterations < 1:
            raise ConfigurationError("total_iterations must be >= 1")
        if self.sensor_tolerance < 0:
            raise ConfigurationError("sensor_tolerance must be non-negative")
        if self.sentinel_count < 0:
            raise ConfigurationError("sentinel_count must be non-negative")
        if self.recovery_target < 1:
            raise ConfigurationError("recovery_target must be positive")
        if self.recovery_band < 1.0:
            raise ConfigurationError("recovery_band must be >= 1")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot_stride must be positive")


@dataclass(frozen=True, slots=True, eq=False)
class IterationRecord:
    """
    One row of a run history.

    ``best_so_far_fitness`` restarts at every change window, ``cumulative_best_fitness``
    never does. ``best_solution_snapshot`` is the full vector only on stride iterations.
    """
    t: int
    current_best_fitness: float
    best_so_far_fitness: float
    cumulative_best_fitness: float
    population_mean_fitness: float
    best_x1: float
    best_x2: float
    change_flag: bool
    optimum_snapshot: SolutionVector
    best_solution_snapshot: SolutionVector | None = None


@dataclass(frozen=True, slots=True)
class Recovery:
    iterations: int
    censored: bool


@dataclass(frozen=True, slots=True)
class AnnealConfig:
    """
    Simulated annealing baseline.

    Temperature at step k is ``initial_temperature / (1 + k) ** cooling_exponent``.
    """
    initial_temperature: float = DEFAULT_INITIAL_TEMPERATURE
    cooling_exponent: float = DEFAULT_COOLING_EXPONENT
    steps: int = DEFAULT_ANNEAL_STEPS
    step_scale: float = DEFAULT_STEP_SCALE

    def __post_init__(self):
        if self.initial_temperature <= 0:
            raise ConfigurationError("initial_temperature must be positive")
        if self.cooling_exponent <= 0:
            raise ConfigurationError("cooling_exponent must be positive so temperature decreases")
        if self.steps < 1:
            raise ConfigurationError("steps must be positive")
        if self.step_scale <= 0:
            raise ConfigurationError("step_scale must be positive")

    def temperature(self, step: int) -> float:
        return self.initial_temperature / math.pow(1 + step, self.cooling_exponent)


@dataclass(frozen=True, slots=True)
class BasinConfig:
    hops: int = DEFAULT_HOPS
    perturbation_scale: float = DEFAULT_PERTURBATION_SCALE
    local_simplex_iterations: int = DEFAULT_SIMPLEX_ITERATIONS

    def __post_init__(self):
        if self.hops < 1:
            raise ConfigurationError("hops must be >= 1")
        if self.perturbation_scale < 0:
            raise ConfigurationError("perturbation_scale must be non-negative")
        if self.local_simplex_iterations < 1:
            raise ConfigurationError("local_simplex_iterations must be positive")


@dataclass(frozen=True, slots=True, eq=False)
class BaselineResult:
    """
    Best point of a static optimizer and its best-so-far trace, one entry per evaluation.
    ``improvements`` lists (evaluation index, point) each time the best point changed.
    """
    best: SolutionVector
    best_fitness: float
    trace: npt.NDArray[np.float64]
    evaluations: int
    improvements: tuple[tuple[int, SolutionVector], ...] = ()

    def best_at(self, evaluation: int) -> SolutionVector:
        """Best point known after `evaluation` + 1 objective calls."""
        point = self.improvements[0][1]
        for index, candidate in self.improvements:
            if index > evaluation:
                break
            point = candidate
        return point
