"""
Experiment specifications: YAML parsing with line-anchored diagnostics and the fully
resolved echo used by ``describe``.

Example::

    name: tracking
    seeds: [0, 1, 2]
    problem:
      dimension: 10
    strategies:
      - kind: hybrid
    baselines:
      - kind: dual_annealing
"""
from __future__ import annotations

import logging

from pathlib import Path
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Any, Iterator, TypeAlias

import yaml

from .exceptions import AMFError, SpecError
from .constants import (
    DEFAULT_LOWER,
    DEFAULT_UPPER,
    DEFAULT_CHANGE_FREQUENCY,
    DEFAULT_CHANGE_SEVERITY,
    DEFAULT_MUTATION_FACTOR,
    DEFAULT_CROSSOVER_RATE,
    DEFAULT_SENSOR_TOLERANCE,
    DEFAULT_SENTINEL_COUNT,
    DEFAULT_REINIT_FRACTION,
    DEFAULT_LOCAL_SEARCH_BUDGET,
    DEFAULT_DITHER,
    DEFAULT_TOTAL_ITERATIONS,
    DEFAULT_RECOVERY_TARGET,
    DEFAULT_RECOVERY_BAND,
    DEFAULT_SNAPSHOT_STRIDE,
    DEFAULT_OUTPUT_DIRECTORY,
)
from .models import (
    AdaptationStrategy,
    AnnealConfig,
    BaselineKind,
    BasinConfig,
    BoxBounds,
    ChangeSchedule,
    DEConfig,
    DEVariant,
    FrameworkConfig,
    MutationFactor,
    StrategyKind,
    default_population_size,
)


logger = logging.getLogger(__name__)

SPEC_SUFFIXES = (".yaml", ".yml")

BaselineSettings: TypeAlias = AnnealConfig | BasinConfig

_BASELINE_TYPES: dict[BaselineKind, type] = {
    BaselineKind.DUAL_ANNEALING: AnnealConfig,
    BaselineKind.BASIN_HOPPING: BasinConfig,
}


@dataclass(frozen=True, slots=True)
class ProblemSettings:
    dimensions: tuple[int, ...]
    lower: float = DEFAULT_LOWER
    upper: float = DEFAULT_UPPER
    change_frequency: int = DEFAULT_CHANGE_FREQUENCY
    change_severity: float = DEFAULT_CHANGE_SEVERITY
    total_changes_cap: int | None = None

    def bounds(self, dimension: int) -> BoxBounds:
        return BoxBounds.uniform(dimension, self.lower, self.upper)

    def schedule(self) -> ChangeSchedule:
        return ChangeSchedule(self.change_frequency, self.change_severity, self.total_changes_cap)

    def to_dict(self) -> dict[str, Any]:
        return {
            "dimension": self.dimensions[0] if len(self.dimensions) == 1 else list(self.dimensions),
            "lower": self.lower,
            "upper": self.upper,
            "change_frequency": self.change_frequency,
            "change_severity": self.change_severity,
            "total_changes_cap": self.total_changes_cap,
        }


@dataclass(frozen=True, slots=True)
class FrameworkSettings:
    total_iterations: int = DEFAULT_TOTAL_ITERATIONS
    sensor_tolerance: float = DEFAULT_SENSOR_TOLERANCE
    sentinel_count: int = DEFAULT_SENTINEL_COUNT
    feedback_enabled: bool = False
    recovery_target: int = DEFAULT_RECOVERY_TARGET
    recovery_band: float = DEFAULT_RECOVERY_BAND
    snapshot_stride: int = DEFAULT_SNAPSHOT_STRIDE

    def build(self, de: DEConfig, strategy: AdaptationStrategy, seed: int) -> FrameworkConfig:
        return FrameworkConfig(
            total_iterations=self.total_iterations,
            de=de,
            strategy=strategy,
            sensor_tolerance=self.sensor_tolerance,
            sentinel_count=self.sentinel_count,
            feedback_enabled=self.feedback_enabled,
            seed=seed,
            recovery_target=self.recovery_target,
            recovery_band=self.recovery_band,
            snapshot_stride=self.snapshot_stride,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_iterations": self.total_iterations,
            "sensor_tolerance": self.sensor_tolerance,
            "sentinel_count": self.sentinel_count,
            "feedback_enabled": self.feedback_enabled,
            "recovery_target": self.recovery_target,
            "recovery_band": self.recovery_band,
            "snapshot_stride": self.snapshot_stride,
        }


@dataclass(frozen=True, slots=True)
class DESettings:
    """``population_size = None`` means 10 members per dimension, capped at 100."""
    population_size: int | None = None
    mutation_factor: MutationFactor = DEFAULT_MUTATION_FACTOR
    crossover_rate: float = DEFAULT_CROSSOVER_RATE
    variant: DEVariant = DEVariant.RAND1BIN

    def population_for(self, dimension: int) -> int:
        if self.population_size is None:
            return default_population_size(dimension)
        return self.population_size

    def build(self, dimension: int) -> DEConfig:
        return DEConfig(
            population_size=self.population_for(dimension),
            mutation_factor=self.mutation_factor,
            crossover_rate=self.crossover_rate,
            variant=self.variant,
        )

    def to_dict(self) -> dict[str, Any]:
        mutation = list(self.mutation_factor) if isinstance(self.mutation_factor, tuple) else self.mutation_factor
        return {
            "population_size": self.population_size,
            "mutation_factor": mutation,
            "crossover_rate": self.crossover_rate,
            "variant": str(self.variant),
        }


@dataclass(frozen=True, slots=True)
class StrategySettings:
    kind: StrategyKind = StrategyKind.HYBRID
    reinit_fraction: float = DEFAULT_REINIT_FRACTION
    local_search_budget: int = DEFAULT_LOCAL_SEARCH_BUDGET
    dither: tuple[float, float] = DEFAULT_DITHER
    crossover_rate: float = DEFAULT_CROSSOVER_RATE

    def build(self) -> AdaptationStrategy:
        return AdaptationStrategy(
            kind=self.kind,
            reinit_fraction=self.reinit_fraction,
            local_search_config=DEConfig(
                variant=DEVariant.BEST1BIN,
                mutation_factor=self.dither,
                crossover_rate=self.crossover_rate,
            ),
            local_search_budget=self.local_search_budget,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": str(self.kind),
            "reinit_fraction": self.reinit_fraction,
            "local_search_budget": self.local_search_budget,
            "dither": list(self.dither),
            "crossover_rate": self.crossover_rate,
        }


def baseline_kind(settings: BaselineSettings) -> BaselineKind:
    return BaselineKind.DUAL_ANNEALING if isinstance(settings, AnnealConfig) else BaselineKind.BASIN_HOPPING


def _baseline_dict(settings: BaselineSettings) -> dict[str, Any]:
    values = {"kind": str(baseline_kind(settings))}
    values.update({name: getattr(settings, name) for name in settings.__dataclass_fields__})
    return values


@dataclass(frozen=True, slots=True)
class ExperimentSpec:
    """
    One experiment: every competitor (strategy or baseline) runs once per seed and dimension,
    all of them on the same problem instance for a given seed.
    """
    name: str
    seeds: tuple[int, ...]
    problem: ProblemSettings
    output_directory: str = DEFAULT_OUTPUT_DIRECTORY
    framework: FrameworkSettings = field(default_factory=FrameworkSettings)
    de: DESettings = field(default_factory=DESettings)
    strategies: tuple[StrategySettings, ...] = ()
    baselines: tuple[BaselineSettings, ...] = ()

    @property
    def experiment_directory(self) -> Path:
        return Path(self.output_directory) / self.name

    def competitors(self) -> list[tuple[str, StrategySettings | BaselineSettings]]:
        """Competitor names in spec order; a repeated kind gets a numeric suffix."""
        named = []
        used: dict[str, int] = {}
        for entry in (*self.strategies, *self.baselines):
            kind = str(entry.kind) if isinstance(entry, StrategySettings) else str(baseline_kind(entry))
            used[kind] = used.get(kind, 0) + 1
            named.append((kind if used[kind] == 1 else f"{kind}_{used[kind]}", entry))
        return named

    def with_output_directory(self, directory: Path | str) -> "ExperimentSpec":
        return replace(self, output_directory=str(directory))

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "seeds": list(self.seeds),
            "output_directory": self.output_directory,
            "problem": self.problem.to_dict(),
            "framework": self.framework.to_dict(),
            "de": self.de.to_dict(),
            "strategies": [s.to_dict() for s in self.strategies],
            "baselines": [_baseline_dict(b) for b in self.baselines],
        }


_REQUIRED = object()


def _key_lines(text: str) -> dict[str, int]:
    """Maps dotted key paths (``strategies[0].kind``) to 1-based source lines."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as ex:
        mark = getattr(ex, "problem_mark", None)
        raise SpecError(f"Malformed YAML: {getattr(ex, 'problem', ex)}", line=mark.line + 1 if mark else None) from ex

    lines: dict[str, int] = {}

    def walk(node: yaml.Node, path: str):
        lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            seen = set()
            for key_node, value_node in node.value:
                child = f"{path}.{key_node.value}" if path else str(key_node.value)
                if key_node.value in seen:
                    raise SpecError("Duplicate key", child, key_node.start_mark.line + 1)
                seen.add(key_node.value)
                lines[child] = key_node.start_mark.line + 1
                walk(value_node, child)
        elif isinstance(node, yaml.SequenceNode):
            for i, item in enumerate(node.value):
                walk(item, f"{path}[{i}]")

    if root is not None:
        walk(root, "")
    return lines


class _Section:
    """Typed access to one mapping of the spec; remembers which keys were consumed."""
    __slots__ = ("data", "path", "lines", "_seen")

    def __init__(self, data: Any, path: str, lines: dict[str, int]):
        self.path = path
        self.lines = lines
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise self.error("Expected a mapping")
        self.data = data
        self._seen: set[str] = set()

    def where(self, key: str | None = None) -> str:
        if key is None:
            return self.path
        return f"{self.path}.{key}" if self.path else key

    def error(self, message: str, key: str | None = None) -> SpecError:
        path = self.where(key)
        line = self.lines.get(path, self.lines.get(self.path))
        return SpecError(message, path, line)

    def raw(self, key: str, default: Any = _REQUIRED) -> Any:
        self._seen.add(key)
        if key not in self.data:
            if default is _REQUIRED:
                raise self.error("Missing required key", key)
            return default
        return self.data[key]

    def integer(self, key: str, default: Any = _REQUIRED, minimum: int | None = None, nullable: bool = False) -> int | None:
        value = self.raw(key, default)
        if value is None and nullable:
            return None
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.error(f"Expected an integer, got {value!r}", key)
        if minimum is not None and value < minimum:
            raise self.error(f"Must be >= {minimum}", key)
        return value

    def real(self, key: str, default: Any = _REQUIRED) -> float:
        return self._to_real(self.raw(key, default), key)

    def _to_real(self, value: Any, key: str) -> float:
        # PyYAML reads exponent literals without a dot (1e-12) as strings
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"Expected a number, got {value!r}", key)
        return float(value)

    def interval(self, key: str, default: Any = _REQUIRED) -> tuple[float, float]:
        value = self.raw(key, default)
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise self.error(f"Expected a [low, high] pair, got {value!r}", key)
        low, high = (self._to_real(v, key) for v in value)
        return low, high

    def boolean(self, key: str, default: Any = _REQUIRED) -> bool:
        value = self.raw(key, default)
        if not isinstance(value, bool):
            raise self.error(f"Expected true or false, got {value!r}", key)
        return value

    def text(self, key: str, default: Any = _REQUIRED) -> str:
        value = self.raw(key, default)
        if not isinstance(value, str) or not value:
            raise self.error(f"Expected a non-empty string, got {value!r}", key)
        return value

    def section(self, key: str) -> "_Section":
        return _Section(self.raw(key, None), self.where(key), self.lines)

    def sections(self, key: str) -> list["_Section"]:
        value = self.raw(key, [])
        if value is None:
            value = []
        if not isinstance(value, list):
            raise self.error("Expected a list", key)
        return [_Section(item, f"{self.where(key)}[{i}]", self.lines) for i, item in enumerate(value)]

    def finish(self):
        for key in self.data:
            if key not in self._seen:
                raise self.error("Unknown key", str(key))

    @contextmanager
    def validating(self, key: str | None = None) -> Iterator[None]:
        """Re-raises domain validation errors anchored at `key`."""
        try:
            yield
        except SpecError:
            raise
        except AMFError as ex:
            raise self.error(str(ex), key) from ex


def _parse_problem(section: _Section) -> ProblemSettings:
    raw_dimension = section.raw("dimension")
    dimensions = raw_dimension if isinstance(raw_dimension, list) else [raw_dimension]
    if not dimensions:
        raise section.error("Dimension list is empty", "dimension")
    for d in dimensions:
        if isinstance(d, bool) or not isinstance(d, int) or d < 1:
            raise section.error(f"Dimensions must be positive integers, got {d!r}", "dimension")
    if len(set(dimensions)) != len(dimensions):
        raise section.error("Dimension list has duplicates", "dimension")

    problem = ProblemSettings(
        dimensions=tuple(dimensions),
        lower=section.real("lower", DEFAULT_LOWER),
        upper=section.real("upper", DEFAULT_UPPER),
        change_frequency=section.integer("change_frequency", DEFAULT_CHANGE_FREQUENCY),
        change_severity=section.real("change_severity", DEFAULT_CHANGE_SEVERITY),
        total_changes_cap=section.integer("total_changes_cap", None, nullable=True),
    )
    with section.validating():
        problem.schedule()
        problem.bounds(dimensions[0])
    section.finish()
    return problem


def _parse_framework(section: _Section) -> FrameworkSettings:
    framework = FrameworkSettings(
        total_iterations=section.integer("total_iterations", DEFAULT_TOTAL_ITERATIONS),
        sensor_tolerance=section.real("sensor_tolerance", DEFAULT_SENSOR_TOLERANCE),
        sentinel_count=section.integer("sentinel_count", DEFAULT_SENTINEL_COUNT),
        feedback_enabled=section.boolean("feedback_enabled", False),
        recovery_target=section.integer("recovery_target", DEFAULT_RECOVERY_TARGET),
        recovery_band=section.real("recovery_band", DEFAULT_RECOVERY_BAND),
        snapshot_stride=section.integer("snapshot_stride", DEFAULT_SNAPSHOT_STRIDE),
    )
    with section.validating():
        framework.build(DEConfig(), AdaptationStrategy(), seed=0)
    section.finish()
    return framework


def _parse_de(section: _Section, dimensions: tuple[int, ...]) -> DESettings:
    raw_mutation = section.raw("mutation_factor", DEFAULT_MUTATION_FACTOR)
    if isinstance(raw_mutation, list):
        mutation_factor: MutationFactor = section.interval("mutation_factor")
    else:
        mutation_factor = section.real("mutation_factor", DEFAULT_MUTATION_FACTOR)

    with section.validating("variant"):
        variant = DEConfig(variant=section.text("variant", str(DEVariant.RAND1BIN))).variant

    de = DESettings(
        population_size=section.integer("population_size", None, nullable=True),
        mutation_factor=mutation_factor,
        crossover_rate=section.real("crossover_rate", DEFAULT_CROSSOVER_RATE),
        variant=variant,
    )
    with section.validating():
        for d in dimensions:
            de.build(d)
    section.finish()
    return de


def _parse_strategy(section: _Section) -> StrategySettings:
    kind = section.text("kind")
    try:
        kind = StrategyKind(kind)
    except ValueError:
        raise section.error(
            f"Unknown strategy {kind!r}, expected one of: {', '.join(k.value for k in StrategyKind)}", "kind"
        ) from None

    strategy = StrategySettings(
        kind=kind,
        reinit_fraction=section.real("reinit_fraction", DEFAULT_REINIT_FRACTION),
        local_search_budget=section.integer("local_search_budget", DEFAULT_LOCAL_SEARCH_BUDGET),
        dither=section.interval("dither", list(DEFAULT_DITHER)),
        crossover_rate=section.real("crossover_rate", DEFAULT_CROSSOVER_RATE),
    )
    with section.validating():
        strategy.build()
    section.finish()
    return strategy


def _parse_baseline(section: _Section) -> BaselineSettings:
    kind = section.text("kind")
    try:
        kind = BaselineKind(kind)
    except ValueError:
        raise section.error(
            f"Unknown baseline {kind!r}, expected one of: {', '.join(k.value for k in BaselineKind)}", "kind"
        ) from None

    config_type = _BASELINE_TYPES[kind]
    defaults = config_type()
    values = {}
    for name in config_type.__dataclass_fields__:
        default = getattr(defaults, name)
        if isinstance(default, int):
            values[name] = section.integer(name, default)
        else:
            values[name] = section.real(name, default)

    with section.validating():
        baseline = config_type(**values)
    section.finish()
    return baseline


def parse_spec(text: str) -> ExperimentSpec:
    """
    Parses and validates a YAML experiment spec, filling every omitted key with its default.

    :raises SpecError: with the offending key path and line
    """
    lines = _key_lines(text)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as ex:
        raise SpecError(f"Malformed YAML: {ex}") from ex
    root = _Section(data, "", lines)

    name = root.text("name")
    raw_seeds = root.raw("seeds")
    if not isinstance(raw_seeds, list) or not raw_seeds:
        raise root.error("Expected a non-empty list of seeds", "seeds")
    for seed in raw_seeds:
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise root.error(f"Seeds must be non-negative integers, got {seed!r}", "seeds")
    if len(set(raw_seeds)) != len(raw_seeds):
        raise root.error("Seed list has duplicates", "seeds")

    output_directory = root.text("output_directory", DEFAULT_OUTPUT_DIRECTORY)
    problem = _parse_problem(root.section("problem"))
    framework = _parse_framework(root.section("framework"))
    de = _parse_de(root.section("de"), problem.dimensions)
    strategies = tuple(_parse_strategy(s) for s in root.sections("strategies"))
    baselines = tuple(_parse_baseline(b) for b in root.sections("baselines"))
    if not strategies and not baselines:
        raise root.error("At least one strategy or baseline is required", "strategies")
    root.finish()

    return ExperimentSpec(
        name=name,
        seeds=tuple(raw_seeds),
        problem=problem,
        output_directory=output_directory,
        framework=framework,
        de=de,
        strategies=strategies,
        baselines=baselines,
    )


def load_spec(path: Path | str) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as ex:
        raise SpecError(f"Cannot read spec: {ex.strerror}") from ex
    return parse_spec(text)


def describe(spec: ExperimentSpec) -> str:
    """Resolved spec as YAML; parsing the result gives back an equal spec."""
    return yaml.safe_dump(spec.to_dict(), sort_keys=False, default_flow_style=None)


@dataclass(frozen=True, slots=True)
class SpecListing:
    path: Path
    spec: ExperimentSpec | None = None
    error: str | None = None


def list_experiments(directory: Path | str) -> list[SpecListing]:
    """
    Parses every spec file in `directory`. Files that fail validation, or reuse an experiment
    name within the same output directory, are listed with an error instead of a spec.
    """
    directory = Path(directory)
    listings = []
    taken: dict[tuple[str, str], Path] = {}
    for path in sorted(p for p in directory.iterdir() if p.suffix in SPEC_SUFFIXES):
        try:
            spec = load_spec(path)
        except SpecError as ex:
            listings.append(SpecListing(path, error=ex.render(str(path))))
            continue

        key = (str(Path(spec.output_directory)), spec.name)
        if key in taken:
            listings.append(SpecListing(path, error=f"experiment name {spec.name!r} already used by {taken[key].name}"))
            continue
        taken[key] = path
        listings.append(SpecListing(path, spec=spec))
    return listings
