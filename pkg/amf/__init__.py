from .framework import AdaptiveFramework, run
from .sensing import ChangeSensor
from .problem import DynamicProblem, make_moving_optimum_problem
from .config import ExperimentSpec, load_spec, parse_spec
from .models import AdaptationStrategy, BoxBounds, ChangeSchedule, DEConfig, FrameworkConfig, StrategyKind

__all__ = [
    "AdaptiveFramework",
    "run",
    "ChangeSensor",
    "DynamicProblem",
    "make_moving_optimum_problem",
    "ExperimentSpec",
    "load_spec",
    "parse_spec",
    "AdaptationStrategy",
    "BoxBounds",
    "ChangeSchedule",
    "DEConfig",
    "FrameworkConfig",
    "StrategyKind",
]
