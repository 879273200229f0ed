"""
Experiment orchestration: expands an ExperimentSpec into one run per
(dimension, competitor, seed), executes them (optionally in a process pool),
writes per-run data files and aggregates the summary table.

Output layout::

    <output_directory>/<name>/
        spec.yaml                  resolved configuration
        summary.csv
        plot_*.gp
        <competitor>/D<d>/seed_<s>/history.csv, history.json, ...
"""
from __future__ import annotations

import gc
import logging

from pathlib import Path
from typing import Any
from multiprocessing import Pool
from dataclasses import dataclass, replace

import numpy as np
import pandas as pd

from . import plots
from .framework import recovery_time, run
from .exceptions import EventNotInHistory, SpecError
from .baselines import anneal, basin_hop
from .problem import DynamicProblem, make_moving_optimum_problem
from .history import RunHistory, config_fingerprint, write_history
from .constants import (
    DENSITY_CSV,
    FITNESS_DISTRIBUTION_CSV,
    FLOAT_FORMAT,
    HEATMAP_CSV,
    KDE_CSV,
    RESOLVED_SPEC,
    SMOOTHED_CSV,
    SUMMARY_CSV,
    TRACE_CSV,
    TRAJECTORY_CSV,
)
from .config import BaselineSettings, ExperimentSpec, StrategySettings, describe, parse_spec
from .metrics import (
    distance_to_optimum,
    solution_trajectory,
    write_density,
    write_fitness_distribution,
    write_fitness_kde,
    write_heatmap,
    write_smoothed_fitness,
)
from .models import AnnealConfig, BaselineResult, IterationRecord


logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = [
    "experiment",
    "competitor",
    "dimension",
    "runs",
    "failed",
    "end_error_median",
    "end_error_iqr",
    "final_fitness_median",
    "recovery_mean",
    "censored_recoveries",
    "evaluations_mean",
    "sensing_evaluations_mean",
]


@dataclass(frozen=True, slots=True)
class RunTask:
    spec: ExperimentSpec
    competitor: str
    settings: StrategySettings | BaselineSettings
    dimension: int
    seed: int

    @property
    def directory(self) -> Path:
        return self.spec.experiment_directory / self.competitor / f"D{self.dimension}" / f"seed_{self.seed}"


@dataclass(frozen=True, slots=True)
class ExperimentResult:
    summary: pd.DataFrame
    runs: pd.DataFrame

    @property
    def failed_runs(self) -> int:
        return int((~self.runs["valid"]).sum())


def build_tasks(spec: ExperimentSpec) -> list[RunTask]:
    return [
        RunTask(spec, competitor, settings, dimension, seed)
        for dimension in spec.problem.dimensions
        for competitor, settings in spec.competitors()
        for seed in spec.seeds
    ]


def make_problem(spec: ExperimentSpec, dimension: int, seed: int) -> DynamicProblem:
    """The problem instance every competitor faces for this (dimension, seed)."""
    return make_moving_optimum_problem(
        dimension,
        bounds=spec.problem.bounds(dimension),
        schedule=spec.problem.schedule(),
        seed=seed,
    )


def evaluation_budget(spec: ExperimentSpec, dimension: int) -> int:
    """Objective calls a baseline gets: the search generations of a framework run times N."""
    return spec.framework.total_iterations * spec.de.population_for(dimension)


def baseline_history(
        result: BaselineResult,
        problem: DynamicProblem,
        total_iterations: int,
        evaluations_per_iteration: int,
        snapshot_stride: int,
        fingerprint: str = ""
) -> RunHistory:
    """
    Spreads a baseline's best-so-far trace over framework iterations (row t reads evaluation
    ``t * N - 1``) and advances `problem` to fill in the true optimum, so baseline histories
    share the framework schema.
    """
    history = RunHistory(
        dimension=problem.dimension,
        bounds=problem.bounds,
        config_fingerprint=fingerprint,
        snapshot_stride=snapshot_stride,
    )
    for t in range(1, total_iterations + 1):
        problem.advance_clock()
        index = t * evaluations_per_iteration - 1
        fitness = float(result.trace[min(index, result.trace.size - 1)])
        best = result.best_at(index)
        history.rows.append(IterationRecord(
            t=t,
            current_best_fitness=fitness,
            best_so_far_fitness=fitness,
            cumulative_best_fitness=fitness,
            population_mean_fitness=fitness,
            best_x1=float(best[0]),
            best_x2=float(best[1]) if best.shape[0] > 1 else float("nan"),
            change_flag=False,
            optimum_snapshot=problem.optimum_at(t).copy(),
            best_solution_snapshot=best.copy() if t % snapshot_stride == 0 else None,
        ))

    history.final_best = result.best.copy()
    history.final_best_fitness = result.best_fitness
    history.evaluation_count = result.evaluations
    history.scheduled_changes = problem.changes
    return history


def _run_framework(task: RunTask) -> tuple[RunHistory, list[Any]]:
    spec = task.spec
    problem = make_problem(spec, task.dimension, task.seed)
    config = spec.framework.build(spec.de.build(task.dimension), task.settings.build(), task.seed)
    history = run(problem, config)

    recoveries = []
    for event in history.change_events:
        try:
            recoveries.append(recovery_time(history, event, spec.framework.recovery_band))
        except EventNotInHistory:
            logger.debug("No recovery window for the change at t=%d", event.detected_at)

    directory = task.directory
    write_history(history, directory)
    solution_trajectory(history).to_csv(directory / TRAJECTORY_CSV, index=False, float_format=FLOAT_FORMAT)
    write_heatmap(history, directory / HEATMAP_CSV)
    write_fitness_distribution(history, directory / FITNESS_DISTRIBUTION_CSV)
    write_smoothed_fitness(history, directory / SMOOTHED_CSV)
    try:
        write_fitness_kde(history, directory / KDE_CSV)
    except ValueError as ex:
        logger.debug("No fitness density for %s D=%d seed=%d: %s", task.competitor, task.dimension, task.seed, ex)
    if task.dimension >= 2:
        write_density(history, directory / DENSITY_CSV)
    return history, recoveries


def _run_baseline(task: RunTask) -> RunHistory:
    spec = task.spec
    problem = make_problem(spec, task.dimension, task.seed)
    budget = evaluation_budget(spec, task.dimension)
    population = spec.de.population_for(task.dimension)

    if isinstance(task.settings, AnnealConfig):
        result = anneal(problem, replace(task.settings, steps=budget - 1), task.seed, horizon=budget)
    else:
        result = basin_hop(problem, task.settings, task.seed, horizon=budget, max_evaluations=budget)

    history = baseline_history(
        result,
        problem,
        spec.framework.total_iterations,
        population,
        spec.framework.snapshot_stride,
        fingerprint=config_fingerprint(task.settings, spec.problem, task.dimension, task.seed),
    )
    write_history(history, task.directory)
    pd.DataFrame({
        "evaluation": np.arange(1, result.trace.size + 1),
        "best_so_far_fitness": result.trace,
    }).to_csv(task.directory / TRACE_CSV, index=False, float_format=FLOAT_FORMAT)
    return history


def execute_task(task: RunTask) -> dict[str, Any]:
    """Runs one competitor on one problem instance; never raises, failures come back as ``valid=False``."""
    logger.info("Running %s D=%d seed=%d", task.competitor, task.dimension, task.seed)
    record: dict[str, Any] = {
        "competitor": task.competitor,
        "dimension": task.dimension,
        "seed": task.seed,
        "valid": False,
        "error": None,
        "end_error": np.nan,
        "final_fitness": np.nan,
        "recovery_mean": np.nan,
        "censored_recoveries": 0,
        "evaluations": 0,
        "sensing_evaluations": 0,
    }
    try:
        if isinstance(task.settings, StrategySettings):
            history, recoveries = _run_framework(task)
            if recoveries:
                record["recovery_mean"] = float(np.mean([r.iterations for r in recoveries]))
                record["censored_recoveries"] = sum(r.censored for r in recoveries)
        else:
            history = _run_baseline(task)
    except Exception as ex:
        logger.exception("Run %s D=%d seed=%d failed", task.competitor, task.dimension, task.seed)
        record["error"] = f"{type(ex).__name__}: {ex}"
        return record

    record.update({
        "valid": history.valid,
        "error": history.error,
        "final_fitness": history.final_best_fitness if history.final_best_fitness is not None else np.nan,
        "end_error": distance_to_optimum(history) if history.final_best is not None else np.nan,
        "evaluations": history.evaluation_count,
        "sensing_evaluations": history.sensing_evaluations,
    })
    gc.collect()
    return record


def summarize(spec: ExperimentSpec, runs: pd.DataFrame) -> pd.DataFrame:
    """One row per (competitor, dimension), competitors in spec order."""
    def iqr(values: pd.Series) -> float:
        return float(values.quantile(0.75) - values.quantile(0.25))

    summary = (
        runs.assign(failed=~runs["valid"])
        .groupby(["competitor", "dimension"], sort=False)
        .agg(
            runs=("seed", "count"),
            failed=("failed", "sum"),
            end_error_median=("end_error", "median"),
            end_error_iqr=("end_error", iqr),
            final_fitness_median=("final_fitness", "median"),
            recovery_mean=("recovery_mean", "mean"),
            censored_recoveries=("censored_recoveries", "sum"),
            evaluations_mean=("evaluations", "mean"),
            sensing_evaluations_mean=("sensing_evaluations", "mean"),
        )
        .reset_index()
    )
    summary.insert(0, "experiment", spec.name)
    return summary[SUMMARY_COLUMNS]


def _claim_directory(spec: ExperimentSpec):
    """Creates the experiment directory, refusing one that holds a different experiment of the same name."""
    directory = spec.experiment_directory
    resolved = describe(spec)
    existing = directory / RESOLVED_SPEC
    if existing.exists() and parse_spec(existing.read_text()) != spec:
        raise SpecError(
            f"Experiment name already used in {spec.output_directory} with a different configuration", "name"
        )
    directory.mkdir(parents=True, exist_ok=True)
    existing.write_text(resolved)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """
    Executes every run of `spec` and writes all output files.

    :param spec: Validated experiment
    :param jobs: Worker processes; 1 runs everything in this process

    :raises SpecError: if the experiment directory belongs to a different spec
    """
    _claim_directory(spec)
    tasks = build_tasks(spec)
    logger.info("Experiment %s: %d runs on %d worker(s)", spec.name, len(tasks), jobs)

    if jobs > 1:
        with Pool(processes=jobs) as pool:
            records = pool.map(execute_task, tasks)
    else:
        records = [execute_task(task) for task in tasks]

    runs = pd.DataFrame(records)
    summary = summarize(spec, runs)
    summary.to_csv(spec.experiment_directory / SUMMARY_CSV, index=False, float_format=FLOAT_FORMAT)
    plots.write_scripts(spec, tasks)

    result = ExperimentResult(summary=summary, runs=runs)
    if result.failed_runs:
        logger.error("Experiment %s: %d of %d runs failed", spec.name, result.failed_runs, len(tasks))
    else:
        logger.info("Experiment %s finished, results in %s", spec.name, spec.experiment_directory)
    return result
