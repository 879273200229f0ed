"""
Run history: one IterationRecord per framework iteration plus the change record,
and its lossless CSV/JSON export.

history.csv columns, in order:
    t, current_best_fitness, best_so_far_fitness, cumulative_best_fitness,
    population_mean_fitness, best_x1, best_x2, change_flag,
    optimum_1 .. optimum_D, best_1 .. best_D

``change_flag`` is written as 0/1 and ``best_j`` cells are empty on rows between snapshot strides.
"""
from __future__ import annotations

import json
import hashlib
import logging
import dataclasses

from pathlib import Path
from typing import Any
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .problem import DynamicProblem
from .exceptions import EventNotInHistory
from .constants import DEFAULT_SNAPSHOT_STRIDE, FLOAT_FORMAT
from .models import (
    BoxBounds,
    ChangeEvent,
    IterationRecord,
    Population,
    ScheduledChange,
    SolutionVector,
)


logger = logging.getLogger(__name__)

HISTORY_CSV = "history.csv"
HISTORY_JSON = "history.json"

BASE_COLUMNS = [
    "t",
    "current_best_fitness",
    "best_so_far_fitness",
    "cumulative_best_fitness",
    "population_mean_fitness",
    "best_x1",
    "best_x2",
    "change_flag",
]


def config_fingerprint(*parts: Any) -> str:
    """Stable hash of configuration objects (dataclasses, dicts, scalars) and the seed."""
    def normalize(obj: Any) -> Any:
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: normalize(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, dict):
            return {str(k): normalize(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [normalize(v) for v in obj]
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        return obj

    payload = json.dumps([normalize(p) for p in parts], sort_keys=True, default=str)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(slots=True)
class RunHistory:
    """
    Everything recorded during one run.

    Attributes:
        rows: One record per iteration, in order.
        change_events: Changes reported by the sensor, strictly increasing in time.
        scheduled_changes: Ground-truth shifts made by the generator.
        final_best: Best solution of the last population and its fitness.
        valid: False when the run was aborted; rows then hold the partial run.
    """
    dimension: int
    bounds: BoxBounds
    config_fingerprint: str = ""
    snapshot_stride: int = DEFAULT_SNAPSHOT_STRIDE
    rows: list[IterationRecord] = field(default_factory=list)
    change_events: list[ChangeEvent] = field(default_factory=list)
    scheduled_changes: list[ScheduledChange] = field(default_factory=list)
    final_best: SolutionVector | None = None
    final_best_fitness: float | None = None
    evaluation_count: int = 0
    sensing_evaluations: int = 0
    valid: bool = True
    error: str | None = None

    def add_change(self, event: ChangeEvent):
        if self.change_events and event.detected_at <= self.change_events[-1].detected_at:
            raise ValueError("Change events must be strictly increasing in time.")
        self.change_events.append(event)

    def row_index(self, t: int) -> int:
        """Position of the row recorded at iteration t."""
        if not self.rows:
            raise EventNotInHistory("History is empty.")
        index = t - self.rows[0].t
        if index < 0 or index >= len(self.rows) or self.rows[index].t != t:
            raise EventNotInHistory(f"No row for iteration {t}")
        return index

    def series(self, name: str) -> np.ndarray:
        """One column of the rows as an array, e.g. ``series('current_best_fitness')``."""
        return np.array([getattr(row, name) for row in self.rows])

    def optimum_matrix(self) -> np.ndarray:
        return np.vstack([row.optimum_snapshot for row in self.rows])

    def finish(self, pop: Population, problem: DynamicProblem, sensing_evaluations: int = 0):
        self.final_best = pop.best.copy()
        self.final_best_fitness = pop.best_fitness
        self.evaluation_count = problem.evaluations
        self.sensing_evaluations = sensing_evaluations
        self.scheduled_changes = problem.changes

    def to_frame(self) -> pd.DataFrame:
        d = self.dimension
        columns: dict[str, Any] = {name: self.series(name) for name in BASE_COLUMNS}
        columns["t"] = columns["t"].astype(np.int64)
        columns["change_flag"] = columns["change_flag"].astype(np.int64)

        optimum = self.optimum_matrix() if self.rows else np.empty((0, d))
        best = np.full((len(self.rows), d), np.nan)
        for i, row in enumerate(self.rows):
            if row.best_solution_snapshot is not None:
                best[i] = row.best_solution_snapshot

        for j in range(d):
            columns[f"optimum_{j + 1}"] = optimum[:, j]
        for j in range(d):
            columns[f"best_{j + 1}"] = best[:, j]
        return pd.DataFrame(columns)

    def envelope(self) -> dict[str, Any]:
        return {
            "config_fingerprint": self.config_fingerprint,
            "dimension": self.dimension,
            "bounds": {"lower": self.bounds.lower.tolist(), "upper": self.bounds.upper.tolist()},
            "snapshot_stride": self.snapshot_stride,
            "iterations": len(self.rows),
            "evaluation_count": self.evaluation_count,
            "sensing_evaluations": self.sensing_evaluations,
            "valid": self.valid,
            "error": self.error,
            "final_best": None if self.final_best is None else self.final_best.tolist(),
            "final_best_fitness": self.final_best_fitness,
            "change_events": [dataclasses.asdict(e) for e in self.change_events],
            "scheduled_changes": [dataclasses.asdict(c) for c in self.scheduled_changes],
        }


def record_iteration(
        history: RunHistory,
        pop: Population,
        problem: DynamicProblem,
        t: int,
        changed: bool
) -> RunHistory:
    """Appends one IterationRecord built from the population's cached fitness."""
    best = pop.best
    current = pop.best_fitness
    previous = history.rows[-1] if history.rows else None

    window_best = current if previous is None or changed else min(previous.best_so_far_fitness, current)
    cumulative = current if previous is None else min(previous.cumulative_best_fitness, current)

    history.rows.append(IterationRecord(
        t=t,
        current_best_fitness=current,
        best_so_far_fitness=window_best,
        cumulative_best_fitness=cumulative,
        population_mean_fitness=pop.mean_fitness,
        best_x1=float(best[0]),
        best_x2=float(best[1]) if best.shape[0] > 1 else float("nan"),
        change_flag=bool(changed),
        optimum_snapshot=problem.optimum_at(t).copy(),
        best_solution_snapshot=best.copy() if t % history.snapshot_stride == 0 else None,
    ))
    return history


def write_history(history: RunHistory, directory: Path | str) -> tuple[Path, Path]:
    """Writes history.csv (17 significant digits) and history.json into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / HISTORY_CSV
    json_path = directory / HISTORY_JSON

    history.to_frame().to_csv(csv_path, index=False, float_format=FLOAT_FORMAT)
    json_path.write_text(json.dumps(history.envelope(), indent=2) + "\n")
    logger.debug("History written to %s", directory)
    return csv_path, json_path


def read_history(directory: Path | str) -> RunHistory:
    """Inverse of `write_history`."""
    directory = Path(directory)
    envelope = json.loads((directory / HISTORY_JSON).read_text())
    frame = pd.read_csv(directory / HISTORY_CSV, float_precision="round_trip")

    d = envelope["dimension"]
    optimum = frame[[f"optimum_{j + 1}" for j in range(d)]].to_numpy(dtype=np.float64)
    best = frame[[f"best_{j + 1}" for j in range(d)]].to_numpy(dtype=np.float64)

    rows = []
    for i, record in enumerate(frame.itertuples(index=False)):
        snapshot = None if np.all(np.isnan(best[i])) else best[i].copy()
        rows.append(IterationRecord(
            t=int(record.t),
            current_best_fitness=float(record.current_best_fitness),
            best_so_far_fitness=float(record.best_so_far_fitness),
            cumulative_best_fitness=float(record.cumulative_best_fitness),
            population_mean_fitness=float(record.population_mean_fitness),
            best_x1=float(record.best_x1),
            best_x2=float(record.best_x2),
            change_flag=bool(record.change_flag),
            optimum_snapshot=optimum[i].copy(),
            best_solution_snapshot=snapshot,
        ))

    final_best = envelope["final_best"]
    return RunHistory(
        dimension=d,
        bounds=BoxBounds(envelope["bounds"]["lower"], envelope["bounds"]["upper"]),
        config_fingerprint=envelope["config_fingerprint"],
        snapshot_stride=envelope["snapshot_stride"],
        rows=rows,
        change_events=[ChangeEvent(**e) for e in envelope["change_events"]],
        scheduled_changes=[ScheduledChange(**c) for c in envelope["scheduled_changes"]],
        final_best=None if final_best is None else np.array(final_best, dtype=np.float64),
        final_best_fitness=envelope["final_best_fitness"],
        evaluation_count=envelope["evaluation_count"],
        sensing_evaluations=envelope["sensing_evaluations"],
        valid=envelope["valid"],
        error=envelope["error"],
    )
