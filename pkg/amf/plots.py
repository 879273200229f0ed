"""
Gnuplot scripts over the CSV files of an experiment. Scripts use paths relative to the
experiment directory, so run them from there: ``gnuplot -p plot_fitness.gp``.
"""
from __future__ import annotations

import logging

from pathlib import Path
from typing import TYPE_CHECKING

from .config import StrategySettings
from .history import HISTORY_CSV
from .constants import (
    DENSITY_CSV,
    FITNESS_DISTRIBUTION_CSV,
    HEATMAP_CSV,
    KDE_CSV,
    SMOOTHED_CSV,
    TRAJECTORY_CSV,
)


if TYPE_CHECKING:
    from .config import ExperimentSpec
    from .experiment import RunTask


logger = logging.getLogger(__name__)

PREAMBLE = """\
set datafile separator ','
set key autotitle columnhead
set grid
"""

# history.csv column numbers
T_COLUMN = 1
CURRENT_BEST_COLUMN = 2
CHANGE_FLAG_COLUMN = 8


def _relative(task: "RunTask", filename: str) -> str:
    return (task.directory / filename).relative_to(task.spec.experiment_directory).as_posix()


def fitness_script(tasks: list["RunTask"]) -> str:
    """Best fitness per iteration of every competitor and dimension, change events marked."""
    curves = []
    for task in tasks:
        path = _relative(task, HISTORY_CSV)
        curves.append(
            f"'{path}' using {T_COLUMN}:{CURRENT_BEST_COLUMN} with lines "
            f"title '{task.competitor} D={task.dimension}'"
        )
        if isinstance(task.settings, StrategySettings):
            curves.append(
                f"'{path}' using {T_COLUMN}:(${CHANGE_FLAG_COLUMN} > 0 ? ${CURRENT_BEST_COLUMN} : 1/0) "
                f"with points pt 7 notitle"
            )
    return (
        PREAMBLE
        + "set logscale y\n"
        + "set xlabel 'Iteration'\n"
        + "set ylabel 'Best fitness'\n"
        + "plot " + ", \\\n     ".join(curves) + "\n"
    )


def history_script(smoothed_path: str, title: str) -> str:
    """Best and mean fitness over time with their centered moving averages."""
    return (
        PREAMBLE
        + "set logscale y\n"
        + "set xlabel 'Iteration'\n"
        + "set ylabel 'Fitness'\n"
        + f"set title '{title}'\n"
        + f"plot '{smoothed_path}' using 1:2 with lines lc rgb '#bbbbbb' title 'best', \\\n"
        + f"     '{smoothed_path}' using 1:3 with lines lw 2 title 'best (smoothed)', \\\n"
        + f"     '{smoothed_path}' using 1:4 with lines lc rgb '#dddddd' title 'mean', \\\n"
        + f"     '{smoothed_path}' using 1:5 with lines lw 2 title 'mean (smoothed)'\n"
    )


def trajectory_script(trajectory_path: str, title: str) -> str:
    return (
        PREAMBLE
        + "set xlabel 'Dimension 1'\n"
        + "set ylabel 'Dimension 2'\n"
        + f"set title '{title}'\n"
        + f"plot '{trajectory_path}' using 2:3 with linespoints pt 7 ps 0.4 title 'best solution'\n"
    )


def heatmap_script(heatmap_path: str, title: str) -> str:
    """Optimum components (rows) against iterations (columns)."""
    return (
        "set datafile separator ','\n"
        + "set xlabel 'Component'\n"
        + "set ylabel 'Iteration'\n"
        + f"set title '{title}'\n"
        + "set palette rgbformulae 33,13,10\n"
        + f"plot '{heatmap_path}' matrix rowheaders columnheaders with image notitle\n"
    )


def density_script(density_path: str, title: str) -> str:
    return (
        "set datafile separator ','\n"
        + "set xlabel 'Dimension 1 bin'\n"
        + "set ylabel 'Dimension 2 bin'\n"
        + f"set title '{title}'\n"
        + f"plot '{density_path}' matrix with image notitle\n"
    )


def distribution_script(distribution_path: str, kde_path: str | None, title: str) -> str:
    """Fitness histogram scaled to a density, with the kernel density estimate drawn over it."""
    curves = [
        f"'{distribution_path}' using (($1+$2)/2):($3/(STATS_sum*($2-$1))):($2-$1) "
        f"with boxes fill solid 0.4 title 'histogram'"
    ]
    if kde_path is not None:
        curves.append(f"'{kde_path}' using 1:2 with lines lw 2 title 'kernel density'")
    return (
        PREAMBLE
        + "set xlabel 'Best fitness'\n"
        + "set ylabel 'Density'\n"
        + f"set title '{title}'\n"
        + f"stats '{distribution_path}' using 3 skip 1 nooutput\n"
        + "plot " + ", \\\n     ".join(curves) + "\n"
    )


def write_scripts(spec: "ExperimentSpec", tasks: list["RunTask"]) -> list[Path]:
    """
    Writes the plot scripts of an experiment for its first seed. The single-run figures
    (history, distribution, trajectory, heatmap, density) use the first framework competitor at the first dimension.
    """
    directory = spec.experiment_directory
    first_seed = [task for task in tasks if task.seed == spec.seeds[0]]
    scripts = {"plot_fitness.gp": fitness_script(first_seed)}

    framework_runs = [task for task in first_seed if isinstance(task.settings, StrategySettings)]
    if framework_runs:
        task = framework_runs[0]
        title = f"{task.competitor} D={task.dimension} seed={task.seed}"
        scripts["plot_history.gp"] = history_script(_relative(task, SMOOTHED_CSV), title)
        scripts["plot_heatmap.gp"] = heatmap_script(_relative(task, HEATMAP_CSV), title)
        kde_path = _relative(task, KDE_CSV) if (task.directory / KDE_CSV).exists() else None
        scripts["plot_distribution.gp"] = distribution_script(
            _relative(task, FITNESS_DISTRIBUTION_CSV), kde_path, title
        )
        if task.dimension >= 2:
            scripts["plot_trajectory.gp"] = trajectory_script(_relative(task, TRAJECTORY_CSV), title)
            scripts["plot_density.gp"] = density_script(_relative(task, DENSITY_CSV), title)

    paths = []
    for filename, content in scripts.items():
        path = directory / filename
        path.write_text(content)
        paths.append(path)
    logger.debug("Plot scripts written: %s", ", ".join(scripts))
    return paths
