from __future__ import annotations

import sys
import logging
import argparse

from pathlib import Path

from .exceptions import SpecError
from .experiment import run_experiment as execute_experiment
from .config import describe as describe_spec, list_experiments, load_spec


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2


def init_logging(verbose: bool) -> logging.Logger:
    """Configures the package logger once; calling it again only changes the level."""
    package_logger = logging.getLogger("amf")
    package_logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    package_logger.propagate = False
    if not package_logger.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("[%(asctime)s] [%(levelname)s] %(name)s: %(message)s", "%H:%M:%S"))
        package_logger.addHandler(handler)
    return package_logger


def run_experiment(spec_path: Path | str, out: Path | str | None = None, jobs: int = 1) -> int:
    """Runs every competitor and seed of a spec file; returns the process exit status."""
    try:
        spec = load_spec(spec_path)
        if out is not None:
            spec = spec.with_output_directory(out)
        result = execute_experiment(spec, jobs=jobs)
    except SpecError as ex:
        logger.error(ex.render(str(spec_path)))
        return EXIT_INVALID
    except Exception:
        logger.exception("Experiment %s failed", spec_path)
        return EXIT_FAILED
    return EXIT_FAILED if result.failed_runs else EXIT_OK


def describe(spec_path: Path | str) -> int:
    """Prints the resolved spec, defaults included. Writes no files."""
    try:
        spec = load_spec(spec_path)
    except SpecError as ex:
        logger.error(ex.render(str(spec_path)))
        return EXIT_INVALID
    print(describe_spec(spec), end="")
    return EXIT_OK


def list_specs(directory: Path | str) -> int:
    directory = Path(directory)
    if not directory.is_dir():
        logger.error("%s is not a directory", directory)
        return EXIT_INVALID

    status = EXIT_OK
    for listing in list_experiments(directory):
        if listing.spec is None:
            logger.error(listing.error)
            print(f"{listing.path.name}: INVALID")
            status = EXIT_INVALID
            continue
        spec = listing.spec
        competitors = ", ".join(name for name, _ in spec.competitors())
        dimensions = ", ".join(str(d) for d in spec.problem.dimensions)
        print(
            f"{listing.path.name}: {spec.name} | D={dimensions} | "
            f"{spec.framework.total_iterations} iterations | {len(spec.seeds)} seed(s) | {competitors}"
        )
    return status


def _positive(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amf",
        description="Adaptive DE framework for dynamic optimization: experiment runner."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging.")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Execute an experiment spec and write its results.")
    run.add_argument("spec", type=Path, help="Path to a YAML experiment spec.")
    run.add_argument("-o", "--out", type=Path, default=None, help="Override the spec's output_directory.")
    run.add_argument("-j", "--jobs", type=_positive, default=1, help="Worker processes (default: 1).")

    show = commands.add_parser("describe", help="Print the resolved spec with every default.")
    show.add_argument("spec", type=Path, help="Path to a YAML experiment spec.")

    listing = commands.add_parser("list", help="Summarize the specs in a directory.")
    listing.add_argument("directory", type=Path, nargs="?", default=Path("experiments"),
                         help="Directory of spec files (default: experiments).")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    init_logging(args.verbose)

    match args.command:
        case "run":
            return run_experiment(args.spec, args.out, args.jobs)
        case "describe":
            return describe(args.spec)
        case _:
            return list_specs(args.directory)
