# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Main module for the robust policy command line."""

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from scripts.common.config import InvalidConfigError
from scripts.robust_policy.config import Config, RobustPolicyConfig
from scripts.robust_policy.constants import ROUNDING_TRIALS
from scripts.robust_policy.instance_generator import (
    Family,
    InvalidSpecError,
    gen_instance,
    make_spec,
)
from scripts.robust_policy.model.instance_file import (
    InstanceFileError,
    dump_instance_file,
    load_instance_file,
)
from scripts.robust_policy.reporter.base_reporter import ReporterError
from scripts.robust_policy.reporter.bench_reporter import BenchReporter, BenchRow
from scripts.robust_policy.reporter.run_reporter import GapRecord, SolveRecord
from scripts.robust_policy.runner import Method, run_bench, run_gap_demo, run_method

logger = logging.getLogger(__name__)

LOG_ENV_VAR = "ARO_LOG"


def configure_logging() -> None:
    """Configure the root logger from `ARO_LOG`, WARNING when unset or unknown."""
    level_name = os.environ.get(LOG_ENV_VAR, "WARNING").upper()
    level = logging.getLevelNamesMapping().get(level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(asctime)s - %(levelname)s - %(message)s")


def cmd_gen(family: str, m: int, seed: int, out_path: Path) -> Path:
    """Generate an instance and write it as JSON.

    Args:
        family (str): Family name.
        m (int): Number of components.
        seed (int): Generator seed.
        out_path (Path): Destination file.

    Returns:
        Path: The written file.

    Raises:
        InvalidSpecError: If the family, size or seed is not valid.
        InstanceFileError: If the file cannot be written.
    """
    document = gen_instance(make_spec(family, m, seed))
    dump_instance_file(document, out_path)
    return out_path


def cmd_solve(
    instance_path: Path,
    method: str,
    time_cap: float | None,
    rounding_trials: int = ROUNDING_TRIALS,
) -> SolveRecord:
    """Solve an instance file with one method.

    Args:
        instance_path (Path): Instance JSON file.
        method (str): Method name.
        time_cap (float | None): Seconds allowed for the solve.
        rounding_trials (int): Rounding trials of the construction certificates.

    Returns:
        SolveRecord: The record, failed solves included.

    Raises:
        InstanceFileError: If the file cannot be loaded.
    """
    document = load_instance_file(instance_path)
    return run_method(document, method, time_cap, rounding_trials)


def cmd_bench(
    families: Sequence[str],
    sizes: Sequence[int],
    seeds: int,
    out_csv: Path,
    base_seed: int = 0,
    jobs: int = 1,
    time_cap: float | None = None,
) -> list[BenchRow]:
    """Run the benchmark sweep and write the per-(family, m) table.

    Args:
        families (Sequence[str]): Family names.
        sizes (Sequence[int]): Values of m.
        seeds (int): Seeds per family and size.
        out_csv (Path): Destination CSV.
        base_seed (int): First seed.
        jobs (int): Worker processes.
        time_cap (float | None): Seconds allowed per solve.

    Returns:
        list[BenchRow]: The written rows.

    Raises:
        InvalidSpecError: If a family or size is not valid.
        ReporterError: If the table cannot be written.
    """
    records = run_bench(families, sizes, seeds, base_seed, jobs, time_cap)
    reporter = BenchReporter(records)
    reporter.write_csv(out_csv)
    return reporter.results


def cmd_gap_demo(sizes: Sequence[int], time_cap: float | None = None) -> list[GapRecord]:
    """Solve the lot-sizing family for each size; see `run_gap_demo`."""
    return run_gap_demo(sizes, time_cap)


def build_parser() -> argparse.ArgumentParser:
    """Build the `aro` argument parser with its four subcommands."""
    parser = argparse.ArgumentParser(
        prog="aro", description="Affine and adjustable robust policy tools"
    )
    parser.add_argument("--config", help="Path to the config.ini file", default="config.ini")
    subparsers = parser.add_subparsers(dest="command", required=True)

    gen = subparsers.add_parser("gen", help="Generate an instance file")
    gen.add_argument("--family", choices=[f.value for f in Family], required=True)
    gen.add_argument("--m", type=int, required=True, help="Number of components")
    gen.add_argument("--seed", type=int, default=None, help="Generator seed")
    gen.add_argument("--out", type=Path, default=None, help="Instance JSON to write")

    solve = subparsers.add_parser("solve", help="Solve an instance file")
    solve.add_argument("instance", type=Path, help="Instance JSON to solve")
    solve.add_argument("--method", choices=[m.value for m in Method], required=True)
    solve.add_argument("--time-cap", type=float, default=None, help="Seconds per solve")

    bench = subparsers.add_parser("bench", help="Compare the affine and fast methods")
    bench.add_argument("--family", action="append", default=None, help="Repeat for several")
    bench.add_argument("--m", type=int, nargs="+", default=None, help="Sizes to run")
    bench.add_argument("--seeds", type=int, default=None, help="Seeds per family and size")
    bench.add_argument("--seed", type=int, default=None, help="First seed")
    bench.add_argument("--jobs", type=int, default=None, help="Worker processes")
    bench.add_argument("--time-cap", type=float, default=None, help="Seconds per solve")
    bench.add_argument("--out", type=Path, default=None, help="CSV table to write")

    gap = subparsers.add_parser("gap-demo", help="Show the lot-sizing affine gap")
    gap.add_argument("--m", type=int, nargs="+", default=[4, 6, 8, 10], help="Even sizes")
    gap.add_argument("--time-cap", type=float, default=None, help="Seconds per solve")
    return parser


def _print_json(payload: object) -> None:
    print(json.dumps(payload, indent=2))


def _run_command(args: argparse.Namespace, config: Config) -> None:
    settings: RobustPolicyConfig = config.robust_policy_config
    time_cap = args.time_cap if getattr(args, "time_cap", None) is not None else settings.time_cap
    match args.command:
        case "gen":
            seed = args.seed if args.seed is not None else settings.seed
            out = args.out or Path(config.common_config.instance_dir) / (
                f"{make_spec(args.family, args.m, seed).instance_id}.json"
            )
            path = cmd_gen(args.family, args.m, seed, out)
            logger.info(f"Instance written to {path}")
        case "solve":
            record = cmd_solve(args.instance, args.method, time_cap, settings.rounding_trials)
            _print_json(record.dict_with_fieldnames())
        case "bench":
            rows = cmd_bench(
                args.family or settings.bench_families,
                args.m or settings.bench_sizes,
                args.seeds if args.seeds is not None else settings.bench_seeds,
                args.out or Path(config.common_config.results_dir) / "bench.csv",
                base_seed=args.seed if args.seed is not None else settings.seed,
                jobs=args.jobs if args.jobs is not None else settings.jobs,
                time_cap=time_cap,
            )
            _print_json([row.dict_with_fieldnames() for row in rows])
        case "gap-demo":
            records = cmd_gap_demo(args.m, time_cap)
            _print_json([record.dict_with_fieldnames() for record in records])


def main(argv: Sequence[str] | None = None) -> int:
    """Run the robust policy command line.

    Solver failures are reported inside the printed records; only configuration and file
    errors give a non-zero exit status.

    Args:
        argv (Sequence[str] | None): Arguments, `sys.argv[1:]` when None.

    Returns:
        int: Process exit status.
    """
    configure_logging()
    args = build_parser().parse_args(argv)
    try:
        logger.info(f"Starting {args.command} with configuration file: {args.config}")
        _run_command(args, Config(args.config))
        return 0
    except InvalidConfigError as error:
        logger.error(f"Configuration error: {error}")
    except InvalidSpecError as error:
        logger.error(f"Instance specification error: {error}")
    except InstanceFileError as error:
        logger.error(f"Instance file error: {error}")
    except ReporterError as error:
        logger.error(f"Reporter error: {error}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
