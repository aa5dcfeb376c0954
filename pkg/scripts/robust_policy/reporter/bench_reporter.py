# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for aggregating benchmark runs per family and size into a CSV table."""

import csv
from pathlib import Path
from statistics import fmean
from typing import Any, Sequence

from pydantic import ValidationError, field_validator

from scripts.robust_policy.constants import BENCH_CSV_FIELDS
from scripts.robust_policy.reporter.base_reporter import (
    BaseReporter,
    ReporterError,
    ReporterResultBase,
    format_time,
)
from scripts.robust_policy.reporter.run_reporter import RunRecord

ERROR_FIELD = "error"


class BenchRow(ReporterResultBase):
    """Averages over the seeds of one family and size.

    Times average the optimal solves of each method; ratios `z_alg / z_aff` cover the seeds
    where both methods solved. `error` summarizes the failed cells.
    """

    family: str
    m: int
    T_aff_s: float | None = None
    T_alg_s: float | None = None
    ratio_mean: float | None = None
    ratio_max: float | None = None
    seeds: int
    error: str | None = None

    @field_validator("T_aff_s", "T_alg_s", "ratio_mean", "ratio_max", "error", mode="before")
    @classmethod
    def _empty_is_none(cls, value: Any) -> Any:
        return None if value == "" else value

    def dict_with_fieldnames(self) -> dict[str, Any]:
        """Convert the row to the CSV columns, empty strings for missing values.

        Returns:
            dict[str, Any]: One entry per CSV column.
        """
        values: dict[str, Any] = {
            "family": self.family,
            "m": self.m,
            "T_aff_s": format_time(self.T_aff_s),
            "T_alg_s": format_time(self.T_alg_s),
            "ratio_mean": self.ratio_mean,
            "ratio_max": self.ratio_max,
            "seeds": self.seeds,
            ERROR_FIELD: self.error,
        }
        return {key: "" if value is None else value for key, value in values.items()}


class BenchReporter(BaseReporter):
    """Groups run records by family and size and writes the benchmark table."""

    def __init__(self, records: Sequence[RunRecord]) -> None:
        """Initialize the reporter with the benchmark cells.

        Args:
            records (Sequence[RunRecord]): One record per (family, m, seed) cell.
        """
        super().__init__()
        self.results: list[BenchRow] = self._parse_results(records)

    @staticmethod
    def _mean_time(records: Sequence[RunRecord], method: str) -> float | None:
        times = [
            record.results[method].time_s
            for record in records
            if method in record.results and record.results[method].is_optimal
        ]
        return fmean(t for t in times if t is not None) if times else None

    def _parse_results(self, records: Sequence[RunRecord]) -> list[BenchRow]:
        groups: dict[tuple[str, int], list[RunRecord]] = {}
        for record in records:
            groups.setdefault((record.family or "", record.m), []).append(record)

        results: list[BenchRow] = []
        for (family, m), cells in sorted(groups.items()):
            ratios = [r for r in (cell.alg_over_aff for cell in cells) if r is not None]
            failures = sorted(
                {
                    f"{method}:{result.error_code}"
                    for cell in cells
                    for method, result in cell.results.items()
                    if not result.is_optimal
                }
            )
            if failures:
                self.logger.warning(f"{family} m={m}: failed cells {', '.join(failures)}")
            results.append(
                BenchRow(
                    family=family,
                    m=m,
                    T_aff_s=self._mean_time(cells, "affine"),
                    T_alg_s=self._mean_time(cells, "fast"),
                    ratio_mean=fmean(ratios) if ratios else None,
                    ratio_max=max(ratios) if ratios else None,
                    seeds=len(cells),
                    error="; ".join(failures) or None,
                )
            )
        return results

    def write_csv(self, path: Path) -> None:
        """Write the table, header first.

        Args:
            path (Path): Destination, parent directories are created.

        Raises:
            ReporterError: If the file cannot be written.
        """
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("w", newline="") as csv_file:
                writer = csv.DictWriter(csv_file, fieldnames=[*BENCH_CSV_FIELDS, ERROR_FIELD])
                writer.writeheader()
                writer.writerows(self.rows())
        except (OSError, csv.Error) as error:
            error_mapping: dict[type, str] = {
                OSError: f"Error writing the benchmark table {path}",
                csv.Error: f"Malformed benchmark row for {path}",
            }
            error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
            self.logger.error(error_msg, exc_info=error)
            raise ReporterError(error_msg) from error
        self.logger.info(f"Wrote {len(self.results)} benchmark rows to {path}")

    @classmethod
    def read_csv(cls, path: Path) -> list[BenchRow]:
        """Parse a benchmark table back into rows.

        Args:
            path (Path): Path of the CSV file.

        Returns:
            list[BenchRow]: The rows, in file order.

        Raises:
            ReporterError: If the file cannot be read or a row does not validate.
        """
        try:
            with path.open(newline="") as csv_file:
                reader = csv.DictReader(csv_file)
                header = list(reader.fieldnames or [])
                if header[: len(BENCH_CSV_FIELDS)] != BENCH_CSV_FIELDS:
                    raise ValueError(f"Unexpected header {reader.fieldnames}")
                return [BenchRow.model_validate(row) for row in reader]
        except (OSError, csv.Error, ValidationError, ValueError) as error:
            error_mapping: dict[type, str] = {
                OSError: f"Error reading the benchmark table {path}",
                csv.Error: f"Malformed CSV in {path}",
                ValidationError: f"Unexpected value in the benchmark table {path}",
                ValueError: f"Unexpected header in the benchmark table {path}",
            }
            error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
            cls.logger.error(error_msg, exc_info=error)
            raise ReporterError(error_msg) from error
