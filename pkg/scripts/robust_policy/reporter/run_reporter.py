# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the records of single solver runs and of instances solved by several methods."""

from enum import Enum
from typing import Any

from pydantic import Field

from scripts.robust_policy.reporter.base_reporter import (
    ReporterResultBase,
    format_objective,
    format_time,
)


class Status(Enum):
    """Outcome of one solve."""

    OPTIMAL = "Optimal"
    FAILED = "Failed"
    TIME_LIMIT = "TimeLimit"


class SolveRecord(ReporterResultBase):
    """Result of one method on one instance."""

    instance: str
    family: str | None = None
    m: int
    seed: int | None = None
    method: str
    objective: float | None = None
    time_s: float | None = Field(None, ge=0)
    status: Status
    error_code: str | None = None
    message: str | None = None
    certificate: dict[str, Any] | None = None

    @property
    def is_optimal(self) -> bool:
        """True when the method finished with an objective."""
        return self.status is Status.OPTIMAL and self.objective is not None

    def dict_with_fieldnames(self) -> dict[str, Any]:
        """Convert the record to its JSON form.

        Returns:
            dict[str, Any]: Instance, method, rounded objective and time, status, and the
                certificate or error fields when present.
        """
        row: dict[str, Any] = {
            "instance": self.instance,
            "method": self.method,
            "objective": format_objective(self.objective),
            "time_s": format_time(self.time_s),
            "status": self.status.value,
        }
        if self.error_code is not None:
            row["error_code"] = self.error_code
            row["message"] = self.message
        if self.certificate is not None:
            row["certificate"] = self.certificate
        return row


class RunRecord(ReporterResultBase):
    """Results of several methods on one instance, with the ratios between them."""

    instance: str
    family: str | None = None
    m: int
    seed: int | None = None
    results: dict[str, SolveRecord] = Field(default_factory=dict)

    def ratio(self, numerator: str, denominator: str) -> float | None:
        """Objective ratio of two methods, only when both solved to optimality.

        Args:
            numerator (str): Method on top.
            denominator (str): Method below, with a positive objective.

        Returns:
            float | None: The ratio, or None when undefined.
        """
        top, bottom = self.results.get(numerator), self.results.get(denominator)
        if top is None or bottom is None or not (top.is_optimal and bottom.is_optimal):
            return None
        if bottom.objective is None or top.objective is None or bottom.objective <= 0:
            return None
        return top.objective / bottom.objective

    @property
    def alg_over_aff(self) -> float | None:
        """Ratio `z_alg / z_aff`."""
        return self.ratio("fast", "affine")

    @property
    def aff_over_ar(self) -> float | None:
        """Ratio `z_aff / z_ar`."""
        return self.ratio("affine", "adjustable")

    def dict_with_fieldnames(self) -> dict[str, Any]:
        """Convert the record to a flat dictionary.

        Returns:
            dict[str, Any]: Instance fields, per-method objective, time and status, ratios.
        """
        row: dict[str, Any] = {
            "instance": self.instance,
            "family": self.family,
            "m": self.m,
            "seed": self.seed,
        }
        for method, record in self.results.items():
            row[f"{method}_objective"] = format_objective(record.objective)
            row[f"{method}_time_s"] = format_time(record.time_s)
            row[f"{method}_status"] = record.status.value
        row["alg_over_aff"] = self.alg_over_aff
        row["aff_over_ar"] = self.aff_over_ar
        return row


class GapRecord(ReporterResultBase):
    """Adjustable and affine optima of one lot-sizing size with the expected affine value."""

    m: int
    z_ar: float | None = None
    z_aff: float | None = None
    expected_aff: float
    error_code: str | None = None

    def dict_with_fieldnames(self) -> dict[str, Any]:
        """Convert the record to its JSON form.

        Returns:
            dict[str, Any]: Size, rounded optima and the expected `m/2 - 1`.
        """
        return {
            "m": self.m,
            "z_ar": format_objective(self.z_ar),
            "z_aff": format_objective(self.z_aff),
            "expected_aff": self.expected_aff,
            "error_code": self.error_code,
        }
