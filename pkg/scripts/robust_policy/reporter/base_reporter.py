# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module defining the base for all reporting of solver results."""

import logging
from typing import Any, Sequence

from pydantic import BaseModel

from scripts.common.error import BaseError
from scripts.robust_policy.constants import OBJECTIVE_DIGITS, TIME_DECIMALS


class ReporterResultBase(BaseModel):
    """Base class for reporter results."""

    def dict_with_fieldnames(self) -> dict[str, Any]:
        """Convert the result to a dictionary with field names.

        Returns:
            dict[str, Any]: Dictionary representation of the result.
        """
        raise NotImplementedError("Subclasses must implement this method.")


class ReporterError(BaseError):
    """Exception raised for errors in the reporter."""

    pass


def format_objective(value: float | None) -> float | None:
    """Round an objective to its reported significant digits."""
    return None if value is None else float(f"{value:.{OBJECTIVE_DIGITS}g}")


def format_time(value: float | None) -> float | None:
    """Round a wall time in seconds to its reported decimals."""
    return None if value is None else round(value, TIME_DECIMALS)


class BaseReporter:
    """Base class for reporters."""

    logger = logging.getLogger(__name__)
    results: Sequence[ReporterResultBase] = []

    def rows(self) -> list[dict[str, Any]]:
        """Field-named rows of every result."""
        return [result.dict_with_fieldnames() for result in self.results]
