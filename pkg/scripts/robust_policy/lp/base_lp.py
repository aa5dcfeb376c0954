# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module defining the linear programs handled by the LP kernel."""

from enum import Enum
from typing import Sequence

import numpy as np
from pydantic import Field

from scripts.common.error import BaseError
from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector


class LpError(BaseError):
    """Base class for errors raised by the LP kernel."""

    pass


class MalformedProblemError(LpError):
    """Error raised when an LP has inconsistent dimensions, bounds or non-finite data."""

    pass


class NumericalFailureError(LpError):
    """Error raised when the simplex cannot finish, the caller should rescale or perturb."""

    pass


class TimeLimitExceededError(LpError):
    """Error raised when a solve runs past the deadline installed by `time_limit`."""

    pass


class RowSense(str, Enum):
    """Sense of a constraint row."""

    GE = ">="
    LE = "<="
    EQ = "="


class LpStatus(str, Enum):
    """Termination status of a solve."""

    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class LpProblem(ArrayModel):
    """Minimization problem `min cost·x s.t. matrix x (senses) rhs, lower <= x <= upper`.

    Lower bounds are 0 or -inf, upper bounds are finite or +inf.
    """

    cost: Vector
    matrix: Matrix
    senses: list[RowSense]
    rhs: Vector
    lower: Vector
    upper: Vector

    @property
    def num_variables(self) -> int:
        """Number of columns."""
        return int(self.cost.shape[0])

    @property
    def num_rows(self) -> int:
        """Number of constraint rows."""
        return int(self.rhs.shape[0])


class LpSolution(ArrayModel):
    """Result of a solve.

    `dual` follows the Lagrangian convention of a minimization: rows `>=` carry nonnegative
    multipliers, rows `<=` nonpositive ones. `reduced_costs` equal `cost - matrix.T @ dual`.
    """

    status: LpStatus
    objective: float = 0.0
    primal: Vector = Field(default_factory=lambda: np.zeros(0))
    dual: Vector = Field(default_factory=lambda: np.zeros(0))
    reduced_costs: Vector = Field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        """Whether the solve ended at an optimum."""
        return self.status is LpStatus.OPTIMAL


class LpBuilder:
    """Incremental assembly of an `LpProblem` from variable blocks and sparse rows."""

    def __init__(self) -> None:
        self._cost: list[float] = []
        self._lower: list[float] = []
        self._upper: list[float] = []
        self._rows: list[tuple[np.ndarray, np.ndarray]] = []
        self._senses: list[RowSense] = []
        self._rhs: list[float] = []

    @property
    def num_variables(self) -> int:
        """Number of columns added so far."""
        return len(self._cost)

    @property
    def num_rows(self) -> int:
        """Number of rows added so far."""
        return len(self._rhs)

    def add_variables(
        self,
        count: int,
        lower: float = 0.0,
        upper: float = np.inf,
        cost: float | Sequence[float] | np.ndarray = 0.0,
    ) -> np.ndarray:
        """Append a block of variables.

        Args:
            count (int): Number of variables in the block.
            lower (float): Common lower bound, 0 or -inf.
            upper (float): Common upper bound.
            cost (float | Sequence[float] | np.ndarray): Scalar or per-variable objective
                coefficients.

        Returns:
            np.ndarray: Column indices of the new block.
        """
        start = len(self._cost)
        costs = np.broadcast_to(np.asarray(cost, dtype=float), (count,))
        self._cost.extend(costs.tolist())
        self._lower.extend([lower] * count)
        self._upper.extend([upper] * count)
        return np.arange(start, start + count)

    def set_upper(self, columns: np.ndarray, upper: np.ndarray) -> None:
        """Override upper bounds of existing columns.

        Args:
            columns (np.ndarray): Column indices.
            upper (np.ndarray): New upper bounds, one per column.
        """
        for column, bound in zip(columns.tolist(), np.asarray(upper, dtype=float).tolist()):
            self._upper[column] = bound

    def add_row(
        self,
        columns: np.ndarray | Sequence[int],
        values: np.ndarray | Sequence[float],
        sense: RowSense,
        rhs: float,
    ) -> int:
        """Append one constraint row given its nonzero pattern.

        Args:
            columns (np.ndarray | Sequence[int]): Column indices of the coefficients.
            values (np.ndarray | Sequence[float]): Coefficients, aligned with `columns`.
            sense (RowSense): Row sense.
            rhs (float): Right-hand side.

        Returns:
            int: Index of the new row.
        """
        self._rows.append(
            (np.asarray(columns, dtype=int).ravel(), np.asarray(values, dtype=float).ravel())
        )
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return len(self._rhs) - 1

    def build(self) -> LpProblem:
        """Materialize the dense problem.

        Returns:
            LpProblem: The assembled problem.
        """
        matrix = np.zeros((len(self._rhs), len(self._cost)))
        for row, (columns, values) in enumerate(self._rows):
            # repeated columns accumulate
            np.add.at(matrix[row], columns, values)
        return LpProblem(
            cost=np.array(self._cost),
            matrix=matrix,
            senses=list(self._senses),
            rhs=np.array(self._rhs),
            lower=np.array(self._lower),
            upper=np.array(self._upper),
        )
