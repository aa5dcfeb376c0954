# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the offline fractional covering problem `z(h) = min {d·y : Bc y >= h, y >= 0}`."""

import math
from typing import Sequence

import numpy as np
from pydantic import model_validator

from scripts.common.error import BaseError
from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector, all_finite
from scripts.robust_policy.lp.base_lp import LpBuilder, RowSense
from scripts.robust_policy.lp.simplex import solve_lp
from scripts.robust_policy.model.instance import TwoStageInstance


class CoveringError(BaseError):
    """Base class for errors raised by the covering machinery."""

    pass


class UncoverableComponentError(CoveringError):
    """Error raised when a required row of the covering matrix has no positive entry."""

    pass


class ConditionOneViolatedError(CoveringError):
    """Error raised when some component is cheap to cover relative to its budget weight."""

    pass


class RoundingExhaustedError(CoveringError):
    """Error raised when no randomized rounding of the packing dual succeeds."""

    pass


class DegenerateColumnError(CoveringError):
    """Error raised when no column of the covering matrix touches the weighted components."""

    pass


class CoveringProblem(ArrayModel):
    """Nonnegative covering data: matrix Bc (m x n) and costs d (n)."""

    Bc: Matrix
    d: Vector

    @model_validator(mode="after")
    def _check(self) -> "CoveringProblem":
        if self.Bc.shape[1] != self.d.shape[0]:
            raise ValueError(f"Bc has {self.Bc.shape[1]} columns but d has {self.d.shape[0]}")
        if not all_finite(self.Bc, self.d) or (self.Bc < 0).any() or (self.d < 0).any():
            raise ValueError("Covering data must be finite and nonnegative")
        return self

    @classmethod
    def from_instance(cls, inst: TwoStageInstance) -> "CoveringProblem":
        """Covering problem of the recourse matrix of an instance.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative B.

        Returns:
            CoveringProblem: The pair (B, d).

        Raises:
            NegativeRecourseError: If B has a negative entry.
        """
        inst.require_nonnegative_recourse()
        return cls(Bc=inst.B, d=inst.d)

    @property
    def m(self) -> int:
        """Number of rows."""
        return int(self.Bc.shape[0])

    @property
    def n(self) -> int:
        """Number of columns."""
        return int(self.Bc.shape[1])

    @property
    def coverable(self) -> np.ndarray:
        """Mask of the rows with at least one positive entry."""
        mask: np.ndarray = (self.Bc > 0).any(axis=1)
        return mask

    def require_coverable(self, rows: Sequence[int] | np.ndarray) -> None:
        """Reject rows that no column can cover.

        Args:
            rows (Sequence[int] | np.ndarray): Row indices that must be covered.

        Raises:
            UncoverableComponentError: If one of the rows is all zeros.
        """
        rows = np.asarray(rows, dtype=int)
        bad = rows[~self.coverable[rows]] if rows.size else rows
        if bad.size:
            raise UncoverableComponentError(f"Rows {bad.tolist()} of the covering matrix are zero")

    def unit_cost(self, i: int) -> tuple[float, int]:
        """Cost `z(e_i)` of covering one row, with the cheapest column.

        Args:
            i (int): Row index.

        Returns:
            tuple[float, int]: `min_j d_j / Bc_ij` over positive entries, ties to the smallest j,
                and the minimizing column.

        Raises:
            UncoverableComponentError: If row i is all zeros.
        """
        self.require_coverable([i])
        positive = np.flatnonzero(self.Bc[i] > 0)
        ratios = self.d[positive] / self.Bc[i, positive]
        best = int(np.argmin(ratios))
        return float(ratios[best]), int(positive[best])

    def scale_rows(self, scale: np.ndarray) -> "CoveringProblem":
        """Covering problem with row i of Bc divided by `scale_i`.

        Args:
            scale (np.ndarray): Positive row divisors.

        Returns:
            CoveringProblem: The rescaled problem.
        """
        return CoveringProblem(Bc=self.Bc / scale[:, None], d=self.d)


def solve_covering_lp(
    matrix: np.ndarray, costs: np.ndarray, rhs: np.ndarray
) -> tuple[float, np.ndarray]:
    """Solve `min {costs·y : matrix y >= rhs, y >= 0}` over the rows with positive rhs.

    Args:
        matrix (np.ndarray): Nonnegative covering matrix.
        costs (np.ndarray): Nonnegative costs.
        rhs (np.ndarray): Requirements.

    Returns:
        tuple[float, np.ndarray]: Optimal value and minimizer.

    Raises:
        UncoverableComponentError: If a row with positive requirement cannot be covered.
    """
    builder = LpBuilder()
    y = builder.add_variables(matrix.shape[1], cost=costs)
    for row in np.flatnonzero(rhs > 0):
        support = np.flatnonzero(matrix[row] > 0)
        if support.size == 0:
            raise UncoverableComponentError(f"Row {row} has a requirement but no positive entry")
        builder.add_row(y[support], matrix[row, support], RowSense.GE, rhs[row])
    solution = solve_lp(builder.build())
    if not solution.is_optimal:
        raise UncoverableComponentError(f"Covering LP ended {solution.status.value}")
    return solution.objective, solution.primal


def cover_cost(cp: CoveringProblem, h: np.ndarray) -> tuple[float, np.ndarray]:
    """Offline covering cost `z(h)`.

    Args:
        cp (CoveringProblem): The covering data.
        h (np.ndarray): Nonnegative requirement vector.

    Returns:
        tuple[float, np.ndarray]: `z(h)` and a minimizer y.

    Raises:
        UncoverableComponentError: If some row with `h_i > 0` is all zeros.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (cp.m,) or (h < 0).any():
        raise ValueError(f"Requirement must be a nonnegative vector of length {cp.m}")
    return solve_covering_lp(cp.Bc, cp.d, h)


def indicator(m: int, rows: Sequence[int] | np.ndarray) -> np.ndarray:
    """0/1 vector of length m with ones on `rows`."""
    vector = np.zeros(m)
    vector[np.asarray(rows, dtype=int)] = 1.0
    return vector


def log_ratio(n: int) -> float:
    """Guarded `ln n / ln ln n`, with both logarithms floored at 1.

    Args:
        n (int): Number of columns.

    Returns:
        float: `max(ln n, 1) / max(ln max(ln n, 1), 1)`.
    """
    ln_n = max(math.log(max(n, 1)), 1.0)
    return ln_n / max(math.log(ln_n), 1.0)
