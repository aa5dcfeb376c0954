# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for two-stage robust instances and their first-stage sets."""

import numpy as np
from pydantic import Field, model_validator

from scripts.common.error import BaseError
from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector, all_finite
from scripts.robust_policy.lp.base_lp import LpBuilder, RowSense


class ModelError(BaseError):
    """Base class for errors in the robust policy domain model."""

    pass


class DimensionMismatchError(ModelError):
    """Error raised when an instance, set and policy disagree on dimensions."""

    pass


class InfeasibleModelError(ModelError):
    """Error raised when a model has no feasible point, for example an empty first stage."""

    pass


class NegativeRecourseError(ModelError):
    """Error raised when a method needs a nonnegative recourse matrix and B has negatives."""

    pass


class FirstStageSet(ArrayModel):
    """First-stage polyhedron `X = {x >= 0 : F x >= g, x <= upper}`."""

    F: Matrix = Field(default_factory=lambda: np.zeros((0, 0)))
    g: Vector = Field(default_factory=lambda: np.zeros(0))
    upper: Vector | None = None

    @model_validator(mode="after")
    def _check(self) -> "FirstStageSet":
        if self.F.shape[0] != self.g.shape[0]:
            raise ValueError(f"F has {self.F.shape[0]} rows but g has {self.g.shape[0]}")
        if not all_finite(self.F, self.g):
            raise ValueError("F and g must be finite")
        if self.upper is not None and not (all_finite(self.upper) and (self.upper >= 0).all()):
            raise ValueError("Upper bounds must be finite and nonnegative")
        return self

    @property
    def num_rows(self) -> int:
        """Number of rows of F."""
        return int(self.F.shape[0])

    @property
    def is_cone(self) -> bool:
        """Whether X is a polyhedral cone (g = 0 and no upper bounds)."""
        return self.upper is None and not self.g.any()

    def check_width(self, width: int) -> None:
        """Check that the set lives in dimension `width`.

        Args:
            width (int): Number of first-stage variables.

        Raises:
            DimensionMismatchError: If F or upper have another width.
        """
        if self.num_rows > 0 and self.F.shape[1] != width:
            raise DimensionMismatchError(f"F has {self.F.shape[1]} columns, expected {width}")
        if self.upper is not None and self.upper.shape[0] != width:
            raise DimensionMismatchError(f"upper has {self.upper.shape[0]} entries, not {width}")

    def add_to(self, builder: LpBuilder, columns: np.ndarray) -> None:
        """Impose `x in X` on the first-stage columns of an LP under construction.

        Args:
            builder (LpBuilder): The LP being assembled.
            columns (np.ndarray): Columns holding x.
        """
        for row in range(self.num_rows):
            nonzero = np.flatnonzero(self.F[row])
            builder.add_row(columns[nonzero], self.F[row, nonzero], RowSense.GE, self.g[row])
        if self.upper is not None:
            builder.set_upper(columns, self.upper)

    def violation(self, x: np.ndarray) -> float:
        """Largest violation of the constraints of X at x.

        Args:
            x (np.ndarray): First-stage point.

        Returns:
            float: Zero when x is in X.
        """
        gaps = [np.maximum(-x, 0.0)]
        if self.num_rows > 0:
            gaps.append(np.maximum(self.g - self.F @ x, 0.0))
        if self.upper is not None:
            gaps.append(np.maximum(x - self.upper, 0.0))
        return float(max(gap.max(initial=0.0) for gap in gaps))


class TwoStageInstance(ArrayModel):
    """Data of `min c·x + max_h min_y d·y s.t. A x + B y >= h, x in X, y >= 0`.

    A is m x n_x and B is m x n_y; the two widths coincide for the random families but not
    for lot-sizing, where only the arcs with finite distance carry a recourse variable.
    """

    A: Matrix
    B: Matrix
    c: Vector
    d: Vector
    first_stage_set: FirstStageSet = Field(default_factory=FirstStageSet)

    @model_validator(mode="after")
    def _check(self) -> "TwoStageInstance":
        m = self.A.shape[0]
        if self.B.shape[0] != m:
            raise ValueError(f"A has {m} rows but B has {self.B.shape[0]}")
        if self.c.shape[0] != self.A.shape[1] or self.d.shape[0] != self.B.shape[1]:
            raise ValueError("Cost vectors do not match the matrix widths")
        if not all_finite(self.A, self.B, self.c, self.d):
            raise ValueError("Instance data must be finite")
        if (self.c < 0).any() or (self.d < 0).any():
            raise ValueError("Costs c and d must be nonnegative")
        self.first_stage_set.check_width(self.A.shape[1])
        return self

    @property
    def m(self) -> int:
        """Number of covering rows, the dimension of h."""
        return int(self.A.shape[0])

    @property
    def nx(self) -> int:
        """Number of first-stage variables."""
        return int(self.A.shape[1])

    @property
    def ny(self) -> int:
        """Number of second-stage variables."""
        return int(self.B.shape[1])

    @property
    def b_nonnegative(self) -> bool:
        """Whether every entry of B is nonnegative."""
        return bool((self.B >= 0).all())

    def require_nonnegative_recourse(self) -> None:
        """Reject instances whose recourse matrix has negative entries.

        Raises:
            NegativeRecourseError: If B has a negative entry.
        """
        if not self.b_nonnegative:
            raise NegativeRecourseError("The method requires a nonnegative recourse matrix B")
