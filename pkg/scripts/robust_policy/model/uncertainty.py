# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for budgeted uncertainty sets over the unit box."""

from itertools import combinations
from typing import Annotated, Literal

import numpy as np
from pydantic import Field, model_validator

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector, all_finite
from scripts.robust_policy.constants import MEMBERSHIP_TOL
from scripts.robust_policy.lp.base_lp import LpBuilder, RowSense
from scripts.robust_policy.lp.simplex import solve_lp
from scripts.robust_policy.model.instance import DimensionMismatchError, InfeasibleModelError


def _check_weights(weights: np.ndarray) -> None:
    if not all_finite(weights) or (weights < 0).any() or (weights > 1).any():
        raise ValueError("Budget weights must lie in [0, 1]")


class BudgetSet(ArrayModel):
    """Budget of uncertainty `{h in [0,1]^m : w·h <= 1}`."""

    type: Literal["budget"] = "budget"
    w: Vector

    @model_validator(mode="after")
    def _check(self) -> "BudgetSet":
        if self.w.shape[0] == 0:
            raise ValueError("A budget set needs at least one coordinate")
        _check_weights(self.w)
        return self

    @property
    def m(self) -> int:
        """Dimension of the scenarios."""
        return int(self.w.shape[0])

    def constraint_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """Budget rows of the set, without the box."""
        return self.w.reshape(1, -1), np.ones(1)


class BudgetBlock(ArrayModel):
    """One budget `sum_{i in support} w_i h_i <= 1` of an intersection."""

    support: list[int]
    weights: Vector

    @model_validator(mode="after")
    def _check(self) -> "BudgetBlock":
        if len(self.support) != self.weights.shape[0]:
            raise ValueError("A block needs one weight per supported index")
        if len(set(self.support)) != len(self.support) or any(i < 0 for i in self.support):
            raise ValueError("Block supports must be distinct nonnegative indices")
        _check_weights(self.weights)
        return self

    def dense(self, m: int) -> np.ndarray:
        """Weights as a dense vector of length m.

        Args:
            m (int): Dimension of the scenarios.

        Returns:
            np.ndarray: Zero outside the support.
        """
        row = np.zeros(m)
        row[self.support] = self.weights
        return row


class IntersectionSet(ArrayModel):
    """Intersection of budget blocks `{h in [0,1]^m : w_l·h_{S_l} <= 1 for every l}`."""

    type: Literal["intersection"] = "intersection"
    m: int = Field(ge=1)
    blocks: list[BudgetBlock]
    disjoint: bool = False

    @model_validator(mode="after")
    def _check(self) -> "IntersectionSet":
        seen: set[int] = set()
        overlapping = False
        for block in self.blocks:
            if any(i >= self.m for i in block.support):
                raise ValueError(f"Block support exceeds dimension {self.m}")
            overlapping = overlapping or not seen.isdisjoint(block.support)
            seen.update(block.support)
        if self.disjoint and overlapping:
            raise ValueError("Blocks flagged disjoint share indices")
        return self

    def constraint_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """One row per block, without the box."""
        if not self.blocks:
            return np.zeros((0, self.m)), np.zeros(0)
        rows = np.vstack([block.dense(self.m) for block in self.blocks])
        return rows, np.ones(len(self.blocks))


class PolyhedralSet(ArrayModel):
    """General packing polyhedron `{h in [0,1]^m : R h <= r}` with R >= 0 and r > 0."""

    type: Literal["polyhedral"] = "polyhedral"
    R: Matrix
    r: Vector

    @model_validator(mode="after")
    def _check(self) -> "PolyhedralSet":
        if self.R.shape[0] != self.r.shape[0] or self.R.shape[1] == 0:
            raise ValueError(f"R of shape {self.R.shape} does not match r of {self.r.shape[0]}")
        if not all_finite(self.R, self.r) or (self.R < 0).any() or (self.r <= 0).any():
            raise ValueError("R must be finite and nonnegative, r finite and positive")
        if (self.R > self.r[:, None]).any():
            raise ValueError("Every unit vector must belong to the set")
        return self

    @property
    def m(self) -> int:
        """Dimension of the scenarios."""
        return int(self.R.shape[1])

    def constraint_rows(self) -> tuple[np.ndarray, np.ndarray]:
        """The rows `R h <= r`, without the box."""
        return np.array(self.R), np.array(self.r)


UncertaintySet = Annotated[
    BudgetSet | IntersectionSet | PolyhedralSet, Field(discriminator="type")
]


def as_polyhedron(u: UncertaintySet) -> tuple[np.ndarray, np.ndarray]:
    """Row system `(R, r)` with `u = {h >= 0 : R h <= r}`, box rows `h_i <= 1` last.

    Args:
        u (UncertaintySet): The uncertainty set.

    Returns:
        tuple[np.ndarray, np.ndarray]: The matrix R and right-hand side r.
    """
    rows, rhs = u.constraint_rows()
    return np.vstack([rows, np.eye(u.m)]), np.concatenate([rhs, np.ones(u.m)])


def contains(u: UncertaintySet, h: np.ndarray, tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership test from the algebraic definition of the set.

    Args:
        u (UncertaintySet): The uncertainty set.
        h (np.ndarray): Candidate scenario.
        tol (float): Absolute slack allowed on every inequality.

    Returns:
        bool: True when h is in u.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (u.m,) or (h < -tol).any() or (h > 1 + tol).any():
        return False
    match u:
        case BudgetSet():
            return bool(u.w @ h <= 1 + tol)
        case IntersectionSet():
            return all(block.weights @ h[block.support] <= 1 + tol for block in u.blocks)
        case PolyhedralSet():
            return bool((u.R @ h <= u.r + tol).all())
    return False


def max_linear(u: UncertaintySet, a: np.ndarray) -> tuple[float, np.ndarray]:
    """Maximize a linear function over the set.

    Args:
        u (UncertaintySet): The uncertainty set.
        a (np.ndarray): Objective direction of length m.

    Returns:
        tuple[float, np.ndarray]: The maximum of a·h and a maximizer.

    Raises:
        DimensionMismatchError: If a does not have length m.
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (u.m,):
        raise DimensionMismatchError(f"Direction of shape {a.shape} for a set of dimension {u.m}")
    rows, rhs = as_polyhedron(u)
    builder = LpBuilder()
    h = builder.add_variables(u.m, cost=-a)
    for row, bound in zip(rows, rhs):
        support = np.flatnonzero(row)
        builder.add_row(h[support], row[support], RowSense.LE, bound)
    solution = solve_lp(builder.build())
    if not solution.is_optimal:
        # the origin is always feasible and the box bounds the set
        raise InfeasibleModelError(f"Maximization over the set ended {solution.status.value}")
    return -solution.objective, solution.primal


def clt_set(m: int, k: int, gamma: float) -> IntersectionSet:
    """Intersection of the budgets `sum_{i in S} h_i <= gamma` over every k-subset S.

    Args:
        m (int): Dimension of the scenarios.
        k (int): Size of each subset.
        gamma (float): Budget of each subset, at least 1.

    Returns:
        IntersectionSet: The set, with weights 1/gamma on each block.

    Raises:
        ValueError: If k is not in [1, m] or gamma is below 1.
    """
    if not 1 <= k <= m or gamma < 1:
        raise ValueError(f"Need 1 <= k <= m and gamma >= 1, got m={m}, k={k}, gamma={gamma}")
    blocks = [
        BudgetBlock(support=list(subset), weights=np.full(k, 1.0 / gamma))
        for subset in combinations(range(m), k)
    ]
    return IntersectionSet(m=m, blocks=blocks, disjoint=len(blocks) == 1)
