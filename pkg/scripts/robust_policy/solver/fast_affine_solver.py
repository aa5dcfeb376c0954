# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the fast approximate affine policy `P = Y·diag(alpha)` on single-column bases."""

import logging
import time

import numpy as np

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.covering.covering_problem import CoveringProblem
from scripts.robust_policy.lp.base_lp import LpBuilder, LpProblem, RowSense
from scripts.robust_policy.model.instance import TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy
from scripts.robust_policy.model.uncertainty import UncertaintySet, as_polyhedron
from scripts.robust_policy.solver.base_solver import (
    PolicySolution,
    check_set_dimension,
    solve_or_raise,
)


class ColumnBasis(ArrayModel):
    """Cheapest single-column cover `v_i` of every unit requirement `e_i`.

    Column i of `Y` is `v_i`; `unit_costs[i] = d·v_i = z(e_i)`; `columns[i]` is the support.
    """

    Y: Matrix
    unit_costs: Vector
    columns: list[int]


def column_oracle(inst: TwoStageInstance, i: int) -> tuple[np.ndarray, float]:
    """Minimizer of `min {d·y : B y >= e_i, y >= 0}` supported on one column.

    Args:
        inst (TwoStageInstance): Instance with a nonnegative B.
        i (int): Row index.

    Returns:
        tuple[np.ndarray, float]: `v_i = e_l / B_il` for the column l minimizing `d_l / B_il`
            (ties to the smallest l) and `z(e_i) = d_l / B_il`.

    Raises:
        NegativeRecourseError: If B has a negative entry.
        UncoverableComponentError: If row i of B is all zeros.
    """
    cp = CoveringProblem.from_instance(inst)
    unit_cost, column = cp.unit_cost(i)
    vector = np.zeros(inst.ny)
    vector[column] = 1.0 / inst.B[i, column]
    return vector, unit_cost


def column_basis(inst: TwoStageInstance) -> ColumnBasis:
    """Run the column oracle on every row.

    Args:
        inst (TwoStageInstance): Instance with a nonnegative B.

    Returns:
        ColumnBasis: The matrix Y and the unit costs.
    """
    cp = CoveringProblem.from_instance(inst)
    Y = np.zeros((inst.ny, inst.m))
    unit_costs = np.zeros(inst.m)
    columns = []
    for i in range(inst.m):
        unit_costs[i], column = cp.unit_cost(i)
        Y[column, i] = 1.0 / inst.B[i, column]
        columns.append(column)
    return ColumnBasis(Y=Y, unit_costs=unit_costs, columns=columns)


class FastAffineSolver:
    """Builds and solves the reduced LP over `(x, alpha, q, z, v, V)`."""

    logger = logging.getLogger(__name__)

    def build(
        self, inst: TwoStageInstance, u: UncertaintySet, basis: ColumnBasis
    ) -> tuple[LpProblem, dict[str, np.ndarray]]:
        """Assemble the reduced LP.

        The nonnegativity of `y(h)` reduces to `alpha >= 0` and `q >= 0`, so its dual block is
        absent.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.
            basis (ColumnBasis): Column basis of the instance.

        Returns:
            tuple[LpProblem, dict[str, np.ndarray]]: The LP and the columns of each group.
        """
        check_set_dimension(inst, u)
        R, r = as_polyhedron(u)
        L, m = R.shape[0], inst.m
        BY = inst.B @ basis.Y

        builder = LpBuilder()
        x = builder.add_variables(inst.nx, cost=inst.c)
        alpha = builder.add_variables(m)
        q = builder.add_variables(inst.ny)
        z = builder.add_variables(1, lower=-np.inf, cost=1.0)
        v = builder.add_variables(L)
        V = builder.add_variables(L * m).reshape(L, m)

        builder.add_row(
            np.concatenate([z, q, v]), np.concatenate([[1.0], -inst.d, -r]), RowSense.GE, 0
        )
        for i in range(m):
            builder.add_row(
                np.concatenate([v, [alpha[i]]]),
                np.concatenate([R[:, i], [-basis.unit_costs[i]]]),
                RowSense.GE,
                0,
            )
        for k in range(m):
            builder.add_row(
                np.concatenate([x, q, V[:, k]]),
                np.concatenate([inst.A[k], inst.B[k], -r]),
                RowSense.GE,
                0,
            )
            for i in range(m):
                builder.add_row(
                    np.concatenate([V[:, k], [alpha[i]]]),
                    np.concatenate([R[:, i], [BY[k, i]]]),
                    RowSense.GE,
                    1.0 if k == i else 0.0,
                )
        inst.first_stage_set.add_to(builder, x)
        groups = {"x": x, "alpha": alpha, "q": q, "z": z, "v": v, "V": V}
        return builder.build(), groups

    def solve(self, inst: TwoStageInstance, u: UncertaintySet) -> PolicySolution:
        """Compute the fast approximate affine policy.

        The reported time covers LP assembly and solve, not the column oracle.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative, row-coverable B.
            u (UncertaintySet): The uncertainty set.

        Returns:
            PolicySolution: The policy cost, the policy with `P = Y·diag(alpha)` and wall time.

        Raises:
            NegativeRecourseError: If B has a negative entry.
            UncoverableComponentError: If a row of B is all zeros.
            InfeasibleModelError: If the reduced LP is infeasible.
        """
        self.logger.info(f"Solving the fast affine LP for m={inst.m}, n={inst.ny}")
        basis = column_basis(inst)
        start = time.perf_counter()
        problem, groups = self.build(inst, u, basis)
        solution = solve_or_raise(problem, "fast affine")
        solve_time = time.perf_counter() - start
        primal = solution.primal
        policy = AffinePolicy(
            x=primal[groups["x"]],
            P=basis.Y * primal[groups["alpha"]],
            q=primal[groups["q"]],
        )
        self.logger.info(
            f"Fast affine objective {solution.objective:.9g} in {solve_time:.3f}s "
            f"({problem.num_rows}x{problem.num_variables}, {solution.iterations} iterations)"
        )
        return PolicySolution(
            objective=solution.objective,
            policy=policy,
            solve_time=solve_time,
            num_columns=sum(int(group.size) for group in groups.values()),
        )


def solve_fast_affine(inst: TwoStageInstance, u: UncertaintySet) -> PolicySolution:
    """Compute the fast approximate affine policy; see `FastAffineSolver.solve`."""
    return FastAffineSolver().solve(inst, u)
