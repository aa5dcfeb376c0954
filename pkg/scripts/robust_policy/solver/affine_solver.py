# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the compact LP of the optimal affine policy."""

import logging
import time

import numpy as np

from scripts.robust_policy.arrays import ArrayModel
from scripts.robust_policy.lp.base_lp import LpBuilder, LpProblem, RowSense
from scripts.robust_policy.model.instance import TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy
from scripts.robust_policy.model.uncertainty import UncertaintySet, as_polyhedron
from scripts.robust_policy.solver.base_solver import (
    PolicySolution,
    check_set_dimension,
    solve_or_raise,
)


class AffineLpLayout(ArrayModel):
    """Column indices of each variable group of the affine LP.

    `v`, `U` and `V` are the multipliers of the set rows (box rows included) that dualize the
    objective, nonnegativity and covering robust constraints.
    """

    x: np.ndarray
    P: np.ndarray
    q: np.ndarray
    z: int
    v: np.ndarray
    U: np.ndarray
    V: np.ndarray

    @property
    def num_columns(self) -> int:
        """Total number of structural columns."""
        groups = [self.x, self.P, self.q, self.v, self.U, self.V]
        return 1 + sum(int(group.size) for group in groups)

    def extract_policy(self, primal: np.ndarray) -> AffinePolicy:
        """Read the policy off a primal solution.

        Args:
            primal (np.ndarray): LP primal values.

        Returns:
            AffinePolicy: The policy `(x, P, q)`.
        """
        return AffinePolicy(x=primal[self.x], P=primal[self.P], q=primal[self.q])


class AffineSolver:
    """Builds and solves the optimal affine policy LP."""

    logger = logging.getLogger(__name__)

    def build(self, inst: TwoStageInstance, u: UncertaintySet) -> tuple[LpProblem, AffineLpLayout]:
        """Assemble the LP over `(x, P, q, z, v, U, V)`.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.

        Returns:
            tuple[LpProblem, AffineLpLayout]: The LP and its column layout.

        Raises:
            DimensionMismatchError: If the set does not fit the instance.
        """
        check_set_dimension(inst, u)
        R, r = as_polyhedron(u)
        L, m, ny = R.shape[0], inst.m, inst.ny
        A, B, d = inst.A, inst.B, inst.d

        builder = LpBuilder()
        x = builder.add_variables(inst.nx, cost=inst.c)
        P = builder.add_variables(ny * m, lower=-np.inf).reshape(ny, m)
        q = builder.add_variables(ny, lower=-np.inf)
        z = builder.add_variables(1, lower=-np.inf, cost=1.0)
        v = builder.add_variables(L)
        U = builder.add_variables(L * ny).reshape(L, ny)
        V = builder.add_variables(L * m).reshape(L, m)

        # worst-case recourse cost d·(P h + q) <= z
        builder.add_row(np.concatenate([z, q, v]), np.concatenate([[1.0], -d, -r]), RowSense.GE, 0)
        for i in range(m):
            builder.add_row(
                np.concatenate([v, P[:, i]]), np.concatenate([R[:, i], -d]), RowSense.GE, 0
            )
        # covering A x + B(P h + q) >= h for every h in the set
        for k in range(m):
            builder.add_row(
                np.concatenate([x, q, V[:, k]]), np.concatenate([A[k], B[k], -r]), RowSense.GE, 0
            )
            for i in range(m):
                builder.add_row(
                    np.concatenate([V[:, k], P[:, i]]),
                    np.concatenate([R[:, i], B[k]]),
                    RowSense.GE,
                    1.0 if k == i else 0.0,
                )
        # nonnegativity P h + q >= 0 for every h in the set
        for j in range(ny):
            builder.add_row(
                np.concatenate([[q[j]], U[:, j]]), np.concatenate([[1.0], -r]), RowSense.GE, 0
            )
            for i in range(m):
                builder.add_row(
                    np.concatenate([U[:, j], [P[j, i]]]),
                    np.concatenate([R[:, i], [1.0]]),
                    RowSense.GE,
                    0,
                )
        inst.first_stage_set.add_to(builder, x)

        layout = AffineLpLayout(x=x, P=P, q=q, z=int(z[0]), v=v, U=U, V=V)
        return builder.build(), layout

    def solve(self, inst: TwoStageInstance, u: UncertaintySet) -> PolicySolution:
        """Compute the optimal affine policy.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.

        Returns:
            PolicySolution: The optimal affine cost, policy and wall time.

        Raises:
            DimensionMismatchError: If the set does not fit the instance.
            InfeasibleModelError: If no affine policy is feasible, in particular when X is empty.
        """
        self.logger.info(f"Solving the optimal affine LP for m={inst.m}, n={inst.ny}")
        start = time.perf_counter()
        problem, layout = self.build(inst, u)
        solution = solve_or_raise(problem, "optimal affine")
        solve_time = time.perf_counter() - start
        self.logger.info(
            f"Optimal affine objective {solution.objective:.9g} in {solve_time:.3f}s "
            f"({problem.num_rows}x{problem.num_variables}, {solution.iterations} iterations)"
        )
        return PolicySolution(
            objective=solution.objective,
            policy=layout.extract_policy(solution.primal),
            solve_time=solve_time,
            num_columns=layout.num_columns,
        )


def build_affine_lp(inst: TwoStageInstance, u: UncertaintySet) -> tuple[LpProblem, AffineLpLayout]:
    """Assemble the optimal affine LP; see `AffineSolver.build`."""
    return AffineSolver().build(inst, u)


def solve_optimal_affine(inst: TwoStageInstance, u: UncertaintySet) -> PolicySolution:
    """Compute the optimal affine policy; see `AffineSolver.solve`."""
    return AffineSolver().solve(inst, u)
