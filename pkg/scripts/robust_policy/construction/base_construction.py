# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module defining the base for the threshold constructions of affine policies.

Both constructions split the components into inexpensive ones, covered by the linear rule
`y_Lin(h) = sum_{i in I} alpha_i h_i v_i`, and the rest, covered by one static solution.
"""

import logging
from typing import Sequence

import numpy as np
from pydantic import BaseModel

from scripts.robust_policy.constants import ROUNDING_TRIALS
from scripts.robust_policy.covering.covering_problem import CoveringProblem
from scripts.robust_policy.model.instance import DimensionMismatchError, TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy, evaluate_policy
from scripts.robust_policy.model.uncertainty import UncertaintySet, max_linear
from scripts.robust_policy.solver.adjustable_solver import solve_static
from scripts.robust_policy.solver.fast_affine_solver import ColumnBasis


class CostDecomposition(BaseModel):
    """Worst-case cost of a constructed policy split into its two parts.

    `bound` is the guarantee the construction promises, when it can be stated.
    """

    linear_cost: float
    static_cost: float
    total_cost: float
    violation: float
    bound: float | None = None


class BaseConstruction:
    """Shared steps of the threshold constructions."""

    logger = logging.getLogger(__name__)

    def __init__(self, max_trials: int = ROUNDING_TRIALS) -> None:
        """Initialize the construction.

        Args:
            max_trials (int): Rounding trials allowed to each structural certificate.
        """
        self.max_trials = max_trials

    @staticmethod
    def residual_fraction(inst: TwoStageInstance, x_star: np.ndarray) -> np.ndarray:
        """Fraction `alpha = e - A x*` of each component left to the second stage.

        Args:
            inst (TwoStageInstance): The instance.
            x_star (np.ndarray): Optimal first-stage decision.

        Returns:
            np.ndarray: The vector alpha.

        Raises:
            DimensionMismatchError: If x* does not have length n_x.
        """
        x_star = np.asarray(x_star, dtype=float)
        if x_star.shape != (inst.nx,):
            raise DimensionMismatchError(f"x* has shape {x_star.shape}, not ({inst.nx},)")
        alpha: np.ndarray = 1.0 - inst.A @ x_star
        return alpha

    @staticmethod
    def rescaled_covering(inst: TwoStageInstance, alpha: np.ndarray) -> CoveringProblem:
        """Covering problem with row i of B divided by `alpha_i` where it is positive."""
        cp = CoveringProblem.from_instance(inst)
        return cp.scale_rows(np.where(alpha > 0, alpha, 1.0))

    @staticmethod
    def static_target(alpha: np.ndarray, inexpensive: Sequence[int]) -> np.ndarray:
        """Requirement `sum_{i not in I} e_i + sum_{i in I} (1 - alpha_i)^+ e_i`."""
        target = np.ones(alpha.shape[0])
        rows = np.asarray(inexpensive, dtype=int)
        target[rows] = np.maximum(1.0 - alpha[rows], 0.0)
        return target

    def assemble(
        self,
        inst: TwoStageInstance,
        u: UncertaintySet,
        basis: ColumnBasis,
        alpha: np.ndarray,
        inexpensive: Sequence[int],
    ) -> tuple[AffinePolicy, np.ndarray, CostDecomposition]:
        """Combine the linear rule on I with the static solution of the remaining requirement.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative B.
            u (UncertaintySet): The uncertainty set.
            basis (ColumnBasis): Single-column covers `v_i`.
            alpha (np.ndarray): Residual fractions.
            inexpensive (Sequence[int]): Components covered by the linear rule.

        Returns:
            tuple[AffinePolicy, np.ndarray, CostDecomposition]: The policy, the static target
                and the cost split, without a bound.
        """
        rows = np.asarray(inexpensive, dtype=int)
        P = np.zeros((inst.ny, inst.m))
        P[:, rows] = basis.Y[:, rows] * alpha[rows]
        target = self.static_target(alpha, rows)
        static = solve_static(inst, target)
        policy = AffinePolicy(x=static.x, P=P, q=static.y)

        linear_cost, _ = max_linear(u, P.T @ inst.d)
        report = evaluate_policy(inst, u, policy)
        costs = CostDecomposition(
            linear_cost=linear_cost,
            static_cost=static.cost,
            total_cost=report.worst_case_objective,
            violation=report.max_violation,
        )
        self.logger.info(
            f"Constructed policy: {rows.size} linear components, linear cost "
            f"{linear_cost:.9g}, static cost {static.cost:.9g}, total {costs.total_cost:.9g}"
        )
        return policy, target, costs
