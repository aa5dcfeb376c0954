# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the threshold construction of an affine policy over a budget set."""

import numpy as np

from scripts.robust_policy.arrays import ArrayModel, Vector
from scripts.robust_policy.constants import ROUNDING_TRIALS
from scripts.robust_policy.construction.base_construction import (
    BaseConstruction,
    CostDecomposition,
)
from scripts.robust_policy.covering.certificate import Verdict, structural_certificate
from scripts.robust_policy.covering.covering_problem import CoveringError, log_ratio
from scripts.robust_policy.model.instance import TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy
from scripts.robust_policy.model.uncertainty import BudgetSet
from scripts.robust_policy.solver.fast_affine_solver import ColumnBasis, column_basis


def budget_beta(n: int) -> float:
    """Threshold factor `4 ln n / ln ln n` with small-n guards."""
    return 4.0 * log_ratio(n)


class ConstructionState(ArrayModel):
    """Inputs, split and diagnostics of a budget construction.

    `inexpensive` is `{i : alpha_i > 0 and alpha_i z(e_i) / w_i <= beta·OPT}`; `expensive` is
    its complement. `verdict` re-certifies the expensive components with positive alpha on the
    rescaled covering matrix, `verdict_error` holds the reason when that was impossible.
    """

    x_star: Vector
    opt: float
    alpha: Vector
    beta: float
    inexpensive: list[int]
    expensive: list[int]
    basis: ColumnBasis
    static_target: Vector
    costs: CostDecomposition
    verdict: Verdict | None = None
    verdict_error: str | None = None


class BudgetConstruction(BaseConstruction):
    """Affine policy within `(1 + 2 beta)·OPT` of the adjustable optimum on a budget set."""

    @staticmethod
    def split(
        alpha: np.ndarray, unit_costs: np.ndarray, w: np.ndarray, threshold: float
    ) -> list[int]:
        """Components whose weighted covering cost is at most the threshold.

        Args:
            alpha (np.ndarray): Residual fractions.
            unit_costs (np.ndarray): Costs `z(e_i)`.
            w (np.ndarray): Budget weights.
            threshold (float): Inclusive threshold.

        Returns:
            list[int]: Indices with `alpha_i > 0` and `alpha_i z(e_i) <= threshold·w_i`.
        """
        return [
            i
            for i in range(alpha.shape[0])
            if alpha[i] > 0 and alpha[i] * unit_costs[i] <= threshold * w[i]
        ]

    def certify(
        self,
        inst: TwoStageInstance,
        alpha: np.ndarray,
        expensive: list[int],
        w: np.ndarray,
        opt: float,
    ) -> tuple[Verdict | None, str | None]:
        """Structural verdict on the expensive components with positive alpha, `gamma = OPT`.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative B.
            alpha (np.ndarray): Residual fractions.
            expensive (list[int]): Components outside the linear rule.
            w (np.ndarray): Budget weights.
            opt (float): Adjustable optimum.

        Returns:
            tuple[Verdict | None, str | None]: The verdict, or None with the reason.
        """
        rows = [i for i in expensive if alpha[i] > 0]
        if not rows or opt <= 0:
            return None, "no expensive component to certify"
        cp = self.rescaled_covering(inst, alpha)
        try:
            verdict = structural_certificate(cp, rows, w[rows], opt, max_trials=self.max_trials)
            return verdict, None
        except (CoveringError, ValueError) as error:
            self.logger.warning(f"Expensive components not certified: {error}")
            return None, str(error)

    def construct(
        self, inst: TwoStageInstance, u: BudgetSet, x_star: np.ndarray, opt: float
    ) -> tuple[AffinePolicy, ConstructionState]:
        """Build the affine policy from an optimal adjustable first stage.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative B.
            u (BudgetSet): The budget set.
            x_star (np.ndarray): Optimal adjustable first-stage decision.
            opt (float): Adjustable optimum `z_AR`.

        Returns:
            tuple[AffinePolicy, ConstructionState]: The policy and its construction record.

        Raises:
            NegativeRecourseError: If B has a negative entry.
            UncoverableComponentError: If a row of B is all zeros.
            InfeasibleModelError: If the static part has no solution.
        """
        if not isinstance(u, BudgetSet):
            raise ValueError(f"The budget construction needs a budget set, got {u.type}")
        basis = column_basis(inst)
        alpha = self.residual_fraction(inst, x_star)
        beta = budget_beta(inst.ny)
        inexpensive = self.split(alpha, basis.unit_costs, u.w, beta * opt)
        expensive = [i for i in range(inst.m) if i not in inexpensive]
        self.logger.debug(f"beta={beta:.6g}, OPT={opt:.9g}, |I|={len(inexpensive)}")

        policy, target, costs = self.assemble(inst, u, basis, alpha, inexpensive)
        costs = costs.model_copy(update={"bound": (1.0 + 2.0 * beta) * opt})
        verdict, verdict_error = self.certify(inst, alpha, expensive, u.w, opt)
        state = ConstructionState(
            x_star=x_star,
            opt=opt,
            alpha=alpha,
            beta=beta,
            inexpensive=inexpensive,
            expensive=expensive,
            basis=basis,
            static_target=target,
            costs=costs,
            verdict=verdict,
            verdict_error=verdict_error,
        )
        return policy, state


def construct_affine_budget(
    inst: TwoStageInstance,
    u: BudgetSet,
    x_star: np.ndarray,
    opt: float,
    max_trials: int = ROUNDING_TRIALS,
) -> tuple[AffinePolicy, ConstructionState]:
    """Build the threshold affine policy; see `BudgetConstruction.construct`."""
    return BudgetConstruction(max_trials).construct(inst, u, x_star, opt)
