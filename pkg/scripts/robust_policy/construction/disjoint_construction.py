# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the threshold construction over an intersection of disjoint budgets.

Thresholds come from the online covering cost of a greedy block-by-block scenario on the
rescaled matrix `B~` whose row i is `B_i / alpha_i`.
"""

import numpy as np

from scripts.robust_policy.arrays import ArrayModel, Vector
from scripts.robust_policy.constants import ROUNDING_TRIALS
from scripts.robust_policy.construction.base_construction import (
    BaseConstruction,
    CostDecomposition,
)
from scripts.robust_policy.covering.certificate import Verdict, structural_certificate
from scripts.robust_policy.covering.covering_problem import (
    CoveringError,
    CoveringProblem,
    log_ratio,
)
from scripts.robust_policy.covering.online_covering import GreedySequence, build_greedy_sequence
from scripts.robust_policy.model.instance import TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy
from scripts.robust_policy.model.uncertainty import BudgetBlock, IntersectionSet
from scripts.robust_policy.solver.fast_affine_solver import ColumnBasis, column_basis


def disjoint_beta(n: int) -> float:
    """Threshold factor `8 ln n / ln ln n` with small-n guards."""
    return 8.0 * log_ratio(n)


class DisjointConstructionState(ArrayModel):
    """Inputs, split and diagnostics of a disjoint-budget construction.

    Per block l (in the order of `u.blocks`): `thresholds[l] = beta·(nu_r - nu_{r-1})` for the
    round r the greedy sequence served it, and `inexpensive[l]` the indices of the block with
    `alpha_i > 0` and `alpha_i z(e_i) <= thresholds[l]·w_li`. `T` holds the components with
    `alpha_i <= 0`, `J1` those outside every inexpensive set with positive alpha covered to one
    half by the online solution and `J2` the remaining expensive ones; `verdicts[l]` certifies
    `J2 ∩ S_l` with `gamma = 2·(nu_r - nu_{r-1})`.
    """

    x_star: Vector
    alpha: Vector
    beta: float
    sequence: GreedySequence
    thresholds: Vector
    inexpensive: list[list[int]]
    T: list[int]
    J1: list[int]
    J2: list[int]
    basis: ColumnBasis
    static_target: Vector
    costs: CostDecomposition
    verdicts: list[Verdict | None]
    verdict_errors: list[str | None]

    @property
    def nu_total(self) -> float:
        """Online cost `nu_L` of the whole greedy sequence."""
        return self.sequence.total

    @property
    def linear_bound(self) -> float:
        """Guarantee `beta·nu_L` on the linear part."""
        return self.beta * self.nu_total


class DisjointConstruction(BaseConstruction):
    """Affine policy for an intersection of disjoint budgets."""

    @staticmethod
    def restrict(block: BudgetBlock, alpha: np.ndarray) -> BudgetBlock:
        """Part of a block on the components with positive alpha."""
        keep = [k for k, i in enumerate(block.support) if alpha[i] > 0]
        return BudgetBlock(
            support=[block.support[k] for k in keep], weights=block.weights[keep]
        )

    def certify(
        self,
        cp: CoveringProblem,
        blocks: list[BudgetBlock],
        J2: list[int],
        increments: np.ndarray,
    ) -> tuple[list[Verdict | None], list[str | None]]:
        """Structural verdicts on `J2 ∩ S_l` for every block.

        Args:
            cp (CoveringProblem): The rescaled covering data.
            blocks (list[BudgetBlock]): Blocks of the set.
            J2 (list[int]): Expensive components not covered to one half online.
            increments (np.ndarray): Online cost increment of the round serving each block.

        Returns:
            tuple[list[Verdict | None], list[str | None]]: Verdicts and failure reasons.
        """
        members = set(J2)
        verdicts: list[Verdict | None] = []
        errors: list[str | None] = []
        for block, increment in zip(blocks, increments):
            positions = [k for k, i in enumerate(block.support) if i in members]
            rows = [block.support[k] for k in positions]
            if not rows or increment <= 0:
                verdicts.append(None)
                errors.append("no expensive component to certify")
                continue
            try:
                verdicts.append(
                    structural_certificate(
                        cp,
                        rows,
                        block.weights[positions],
                        2.0 * increment,
                        max_trials=self.max_trials,
                    )
                )
                errors.append(None)
            except (CoveringError, ValueError) as error:
                self.logger.warning(f"Block components not certified: {error}")
                verdicts.append(None)
                errors.append(str(error))
        return verdicts, errors

    def construct(
        self,
        inst: TwoStageInstance,
        u: IntersectionSet,
        x_star: np.ndarray,
        opt: float | None = None,
    ) -> tuple[AffinePolicy, DisjointConstructionState]:
        """Build the affine policy from an optimal adjustable first stage.

        Args:
            inst (TwoStageInstance): Instance with a nonnegative B.
            u (IntersectionSet): Intersection of pairwise disjoint budgets.
            x_star (np.ndarray): Optimal adjustable first-stage decision.
            opt (float | None): Adjustable optimum; when given the cost decomposition carries
                the bound `OPT + (2 + 2 beta)·nu_L`.

        Returns:
            tuple[AffinePolicy, DisjointConstructionState]: The policy and its record.

        Raises:
            CoveringError: If two blocks share an index.
            NegativeRecourseError: If B has a negative entry.
            UncoverableComponentError: If a row of B is all zeros.
            InfeasibleModelError: If the static part has no solution.
        """
        if not isinstance(u, IntersectionSet):
            raise ValueError(f"The disjoint construction needs an intersection, got {u.type}")
        basis = column_basis(inst)
        alpha = self.residual_fraction(inst, x_star)
        beta = disjoint_beta(inst.ny)
        cp_tilde = self.rescaled_covering(inst, alpha)

        restricted = [self.restrict(block, alpha) for block in u.blocks]
        sequence = build_greedy_sequence(cp_tilde, restricted)
        increments = np.zeros(len(u.blocks))
        for round_index, block_index in enumerate(sequence.blocks):
            increments[block_index] = sequence.nu[round_index + 1] - sequence.nu[round_index]
        thresholds = beta * increments

        inexpensive = [
            [
                i
                for i, weight in zip(block.support, block.weights.tolist())
                if alpha[i] > 0 and alpha[i] * basis.unit_costs[i] <= threshold * weight
            ]
            for block, threshold in zip(u.blocks, thresholds.tolist())
        ]
        union = sorted(i for rows in inexpensive for i in rows)
        self.logger.debug(
            f"beta={beta:.6g}, nu_L={sequence.total:.9g}, |I|={len(union)} over "
            f"{len(u.blocks)} blocks"
        )

        policy, target, costs = self.assemble(inst, u, basis, alpha, union)
        if opt is not None:
            bound = opt + (2.0 + 2.0 * beta) * sequence.total
            costs = costs.model_copy(update={"bound": bound})

        T = [i for i in range(inst.m) if alpha[i] <= 0]
        online_coverage = sequence.state.coverage(cp_tilde)
        cheap = set(union)
        J1 = [
            i
            for i in range(inst.m)
            if i not in cheap and alpha[i] > 0 and online_coverage[i] >= 0.5
        ]
        excluded = cheap | set(T) | set(J1)
        J2 = [i for i in range(inst.m) if i not in excluded]
        verdicts, verdict_errors = self.certify(cp_tilde, u.blocks, J2, increments)

        state = DisjointConstructionState(
            x_star=x_star,
            alpha=alpha,
            beta=beta,
            sequence=sequence,
            thresholds=thresholds,
            inexpensive=inexpensive,
            T=T,
            J1=J1,
            J2=J2,
            basis=basis,
            static_target=target,
            costs=costs,
            verdicts=verdicts,
            verdict_errors=verdict_errors,
        )
        return policy, state


def construct_affine_disjoint(
    inst: TwoStageInstance,
    u: IntersectionSet,
    x_star: np.ndarray,
    opt: float | None = None,
    max_trials: int = ROUNDING_TRIALS,
) -> tuple[AffinePolicy, DisjointConstructionState]:
    """Build the disjoint-budget affine policy; see `DisjointConstruction.construct`."""
    return DisjointConstruction(max_trials).construct(inst, u, x_star, opt)
