# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for affine policies and their worst-case evaluation."""

import logging

import numpy as np

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.model.instance import DimensionMismatchError, TwoStageInstance
from scripts.robust_policy.model.uncertainty import UncertaintySet, max_linear

logger = logging.getLogger(__name__)


class AffinePolicy(ArrayModel):
    """First-stage decision x with the recourse rule `y(h) = P h + q`."""

    x: Vector
    P: Matrix
    q: Vector

    def recourse(self, h: np.ndarray) -> np.ndarray:
        """Second-stage decision for a realized scenario.

        Args:
            h (np.ndarray): Scenario.

        Returns:
            np.ndarray: The vector `P h + q`.
        """
        result: np.ndarray = self.P @ h + self.q
        return result


class PolicyReport(ArrayModel):
    """Worst-case cost and feasibility of an affine policy over an uncertainty set."""

    worst_case_objective: float
    max_constraint_violation: float
    max_nonnegativity_violation: float
    first_stage_violation: float
    worst_scenario: Vector
    constraint_witness: Vector
    nonnegativity_witness: Vector

    @property
    def max_violation(self) -> float:
        """Largest of the three violations."""
        return max(
            self.max_constraint_violation,
            self.max_nonnegativity_violation,
            self.first_stage_violation,
        )


def _check_dimensions(inst: TwoStageInstance, u: UncertaintySet, pol: AffinePolicy) -> None:
    expected = {
        "x": (inst.nx,),
        "P": (inst.ny, inst.m),
        "q": (inst.ny,),
    }
    actual = {"x": pol.x.shape, "P": pol.P.shape, "q": pol.q.shape}
    for name, shape in expected.items():
        if actual[name] != shape:
            raise DimensionMismatchError(f"Policy {name} has shape {actual[name]}, not {shape}")
    if u.m != inst.m:
        raise DimensionMismatchError(f"Set of dimension {u.m} for an instance with m={inst.m}")


def evaluate_policy(
    inst: TwoStageInstance, u: UncertaintySet, pol: AffinePolicy
) -> PolicyReport:
    """Evaluate the worst case of an affine policy with one LP per row.

    Row i of `A x + B(P h + q) >= h` is violated by `max_h (e_i - (BP)_i)·h - (A x + B q)_i`
    when positive; coordinate j of `P h + q >= 0` by `max_h (-P_j)·h - q_j`.

    Args:
        inst (TwoStageInstance): The instance.
        u (UncertaintySet): The uncertainty set.
        pol (AffinePolicy): The policy to evaluate.

    Returns:
        PolicyReport: Worst-case objective, violations and their witnesses.

    Raises:
        DimensionMismatchError: If the policy or the set do not fit the instance.
    """
    _check_dimensions(inst, u, pol)
    m = inst.m
    linear_cost, worst_scenario = max_linear(u, pol.P.T @ inst.d)
    worst_case_objective = float(inst.c @ pol.x + inst.d @ pol.q + linear_cost)

    static_cover = inst.A @ pol.x + inst.B @ pol.q
    adjusted = np.eye(m) - inst.B @ pol.P
    constraint_violation, constraint_witness = 0.0, np.zeros(m)
    for row in range(m):
        shortfall, scenario = max_linear(u, adjusted[row])
        violation = shortfall - static_cover[row]
        if violation > constraint_violation:
            constraint_violation, constraint_witness = violation, scenario

    nonnegativity_violation, nonnegativity_witness = 0.0, np.zeros(m)
    for column in range(inst.ny):
        if not (pol.P[column] < 0).any():
            # the minimum over h >= 0 sits at the origin
            violation = -pol.q[column]
            scenario = np.zeros(m)
        else:
            drop, scenario = max_linear(u, -pol.P[column])
            violation = drop - pol.q[column]
        if violation > nonnegativity_violation:
            nonnegativity_violation, nonnegativity_witness = violation, scenario

    report = PolicyReport(
        worst_case_objective=worst_case_objective,
        max_constraint_violation=constraint_violation,
        max_nonnegativity_violation=nonnegativity_violation,
        first_stage_violation=inst.first_stage_set.violation(pol.x),
        worst_scenario=worst_scenario,
        constraint_witness=constraint_witness,
        nonnegativity_witness=nonnegativity_witness,
    )
    logger.debug(
        f"Policy worst case {worst_case_objective:.9g}, violations "
        f"{constraint_violation:.3e} / {nonnegativity_violation:.3e}"
    )
    return report
