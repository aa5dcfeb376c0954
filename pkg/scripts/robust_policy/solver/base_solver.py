# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module defining the base for all policy solvers."""

from scripts.common.error import BaseError
from scripts.robust_policy.arrays import ArrayModel
from scripts.robust_policy.lp.base_lp import LpProblem, LpSolution, LpStatus, NumericalFailureError
from scripts.robust_policy.lp.simplex import solve_lp
from scripts.robust_policy.model.instance import (
    DimensionMismatchError,
    InfeasibleModelError,
    TwoStageInstance,
)
from scripts.robust_policy.model.policy import AffinePolicy
from scripts.robust_policy.model.uncertainty import UncertaintySet


class SolverError(BaseError):
    """Base class for errors raised by the policy solvers."""

    pass


class RecourseInfeasibleError(SolverError):
    """Error raised when some scenario admits no feasible recourse for any first stage."""

    pass


class TooLargeError(SolverError):
    """Error raised when an exact benchmark exceeds its enumeration limits."""

    pass


class PolicySolution(ArrayModel):
    """Objective and policy returned by an affine solver.

    `solve_time` is wall-clock seconds for LP assembly and solve; `num_columns` counts the
    structural LP columns.
    """

    objective: float
    policy: AffinePolicy
    solve_time: float
    num_columns: int


def check_set_dimension(inst: TwoStageInstance, u: UncertaintySet) -> None:
    """Check that the set lives in the row space of the instance.

    Args:
        inst (TwoStageInstance): The instance.
        u (UncertaintySet): The uncertainty set.

    Raises:
        DimensionMismatchError: If the dimensions differ.
    """
    if u.m != inst.m:
        raise DimensionMismatchError(f"Set of dimension {u.m} for an instance with m={inst.m}")


def solve_or_raise(problem: LpProblem, context: str) -> LpSolution:
    """Solve an LP that must have an optimum.

    Args:
        problem (LpProblem): The problem.
        context (str): Name of the model, used in error messages.

    Returns:
        LpSolution: The optimal solution.

    Raises:
        InfeasibleModelError: If the LP is infeasible.
        NumericalFailureError: If the LP is unbounded, which the robust models never are.
    """
    solution = solve_lp(problem)
    if solution.status is LpStatus.INFEASIBLE:
        raise InfeasibleModelError(f"The {context} LP is infeasible")
    if solution.status is LpStatus.UNBOUNDED:
        raise NumericalFailureError(f"The {context} LP reported an unbounded ray")
    return solution
