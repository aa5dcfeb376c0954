# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the threshold affine construction over budget sets."""

import numpy as np
import pytest

from scripts.robust_policy.construction.base_construction import BaseConstruction
from scripts.robust_policy.construction.budget_construction import (
    BudgetConstruction,
    budget_beta,
    construct_affine_budget,
)
from scripts.robust_policy.covering.covering_problem import log_ratio
from scripts.robust_policy.instance_generator import gen_instance, make_spec
from scripts.robust_policy.model.instance import DimensionMismatchError, TwoStageInstance
from scripts.robust_policy.model.instance_file import InstanceDocument
from scripts.robust_policy.model.uncertainty import BudgetSet, IntersectionSet
from scripts.robust_policy.solver.adjustable_solver import solve_adjustable
from scripts.robust_policy.solver.affine_solver import solve_optimal_affine

TOL = 1e-6


def test_split() -> None:
    """Test that only positive fractions under the weighted threshold are inexpensive."""
    actual_split = BudgetConstruction.split(
        alpha=np.array([0.5, 0.0, 1.0]),
        unit_costs=np.array([1.0, 1.0, 4.0]),
        w=np.array([0.5, 0.5, 0.5]),
        threshold=2.0,
    )

    assert actual_split == [0]


def test_static_target() -> None:
    """Test the static requirement: the uncovered share on I, one elsewhere."""
    actual_target = BaseConstruction.static_target(np.array([0.25, 1.5, 0.5]), [0, 1])

    np.testing.assert_allclose(actual_target, [0.75, 0.0, 1.0])


def test_residual_fraction_rejects_shape(identity_instance: TwoStageInstance) -> None:
    """Test that a first stage of the wrong length raises a dimension error.

    Args:
        identity_instance (TwoStageInstance): Two-component instance.
    """
    with pytest.raises(DimensionMismatchError):
        BaseConstruction.residual_fraction(identity_instance, np.zeros(3))


def test_budget_beta() -> None:
    """Test the threshold factor."""
    assert budget_beta(100) == pytest.approx(4.0 * log_ratio(100))


# Even seeds draw U1 budgets, odd seeds U2, with m cycling through 4..8
CONSTRUCTION_CASES = [
    pytest.param(
        f"gaussian_u{1 + seed % 2}",
        4 + seed % 5,
        seed,
        marks=[pytest.mark.slow] if seed >= 2 else [],
        id=f"u{1 + seed % 2}_m{4 + seed % 5}_seed{seed}",
    )
    for seed in range(20)
]


@pytest.mark.parametrize("family, m, seed", CONSTRUCTION_CASES)
def test_construct_affine_budget_guarantee(family: str, m: int, seed: int) -> None:
    """Test feasibility and the cost guarantees of the constructed policy.

    Args:
        family (str): Gaussian family.
        m (int): Number of components.
        seed (int): Generator seed.
    """
    inst, u = gen_instance(make_spec(family, m, seed)).to_problem()
    adjustable = solve_adjustable(inst, u)

    actual_policy, actual_state = construct_affine_budget(
        inst, u, adjustable.x, adjustable.objective
    )
    actual_costs = actual_state.costs

    assert actual_costs.violation <= TOL
    expected_bound = (1.0 + 2.0 * actual_state.beta) * adjustable.objective
    assert actual_costs.bound == pytest.approx(expected_bound)
    assert actual_costs.total_cost <= actual_costs.bound + TOL
    assert actual_costs.linear_cost <= actual_state.beta * adjustable.objective + TOL
    assert solve_optimal_affine(inst, u).objective <= actual_costs.total_cost + TOL
    assert set(actual_state.inexpensive).isdisjoint(actual_state.expensive)
    assert (actual_state.verdict is None) != (actual_state.verdict_error is None)
    assert actual_policy.P.shape == (inst.ny, inst.m)


def test_construct_affine_budget_without_expensive(
    identity_instance: TwoStageInstance, simplex_set: BudgetSet
) -> None:
    """Test that a first stage covering everything leaves a purely static policy.

    Args:
        identity_instance (TwoStageInstance): `A = B = I` with first-stage costs 0.4.
        simplex_set (BudgetSet): The two-dimensional simplex.
    """
    _, actual_state = construct_affine_budget(identity_instance, simplex_set, np.ones(2), 0.8)

    assert actual_state.inexpensive == []
    assert actual_state.verdict is None
    assert actual_state.verdict_error == "no expensive component to certify"
    assert actual_state.costs.total_cost == pytest.approx(0.8, abs=TOL)


def test_construct_affine_budget_rejects_intersection(
    gaussian_document: InstanceDocument, disjoint_set: IntersectionSet
) -> None:
    """Test that the budget construction refuses other set types.

    Args:
        gaussian_document (InstanceDocument): A generated Gaussian instance.
        disjoint_set (IntersectionSet): Two disjoint budgets on four components.
    """
    inst, _ = gaussian_document.to_problem()

    with pytest.raises(ValueError):
        construct_affine_budget(inst, disjoint_set, np.zeros(4), 1.0)  # type: ignore[arg-type]
