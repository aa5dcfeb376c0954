# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for vertex enumeration and the fully adjustable solver."""

import math

import numpy as np
import pytest

from scripts.robust_policy.model.instance import (
    FirstStageSet,
    InfeasibleModelError,
    TwoStageInstance,
)
from scripts.robust_policy.model.uncertainty import BudgetSet, PolyhedralSet, UncertaintySet
from scripts.robust_policy.solver.adjustable_solver import (
    enumerate_vertices,
    maximal_scenarios,
    recourse_cost,
    solve_adjustable,
    solve_adjustable_one_shot,
    solve_static,
)
from scripts.robust_policy.solver.base_solver import RecourseInfeasibleError, TooLargeError
from tests.robust_policy.conftest import random_instance, relative_gap

HALF_BUDGET = BudgetSet(w=[0.5, 0.5, 0.5])


def test_enumerate_budget_vertices() -> None:
    """Test the corners of `0.5 (h1 + h2 + h3) <= 1` and their maximal subset."""
    expected_maximal = {(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)}

    actual_vertices = enumerate_vertices(HALF_BUDGET)
    actual_maximal = {tuple(point) for point in maximal_scenarios(actual_vertices)}

    assert actual_vertices.size == 7
    assert actual_vertices.exhaustive
    assert actual_maximal == expected_maximal


def test_enumerate_generic_vertices_match_budget() -> None:
    """Test that the generic enumeration finds the same corners as the budget shortcut."""
    polyhedral = PolyhedralSet(R=[[0.5, 0.5, 0.5]], r=[1.0])

    actual_points = enumerate_vertices(polyhedral).points

    np.testing.assert_allclose(actual_points, enumerate_vertices(HALF_BUDGET).points, atol=1e-9)


def test_enumerate_budget_fractional_vertex() -> None:
    """Test that a coordinate filling the remaining budget is listed."""
    actual_points = {tuple(point) for point in enumerate_vertices(BudgetSet(w=[0.4, 0.8])).points}

    assert (1.0, 0.75) in actual_points
    assert (0.5, 1.0) in actual_points


@pytest.mark.parametrize(
    "u",
    [BudgetSet(w=np.full(17, 0.1)), PolyhedralSet(R=np.full((1, 9), 0.5), r=[1.0])],
    ids=["budget_m17", "polyhedral_m9"],
)
def test_enumerate_vertices_too_large(u: UncertaintySet) -> None:
    """Test that enumeration refuses sets beyond its dimension limits.

    Args:
        u (UncertaintySet): Set too large to enumerate.
    """
    with pytest.raises(TooLargeError):
        enumerate_vertices(u)


@pytest.mark.parametrize(
    "inst, x, h, expected_cost",
    [
        (
            TwoStageInstance(A=np.eye(2), B=np.eye(2), c=[1.0, 1.0], d=[1.0, 1.0]),
            [0.5, 0.0],
            [1.0, 1.0],
            1.5,
        ),
        (
            TwoStageInstance(A=[[1.0], [0.0]], B=[[1.0], [0.0]], c=[1.0], d=[1.0]),
            [0.0],
            [0.0, 1.0],
            math.inf,
        ),
        (
            TwoStageInstance(A=np.eye(2), B=np.eye(2), c=[1.0, 1.0], d=[1.0, 1.0]),
            [2.0, 2.0],
            [1.0, 1.0],
            0.0,
        ),
    ],
    ids=["partial_cover", "uncoverable_row", "covered_by_first_stage"],
)
def test_recourse_cost(
    inst: TwoStageInstance, x: list[float], h: list[float], expected_cost: float
) -> None:
    """Test the second-stage value, infinite when no recourse exists.

    Args:
        inst (TwoStageInstance): The instance.
        x (list[float]): First-stage decision.
        h (list[float]): Scenario.
        expected_cost (float): Expected value of the recourse problem.
    """
    actual_cost, _ = recourse_cost(inst, np.array(x), np.array(h))

    assert actual_cost == pytest.approx(expected_cost)


def test_solve_adjustable_identity(
    identity_instance: TwoStageInstance, simplex_set: BudgetSet
) -> None:
    """Test the adjustable optimum and its certificate on the unit problem.

    Args:
        identity_instance (TwoStageInstance): `A = B = I` with first-stage costs 0.4.
        simplex_set (BudgetSet): The two-dimensional simplex.
    """
    actual_solution = solve_adjustable(identity_instance, simplex_set)

    assert actual_solution.objective == pytest.approx(0.8, abs=1e-7)
    np.testing.assert_allclose(actual_solution.x, [1.0, 1.0], atol=1e-7)
    assert actual_solution.master.gap <= 1e-6
    assert actual_solution.worst.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5), ids=lambda seed: f"seed{seed}")
def test_scenario_generation_matches_one_shot(seed: int) -> None:
    """Test that scenario generation reaches the value of the full vertex master.

    Args:
        seed (int): Seed of the random instance.
    """
    inst = random_instance(seed, 4)
    u = BudgetSet(w=np.random.default_rng(seed).uniform(0.3, 0.6, 4))

    actual_solution = solve_adjustable(inst, u)
    expected_solution = solve_adjustable_one_shot(inst, u)

    assert relative_gap(actual_solution.objective, expected_solution.objective) <= 1e-6
    assert actual_solution.master.lower_bounds[-1] <= actual_solution.objective + 1e-9


def test_solve_adjustable_recourse_infeasible() -> None:
    """Test that a scenario no decision can serve raises a recourse error."""
    inst = TwoStageInstance(A=[[1.0], [0.0]], B=[[1.0], [0.0]], c=[1.0], d=[1.0])

    with pytest.raises(RecourseInfeasibleError):
        solve_adjustable(inst, BudgetSet(w=[0.5, 0.5]))


def test_solve_adjustable_row_without_recourse() -> None:
    """Test that a row with no recourse column is covered by the first stage alone."""
    inst = TwoStageInstance(
        A=np.eye(2),
        B=[[1.0], [0.0]],
        c=[1.0, 1.0],
        d=[0.5],
        first_stage_set=FirstStageSet(upper=[2.0, 2.0]),
    )

    actual_solution = solve_adjustable(inst, BudgetSet(w=[0.5, 0.5]))

    assert actual_solution.objective == pytest.approx(1.5, abs=1e-7)
    assert actual_solution.x[1] == pytest.approx(1.0, abs=1e-7)


def test_solve_adjustable_empty_first_stage() -> None:
    """Test that an empty first-stage set is reported as an infeasible model."""
    inst = TwoStageInstance(
        A=[[1.0]],
        B=[[1.0]],
        c=[1.0],
        d=[1.0],
        first_stage_set=FirstStageSet(F=[[-1.0]], g=[1.0]),
    )

    with pytest.raises(InfeasibleModelError):
        solve_adjustable(inst, BudgetSet(w=[1.0]))


def test_solve_static() -> None:
    """Test the cheapest single decision covering the all-ones requirement."""
    inst = TwoStageInstance(A=np.eye(2), B=np.eye(2), c=[1.0, 1.0], d=[2.0, 2.0])

    actual_solution = solve_static(inst, np.ones(2))

    assert actual_solution.cost == pytest.approx(2.0)
    np.testing.assert_allclose(actual_solution.x, [1.0, 1.0], atol=1e-9)


@pytest.mark.parametrize(
    "target",
    [[1.0], [1.0, -1.0]],
    ids=["wrong_length", "negative_entry"],
)
def test_solve_static_rejects_target(
    identity_instance: TwoStageInstance, target: list[float]
) -> None:
    """Test the requirement checks of the static solve.

    Args:
        identity_instance (TwoStageInstance): Two-component instance.
        target (list[float]): Malformed requirement.
    """
    with pytest.raises(ValueError):
        solve_static(identity_instance, np.array(target))
