# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the LP kernel."""

from itertools import combinations

import numpy as np
import pytest
from pytest_mock import MockerFixture

from scripts.robust_policy.lp.base_lp import (
    LpBuilder,
    LpProblem,
    LpStatus,
    MalformedProblemError,
    RowSense,
    TimeLimitExceededError,
)
from scripts.robust_policy.lp.simplex import check_deadline, solve_lp, time_limit


def _two_row_problem() -> LpProblem:
    builder = LpBuilder()
    x = builder.add_variables(2, cost=[-1.0, -1.0])
    builder.add_row(x, [1.0, 2.0], RowSense.LE, 4.0)
    builder.add_row(x, [3.0, 1.0], RowSense.LE, 6.0)
    return builder.build()


def test_solve_lp_optimal_with_duals() -> None:
    """Test that a two-row LP returns its vertex optimum and Lagrangian duals."""
    expected_primal = np.array([1.6, 1.2])
    expected_dual = np.array([-0.4, -0.2])

    actual_solution = solve_lp(_two_row_problem())

    assert actual_solution.status is LpStatus.OPTIMAL
    assert actual_solution.objective == pytest.approx(-2.8)
    np.testing.assert_allclose(actual_solution.primal, expected_primal, atol=1e-9)
    np.testing.assert_allclose(actual_solution.dual, expected_dual, atol=1e-9)
    np.testing.assert_allclose(actual_solution.reduced_costs, np.zeros(2), atol=1e-9)


@pytest.mark.parametrize(
    "rows, lower, upper, expected_status, expected_objective",
    [
        ([([1.0], RowSense.GE, 2.0), ([1.0], RowSense.LE, 1.0)], 0.0, np.inf,
         LpStatus.INFEASIBLE, None),
        ([([1.0], RowSense.GE, 0.0)], 0.0, np.inf, LpStatus.UNBOUNDED, None),
        ([([1.0], RowSense.GE, -3.0)], -np.inf, np.inf, LpStatus.OPTIMAL, -3.0),
        ([([1.0], RowSense.EQ, 1.5)], 0.0, np.inf, LpStatus.OPTIMAL, 1.5),
        ([], 0.0, 2.0, LpStatus.OPTIMAL, 0.0),
    ],
    ids=["infeasible", "unbounded", "free_variable", "equality", "no_rows"],
)
def test_solve_lp_status(
    rows: list[tuple[list[float], RowSense, float]],
    lower: float,
    upper: float,
    expected_status: LpStatus,
    expected_objective: float | None,
) -> None:
    """Test the termination status of one-variable problems.

    The unbounded case minimizes `-x`, the others minimize `x`.

    Args:
        rows (list[tuple[list[float], RowSense, float]]): Coefficients, sense and rhs per row.
        lower (float): Lower bound of the variable.
        upper (float): Upper bound of the variable.
        expected_status (LpStatus): Expected status.
        expected_objective (float | None): Expected optimum, when optimal.
    """
    builder = LpBuilder()
    cost = -1.0 if expected_status is LpStatus.UNBOUNDED else 1.0
    x = builder.add_variables(1, lower=lower, upper=upper, cost=cost)
    for values, sense, rhs in rows:
        builder.add_row(x, values, sense, rhs)

    actual_solution = solve_lp(builder.build())

    assert actual_solution.status is expected_status
    if expected_objective is not None:
        assert actual_solution.objective == pytest.approx(expected_objective)


def test_solve_lp_upper_bounds_without_rows() -> None:
    """Test that boxed variables move to their upper bounds when profitable."""
    builder = LpBuilder()
    builder.add_variables(3, upper=2.0, cost=[-1.0, 0.0, 1.0])

    actual_solution = solve_lp(builder.build())

    assert actual_solution.objective == pytest.approx(-2.0)
    np.testing.assert_allclose(actual_solution.primal, [2.0, 0.0, 0.0], atol=1e-12)


def test_solve_lp_is_deterministic() -> None:
    """Test that identical problems give identical solutions."""
    expected_solution = solve_lp(_two_row_problem())

    actual_solution = solve_lp(_two_row_problem())

    assert actual_solution.iterations == expected_solution.iterations
    np.testing.assert_array_equal(actual_solution.primal, expected_solution.primal)


@pytest.mark.parametrize(
    "update, expected_message",
    [
        ({"lower": np.array([1.0, 0.0])}, "Lower bounds must be 0 or -inf"),
        ({"senses": [RowSense.LE]}, "One sense per row is required"),
        ({"rhs": np.array([np.inf, 6.0])}, "must be finite"),
    ],
    ids=["positive_lower_bound", "missing_sense", "infinite_rhs"],
)
def test_solve_lp_rejects_malformed_problems(update: dict, expected_message: str) -> None:
    """Test that malformed problems raise before any pivot.

    Args:
        update (dict): Fields replaced in a valid problem.
        expected_message (str): Expected error message fragment.
    """
    problem = _two_row_problem().model_copy(update=update)

    with pytest.raises(MalformedProblemError) as actual_error:
        solve_lp(problem)

    assert expected_message in str(actual_error.value)


def test_check_deadline_after_time_limit(mocker: MockerFixture) -> None:
    """Test that the installed deadline raises once the clock passes it.

    Args:
        mocker (MockerFixture): pytest_mock fixture for mocking.
    """
    mocker.patch("scripts.robust_policy.lp.simplex.time.monotonic", side_effect=[100.0, 200.0])

    with pytest.raises(TimeLimitExceededError):
        with time_limit(1.0):
            check_deadline()


def test_check_deadline_without_limit() -> None:
    """Test that no deadline is enforced outside of a time limit."""
    check_deadline()


def _basic_solutions(
    G: np.ndarray, h: np.ndarray, normalization: np.ndarray | None = None
) -> np.ndarray:
    # feasible basic solutions of {G x <= h}, with the extra row `normalization·x = 1` if given
    n = G.shape[1]
    active = n if normalization is None else n - 1
    combos = np.array(list(combinations(range(G.shape[0]), active)), dtype=int)
    squares = G[combos]
    rhs = h[combos]
    if normalization is not None:
        count = combos.shape[0]
        squares = np.concatenate([squares, np.broadcast_to(normalization, (count, 1, n))], axis=1)
        rhs = np.concatenate([rhs, np.ones((count, 1))], axis=1)
    regular = np.abs(np.linalg.det(squares)) > 1e-9
    if not regular.any():
        return np.zeros((0, n))
    points = np.linalg.solve(squares[regular], rhs[regular][..., None])[..., 0]
    feasible = (points @ G.T <= h + 1e-9).all(axis=1)
    result: np.ndarray = points[feasible]
    return result


def _brute_force(
    cost: np.ndarray, G: np.ndarray, h: np.ndarray
) -> tuple[LpStatus, float | None]:
    # min cost·x over {G x <= h}, where G contains -I so the polyhedron is pointed
    vertices = _basic_solutions(G, h)
    if vertices.shape[0] == 0:
        return LpStatus.INFEASIBLE, None
    rays = _basic_solutions(G, np.zeros(G.shape[0]), normalization=np.ones(G.shape[1]))
    if rays.shape[0] and float((rays @ cost).min()) < -1e-9:
        return LpStatus.UNBOUNDED, None
    return LpStatus.OPTIMAL, float((vertices @ cost).min())


@pytest.mark.slow
def test_solve_lp_matches_vertex_enumeration() -> None:
    """Test status and objective of 1000 random integer LPs against vertex enumeration.

    Variables are nonnegative and half of them carry an upper bound, so infeasible, unbounded
    and optimal problems all occur.
    """
    rng = np.random.default_rng(2024)
    actual_statuses: set[LpStatus] = set()
    for _ in range(1000):
        n, rows = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        cost = rng.integers(-5, 6, n).astype(float)
        matrix = rng.integers(-5, 6, (rows, n)).astype(float)
        rhs = rng.integers(-5, 6, rows).astype(float)
        senses = [RowSense.LE if flip else RowSense.GE for flip in rng.random(rows) < 0.5]
        upper = np.where(rng.random(n) < 0.5, rng.integers(1, 6, n), np.inf)
        builder = LpBuilder()
        x = builder.add_variables(n, cost=cost)
        builder.set_upper(x, upper)
        for row, sense in enumerate(senses):
            builder.add_row(x, matrix[row], sense, rhs[row])
        signs = np.array([1.0 if sense is RowSense.LE else -1.0 for sense in senses])
        boxed = np.flatnonzero(np.isfinite(upper))
        G = np.vstack([signs[:, None] * matrix, -np.eye(n), np.eye(n)[boxed]])
        h = np.concatenate([signs * rhs, np.zeros(n), upper[boxed]])
        expected_status, expected_objective = _brute_force(cost, G, h)

        actual_solution = solve_lp(builder.build())

        assert actual_solution.status is expected_status
        if expected_objective is not None:
            assert actual_solution.objective == pytest.approx(
                expected_objective, rel=1e-6, abs=1e-6
            )
        actual_statuses.add(actual_solution.status)

    assert actual_statuses == {LpStatus.OPTIMAL, LpStatus.INFEASIBLE, LpStatus.UNBOUNDED}
