# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for exact desk-scale benchmarks: vertex enumeration, the fully adjustable optimum
and static covering solutions.

The recourse value `Q(x, h) = min {d·y : B y >= h - A x, y >= 0}` is convex and nondecreasing
in h, so its maximum over the uncertainty set is attained at a maximal vertex. Scenario
generation therefore only ever inspects the vertex list.
"""

import logging
import math
import time
from itertools import combinations

import numpy as np
from pydantic import Field

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.constants import (
    GAP_TOL,
    MAX_BUDGET_VERTEX_DIM,
    MAX_DOMINANCE_FILTER,
    MAX_GENERIC_SYSTEMS,
    MAX_GENERIC_VERTEX_DIM,
    MEMBERSHIP_TOL,
)
from scripts.robust_policy.lp.base_lp import LpBuilder, LpStatus, RowSense
from scripts.robust_policy.lp.simplex import check_deadline, solve_lp
from scripts.robust_policy.model.instance import InfeasibleModelError, TwoStageInstance
from scripts.robust_policy.model.uncertainty import BudgetSet, UncertaintySet
from scripts.robust_policy.solver.base_solver import (
    RecourseInfeasibleError,
    TooLargeError,
    check_set_dimension,
    solve_or_raise,
)

_ROUND_DECIMALS = 12
_SINGULAR_TOL = 1e-10


class VertexSet(ArrayModel):
    """Candidate extreme points of an uncertainty set, one per row of `points`.

    Rows are unique and sorted lexicographically. `exhaustive` marks a superset of the
    extreme points.
    """

    points: Matrix
    exhaustive: bool = True

    @property
    def size(self) -> int:
        """Number of points."""
        return int(self.points.shape[0])


def _unique_points(points: np.ndarray) -> np.ndarray:
    rounded = np.round(np.clip(points, 0.0, 1.0), _ROUND_DECIMALS) + 0.0
    unique: np.ndarray = np.unique(rounded, axis=0)
    return unique


def _binary_points(m: int) -> np.ndarray:
    bits: np.ndarray = ((np.arange(2**m)[:, None] >> np.arange(m)) & 1).astype(float)
    return bits


def _budget_vertices(u: BudgetSet) -> np.ndarray:
    if u.m > MAX_BUDGET_VERTEX_DIM:
        raise TooLargeError(
            f"Budget vertex enumeration is limited to m <= {MAX_BUDGET_VERTEX_DIM}"
        )
    w = u.w
    corners = _binary_points(u.m)
    corners = corners[corners @ w <= 1.0 + MEMBERSHIP_TOL]
    blocks = [corners]
    slack = 1.0 - corners @ w
    for j in np.flatnonzero(w > 0):
        base = corners[corners[:, j] == 0]
        extended = base.copy()
        extended[:, j] = np.minimum(1.0, slack[corners[:, j] == 0] / w[j])
        blocks.append(extended)
    return np.vstack(blocks)


def _generic_vertices(u: UncertaintySet) -> np.ndarray:
    m = u.m
    if m > MAX_GENERIC_VERTEX_DIM:
        raise TooLargeError(
            f"Generic vertex enumeration is limited to m <= {MAX_GENERIC_VERTEX_DIM}"
        )
    R, r = u.constraint_rows()
    L = R.shape[0]
    systems = sum(math.comb(m, f) * math.comb(L, f) for f in range(min(m, L) + 1))
    if systems > MAX_GENERIC_SYSTEMS:
        raise TooLargeError(f"Generic vertex enumeration needs {systems} linear systems")

    found = []
    for f in range(min(m, L) + 1):
        for free in combinations(range(m), f):
            fixed = [i for i in range(m) if i not in free]
            assignments = _binary_points(len(fixed))
            for active in combinations(range(L), f):
                check_deadline()
                square = R[np.ix_(active, free)]
                if f and abs(np.linalg.det(square)) < _SINGULAR_TOL:
                    continue
                rhs = r[list(active), None] - R[np.ix_(active, fixed)] @ assignments.T
                points = np.zeros((assignments.shape[0], m))
                points[:, fixed] = assignments
                if f:
                    points[:, list(free)] = np.linalg.solve(square, rhs).T
                inside = (points >= -MEMBERSHIP_TOL).all(axis=1)
                inside &= (points <= 1.0 + MEMBERSHIP_TOL).all(axis=1)
                inside &= (points @ R.T <= r + MEMBERSHIP_TOL).all(axis=1)
                found.append(points[inside])
    return np.vstack(found)


def enumerate_vertices(u: UncertaintySet) -> VertexSet:
    """List a superset of the extreme points of the set.

    Budget sets use their 0/1 corners plus one fractional coordinate filling the budget;
    other sets solve every square system of active box and set rows.

    Args:
        u (UncertaintySet): The uncertainty set.

    Returns:
        VertexSet: Unique feasible points, lexicographically sorted.

    Raises:
        TooLargeError: If m exceeds 16 for budget sets or 8 otherwise, or too many systems.
    """
    points = _budget_vertices(u) if isinstance(u, BudgetSet) else _generic_vertices(u)
    return VertexSet(points=_unique_points(points), exhaustive=True)


def maximal_scenarios(vertices: VertexSet) -> np.ndarray:
    """Drop the points dominated componentwise by another point.

    Above `MAX_DOMINANCE_FILTER` points every point is kept.

    Args:
        vertices (VertexSet): Candidate points.

    Returns:
        np.ndarray: The undominated points, in their original order.
    """
    points = vertices.points
    if vertices.size > MAX_DOMINANCE_FILTER:
        return np.array(points)
    keep = np.ones(vertices.size, dtype=bool)
    for index, point in enumerate(points):
        above = (points >= point).all(axis=1) & (points > point).any(axis=1)
        keep[index] = not above.any()
    result: np.ndarray = points[keep]
    return result


def recourse_cost(
    inst: TwoStageInstance, x: np.ndarray, h: np.ndarray
) -> tuple[float, np.ndarray]:
    """Second-stage value `Q(x, h)`.

    Args:
        inst (TwoStageInstance): The instance.
        x (np.ndarray): First-stage decision.
        h (np.ndarray): Scenario.

    Returns:
        tuple[float, np.ndarray]: The value with a minimizer, or `inf` with an empty vector when
            no recourse is feasible.
    """
    residual = np.asarray(h, dtype=float) - inst.A @ x
    builder = LpBuilder()
    y = builder.add_variables(inst.ny, cost=inst.d)
    for row in range(inst.m):
        support = np.flatnonzero(inst.B[row])
        if support.size == 0:
            if residual[row] > MEMBERSHIP_TOL:
                return math.inf, np.zeros(0)
            continue
        builder.add_row(y[support], inst.B[row, support], RowSense.GE, residual[row])
    solution = solve_lp(builder.build())
    if solution.status is LpStatus.INFEASIBLE:
        return math.inf, np.zeros(0)
    return solution.objective, solution.primal


class ScenarioMaster(ArrayModel):
    """Final state of scenario generation.

    `optimality[s]` tells whether scenario s carries the epigraph row `z >= d·y_s` or only
    its covering rows; `lower_bounds` holds the master value per iteration.
    """

    scenarios: Matrix
    optimality: list[bool]
    lower_bounds: list[float] = Field(default_factory=list)
    x: Vector
    gap: float


class AdjustableSolution(ArrayModel):
    """Fully adjustable optimum with its first stage and a worst-case scenario."""

    objective: float
    x: Vector
    worst: Vector
    master: ScenarioMaster
    solve_time: float


class StaticSolution(ArrayModel):
    """Single `(x, y)` covering a fixed requirement."""

    x: Vector
    y: Vector
    cost: float


class AdjustableSolver:
    """Scenario generation for `min c·x + max_h Q(x, h)` over a vertex list."""

    logger = logging.getLogger(__name__)

    @staticmethod
    def _master(
        inst: TwoStageInstance, scenarios: list[np.ndarray], optimality: list[bool]
    ) -> tuple[float, np.ndarray, float] | None:
        builder = LpBuilder()
        x = builder.add_variables(inst.nx, cost=inst.c)
        z = builder.add_variables(1, lower=-np.inf, cost=1.0)
        for h, epigraph in zip(scenarios, optimality):
            y = builder.add_variables(inst.ny)
            if epigraph:
                builder.add_row(
                    np.concatenate([z, y]), np.concatenate([[1.0], -inst.d]), RowSense.GE, 0
                )
            for row in range(inst.m):
                builder.add_row(
                    np.concatenate([x, y]),
                    np.concatenate([inst.A[row], inst.B[row]]),
                    RowSense.GE,
                    h[row],
                )
        inst.first_stage_set.add_to(builder, x)
        solution = solve_lp(builder.build())
        if solution.status is LpStatus.INFEASIBLE:
            return None
        return solution.objective, solution.primal[x], float(solution.primal[z][0])

    def _require_first_stage(self, inst: TwoStageInstance) -> None:
        builder = LpBuilder()
        x = builder.add_variables(inst.nx, cost=inst.c)
        inst.first_stage_set.add_to(builder, x)
        if solve_lp(builder.build()).status is LpStatus.INFEASIBLE:
            raise InfeasibleModelError("The first-stage set is empty")

    def solve(self, inst: TwoStageInstance, u: UncertaintySet) -> AdjustableSolution:
        """Compute the fully adjustable optimum by scenario generation.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.

        Returns:
            AdjustableSolution: `z_AR`, an optimal first stage and a worst-case vertex.

        Raises:
            InfeasibleModelError: If the first-stage set is empty.
            RecourseInfeasibleError: If no first stage serves every vertex.
            TooLargeError: If the vertex enumeration is beyond its limits.
        """
        check_set_dimension(inst, u)
        self._require_first_stage(inst)
        start = time.perf_counter()
        candidates = maximal_scenarios(enumerate_vertices(u))
        self.logger.info(
            f"Scenario generation over {candidates.shape[0]} maximal vertices, m={inst.m}"
        )
        first = int(np.argmax(candidates.sum(axis=1)))
        scenarios, optimality, stored = [candidates[first]], [True], {(first, True)}
        lower_bounds: list[float] = []

        while True:
            check_deadline()
            master = self._master(inst, scenarios, optimality)
            if master is None:
                raise RecourseInfeasibleError(
                    "No first-stage decision admits a recourse for every stored scenario"
                )
            value, x_hat, z_hat = master
            lower_bounds.append(value)
            costs = np.array([recourse_cost(inst, x_hat, h)[0] for h in candidates])

            infeasible = np.flatnonzero(np.isinf(costs))
            if infeasible.size:
                index = int(infeasible[0])
                if (index, False) in stored or (index, True) in stored:
                    raise RecourseInfeasibleError(f"Vertex {candidates[index]} has no recourse")
                self.logger.debug(f"Feasibility cut on vertex {index}")
                scenarios.append(candidates[index])
                optimality.append(False)
                stored.add((index, False))
                continue

            worst = int(np.argmax(costs))
            objective = float(inst.c @ x_hat + costs[worst])
            gap = float(costs[worst] - z_hat)
            self.logger.debug(f"Master bound {value:.9g}, incumbent {objective:.9g}")
            if gap <= GAP_TOL * (1.0 + abs(objective)) or (worst, True) in stored:
                break
            scenarios.append(candidates[worst])
            optimality.append(True)
            stored.add((worst, True))

        solve_time = time.perf_counter() - start
        self.logger.info(
            f"Adjustable objective {objective:.9g} after {len(lower_bounds)} master solves "
            f"in {solve_time:.3f}s"
        )
        record = ScenarioMaster(
            scenarios=np.array(scenarios),
            optimality=optimality,
            lower_bounds=lower_bounds,
            x=x_hat,
            gap=max(gap, 0.0),
        )
        return AdjustableSolution(
            objective=objective,
            x=x_hat,
            worst=candidates[worst],
            master=record,
            solve_time=solve_time,
        )

    def solve_one_shot(self, inst: TwoStageInstance, u: UncertaintySet) -> AdjustableSolution:
        """Compute the fully adjustable optimum with every maximal vertex in one master LP.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.

        Returns:
            AdjustableSolution: Same contract as `solve`.

        Raises:
            InfeasibleModelError: If the first-stage set is empty.
            RecourseInfeasibleError: If no first stage serves every vertex.
        """
        check_set_dimension(inst, u)
        self._require_first_stage(inst)
        start = time.perf_counter()
        candidates = maximal_scenarios(enumerate_vertices(u))
        scenarios = list(candidates)
        master = self._master(inst, scenarios, [True] * len(scenarios))
        if master is None:
            raise RecourseInfeasibleError("No first-stage decision serves every vertex")
        value, x_star, _ = master
        costs = np.array([recourse_cost(inst, x_star, h)[0] for h in candidates])
        worst = int(np.argmax(costs))
        record = ScenarioMaster(
            scenarios=candidates,
            optimality=[True] * len(scenarios),
            lower_bounds=[value],
            x=x_star,
            gap=0.0,
        )
        return AdjustableSolution(
            objective=value,
            x=x_star,
            worst=candidates[worst],
            master=record,
            solve_time=time.perf_counter() - start,
        )


def solve_adjustable(inst: TwoStageInstance, u: UncertaintySet) -> AdjustableSolution:
    """Compute `z_AR` by scenario generation; see `AdjustableSolver.solve`."""
    return AdjustableSolver().solve(inst, u)


def solve_adjustable_one_shot(inst: TwoStageInstance, u: UncertaintySet) -> AdjustableSolution:
    """Compute `z_AR` with all vertices at once; see `AdjustableSolver.solve_one_shot`."""
    return AdjustableSolver().solve_one_shot(inst, u)


def solve_static(inst: TwoStageInstance, target: np.ndarray) -> StaticSolution:
    """Cheapest single `(x, y)` with `A x + B y >= target`, `x in X`, `y >= 0`.

    Args:
        inst (TwoStageInstance): The instance.
        target (np.ndarray): Nonnegative requirement of length m.

    Returns:
        StaticSolution: The decisions and their cost.

    Raises:
        InfeasibleModelError: If no static solution covers the target.
    """
    target = np.asarray(target, dtype=float)
    if target.shape != (inst.m,) or (target < 0).any():
        raise ValueError(f"Static target must be a nonnegative vector of length {inst.m}")
    builder = LpBuilder()
    x = builder.add_variables(inst.nx, cost=inst.c)
    y = builder.add_variables(inst.ny, cost=inst.d)
    for row in range(inst.m):
        builder.add_row(
            np.concatenate([x, y]),
            np.concatenate([inst.A[row], inst.B[row]]),
            RowSense.GE,
            target[row],
        )
    inst.first_stage_set.add_to(builder, x)
    solution = solve_or_raise(builder.build(), "static covering")
    return StaticSolution(x=solution.primal[x], y=solution.primal[y], cost=solution.objective)
