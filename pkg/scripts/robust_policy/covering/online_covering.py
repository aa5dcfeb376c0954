# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for online fractional covering and the greedy scenario sequence over budget blocks."""

import logging
from itertools import combinations
from typing import Sequence

import numpy as np
from pydantic import Field

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.constants import (
    EXHAUSTIVE_BLOCK_SIZE,
    MEMBERSHIP_TOL,
    ONLINE_MIN_STEP,
    ONLINE_STEP_FRACTION,
)
from scripts.robust_policy.covering.covering_problem import (
    CoveringError,
    CoveringProblem,
    UncoverableComponentError,
    solve_covering_lp,
)
from scripts.robust_policy.model.uncertainty import BudgetBlock

logger = logging.getLogger(__name__)

_TIE_TOL = 1e-12


class OnlineCoveringState(ArrayModel):
    """Solution of the online covering algorithm after a sequence of arrivals.

    `y` only grows; `cost` is `d·y`.
    """

    y: Vector
    cost: float = 0.0
    history: list[list[int]] = Field(default_factory=list)

    @classmethod
    def initial(cls, cp: CoveringProblem) -> "OnlineCoveringState":
        """Empty state before any arrival."""
        return cls(y=np.zeros(cp.n))

    def coverage(self, cp: CoveringProblem) -> np.ndarray:
        """Row activities `Bc y`."""
        activity: np.ndarray = cp.Bc @ self.y
        return activity


def _cover_row(cp: CoveringProblem, y: np.ndarray, row: int) -> None:
    # Multiplicative primal-dual increase on the columns of the row until it reaches 1
    entries = cp.Bc[row]
    support = np.flatnonzero(entries > 0)
    if support.size == 0:
        raise UncoverableComponentError(f"Row {row} arrived but has no positive entry")
    free = support[cp.d[support] == 0]
    coverage = float(entries @ y)
    if coverage >= 1.0:
        return
    if free.size:
        y[free[0]] += (1.0 - coverage) / entries[free[0]]
        return
    b, d = entries[support], cp.d[support]
    while coverage < 1.0:
        growth = b * (y[support] + 1.0 / cp.n) / d
        gain = float(b @ growth)
        step = max(min(1.0 - coverage, ONLINE_STEP_FRACTION), ONLINE_MIN_STEP) / gain
        y[support] += step * growth
        coverage = float(entries @ y)


def online_cover_step(
    state: OnlineCoveringState, cp: CoveringProblem, rows: Sequence[int]
) -> tuple[OnlineCoveringState, float]:
    """Serve the arrival of the requirement `Bc_i·y >= 1` for every i in `rows`.

    Rows are served in increasing order. A row already covered costs nothing, so a repeated
    arrival is accepted and leaves the state unchanged.

    Args:
        state (OnlineCoveringState): Current state, left untouched.
        cp (CoveringProblem): The covering data.
        rows (Sequence[int]): Indices of the arriving rows.

    Returns:
        tuple[OnlineCoveringState, float]: The new state and the augmenting cost `d·(y' - y)`.

    Raises:
        UncoverableComponentError: If an arriving row is all zeros.
    """
    arrived = sorted(int(i) for i in rows)
    y = np.array(state.y)
    for row in arrived:
        _cover_row(cp, y, row)
    augment = float(cp.d @ (y - state.y))
    history = [*state.history, arrived]
    return OnlineCoveringState(y=y, cost=state.cost + augment, history=history), augment


def offline_augment_cost(state: OnlineCoveringState, cp: CoveringProblem, h: np.ndarray) -> float:
    """Cheapest augmentation `min {d·y : Bc(y + y_r) >= h, y >= 0}` of the current state.

    Args:
        state (OnlineCoveringState): Current state.
        cp (CoveringProblem): The covering data.
        h (np.ndarray): Requirement vector.

    Returns:
        float: The offline augmenting cost.
    """
    residual = np.asarray(h, dtype=float) - state.coverage(cp)
    value, _ = solve_covering_lp(cp.Bc, cp.d, residual)
    return value


def greedy_augment_oracle(
    state: OnlineCoveringState, cp: CoveringProblem, block: BudgetBlock
) -> tuple[np.ndarray, float]:
    """0/1 scenario of a budget block whose arrival costs the online algorithm the most.

    Blocks with at most `EXHAUSTIVE_BLOCK_SIZE` indices are searched exhaustively, ties going
    to the lexicographically smallest support; larger blocks are filled greedily by marginal
    augmenting cost while the budget allows.

    Args:
        state (OnlineCoveringState): Current state, left untouched.
        cp (CoveringProblem): The covering data.
        block (BudgetBlock): Eligible indices and their weights.

    Returns:
        tuple[np.ndarray, float]: The scenario b and its simulated augmenting cost.
    """
    order = np.argsort(block.support, kind="stable")
    support = [block.support[k] for k in order]
    weight = dict(zip(support, block.weights[order].tolist()))

    def augment(rows: Sequence[int]) -> float:
        return online_cover_step(state, cp, rows)[1] if rows else 0.0

    def fits(rows: Sequence[int]) -> bool:
        return sum(weight[i] for i in rows) <= 1.0 + MEMBERSHIP_TOL

    if len(support) <= EXHAUSTIVE_BLOCK_SIZE:
        scored: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
        for size in range(1, len(support) + 1):
            scored.extend(
                (subset, augment(subset))
                for subset in combinations(support, size)
                if fits(subset)
            )
        best_cost = max(cost for _, cost in scored)
        chosen = list(min(subset for subset, cost in scored if cost >= best_cost - _TIE_TOL))
    else:
        chosen = []
        best_cost = 0.0
        while True:
            options = [i for i in support if i not in chosen and fits([*chosen, i])]
            gains = [(augment([*chosen, i]), i) for i in options]
            improving = [(cost, i) for cost, i in gains if cost > best_cost + _TIE_TOL]
            if not improving:
                break
            best_cost, pick = max(improving, key=lambda pair: (pair[0], -pair[1]))
            chosen.append(pick)

    scenario = np.zeros(cp.m)
    scenario[chosen] = 1.0
    return scenario, best_cost


class GreedySequence(ArrayModel):
    """Scenarios committed round by round, one per block.

    `nu[r]` is the online cost after r rounds, `nu[0] = 0`.
    """

    scenarios: Matrix
    blocks: list[int]
    nu: Vector
    state: OnlineCoveringState

    @property
    def total(self) -> float:
        """Online cost of the whole sequence."""
        return float(self.nu[-1])


def build_greedy_sequence(cp: CoveringProblem, blocks: list[BudgetBlock]) -> GreedySequence:
    """Commit, round by round, the block scenario with the largest online augmenting cost.

    Ties between blocks go to the lowest block index.

    Args:
        cp (CoveringProblem): The covering data.
        blocks (list[BudgetBlock]): Pairwise disjoint budget blocks.

    Returns:
        GreedySequence: Scenarios, block order and prefix costs.

    Raises:
        CoveringError: If two blocks share an index.
    """
    seen: set[int] = set()
    for block in blocks:
        if not seen.isdisjoint(block.support):
            raise CoveringError("Greedy sequences need pairwise disjoint blocks")
        seen.update(block.support)

    state = OnlineCoveringState.initial(cp)
    remaining = list(range(len(blocks)))
    scenarios: list[np.ndarray] = []
    order: list[int] = []
    nu = [0.0]
    while remaining:
        proposals = [(greedy_augment_oracle(state, cp, blocks[s]), s) for s in remaining]
        (scenario, _), chosen = max(
            proposals, key=lambda proposal: (proposal[0][1], -proposal[1])
        )
        state, committed = online_cover_step(state, cp, np.flatnonzero(scenario).tolist())
        logger.debug(f"Round {len(order) + 1}: block {chosen}, augment {committed:.6g}")
        scenarios.append(scenario)
        order.append(chosen)
        nu.append(nu[-1] + committed)
        remaining.remove(chosen)

    return GreedySequence(
        scenarios=np.array(scenarios).reshape(len(scenarios), cp.m),
        blocks=order,
        nu=np.array(nu),
        state=state,
    )
