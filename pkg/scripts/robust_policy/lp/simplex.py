# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Bounded-variable revised simplex, the LP kernel behind every robust policy solve."""

import logging
import time
import warnings
from contextlib import contextmanager
from contextvars import ContextVar
from enum import IntEnum
from typing import Iterator

import numpy as np
import scipy.sparse as sp
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from scripts.robust_policy.constants import (
    BLAND_DEGENERACY_FACTOR,
    DEADLINE_CHECK_INTERVAL,
    ITERATION_CAP_FACTOR,
    ITERATION_CAP_OFFSET,
    REFACTOR_INTERVAL,
    TOL_DUAL,
    TOL_FEAS,
    TOL_PIVOT,
)
from scripts.robust_policy.lp.base_lp import (
    LpProblem,
    LpSolution,
    LpStatus,
    MalformedProblemError,
    NumericalFailureError,
    RowSense,
    TimeLimitExceededError,
)

_DEADLINE: ContextVar[float | None] = ContextVar("lp_deadline", default=None)

# Basic values drifting past a bound by more than this after refactoring abort the solve
_RESIDUAL_FAILURE = 1e-4
_TIE_TOL = 1e-12


@contextmanager
def time_limit(seconds: float | None) -> Iterator[None]:
    """Install a wall-clock deadline for every solve started in the current context.

    Nested limits keep the earliest deadline.

    Args:
        seconds (float | None): Seconds from now, or None for no limit.

    Yields:
        None
    """
    if seconds is None:
        yield
        return
    deadline = time.monotonic() + seconds
    current = _DEADLINE.get()
    token = _DEADLINE.set(deadline if current is None else min(current, deadline))
    try:
        yield
    finally:
        _DEADLINE.reset(token)


def check_deadline() -> None:
    """Raise when the deadline installed by `time_limit` has passed.

    Raises:
        TimeLimitExceededError: If the current context is out of time.
    """
    deadline = _DEADLINE.get()
    if deadline is not None and time.monotonic() > deadline:
        raise TimeLimitExceededError("Time limit exceeded")


class _State(IntEnum):
    BASIC = 0
    AT_LOWER = 1
    AT_UPPER = 2
    FREE = 3


class BoundedSimplex:
    """Two-phase revised simplex over `[A | -I | artificials]` with bounded variables.

    Every row `a_i x (sense) b_i` gets a logical variable `s_i = a_i x` whose bounds carry the
    sense and right-hand side, so the working system is homogeneous. Rows whose initial
    activity violates those bounds get an artificial column, removed by phase one. The basis
    inverse is kept explicitly with product-form updates and refactored through an LU
    decomposition every `REFACTOR_INTERVAL` pivots.
    """

    logger = logging.getLogger(__name__)

    def __init__(self, problem: LpProblem) -> None:
        """Initialize the simplex state from a validated problem.

        Args:
            problem (LpProblem): Problem to solve.
        """
        self.problem = problem
        nv, nc = problem.num_variables, problem.num_rows
        self.nv, self.nc = nv, nc
        matrix = problem.matrix.reshape(nc, nv)

        scale = np.abs(matrix).max(axis=1) if nv > 0 else np.zeros(nc)
        scale[scale == 0.0] = 1.0
        self.row_scale: np.ndarray = scale
        scaled = matrix / scale[:, None]
        rhs = problem.rhs / scale

        senses = np.array([sense.value for sense in problem.senses], dtype=object)
        has_lower = (senses == RowSense.GE.value) | (senses == RowSense.EQ.value)
        has_upper = (senses == RowSense.LE.value) | (senses == RowSense.EQ.value)
        logical_lower = np.where(has_lower, rhs, -np.inf)
        logical_upper = np.where(has_upper, rhs, np.inf)

        structural = self._home_values(problem.lower, problem.upper)
        activity = scaled @ structural if nv > 0 else np.zeros(nc)
        below = activity < logical_lower
        above = activity > logical_upper
        needs_artificial = below | above
        target = np.where(below, logical_lower, np.where(above, logical_upper, activity))
        artificial_rows = np.flatnonzero(needs_artificial)
        sigma = np.sign(target[artificial_rows] - activity[artificial_rows])
        na = artificial_rows.shape[0]
        self.na = na

        self.columns = sp.hstack(
            [
                sp.csc_matrix(scaled),
                -sp.identity(nc, format="csc"),
                sp.csc_matrix((sigma, (artificial_rows, np.arange(na))), shape=(nc, na)),
            ],
            format="csc",
        )
        self.columns.sort_indices()
        total = nv + nc + na
        self.lower = np.concatenate([problem.lower, logical_lower, np.zeros(na)])
        self.upper = np.concatenate([problem.upper, logical_upper, np.full(na, np.inf)])

        self.x = np.zeros(total)
        self.x[:nv] = structural
        self.x[nv : nv + nc] = target
        self.x[nv + nc :] = np.abs(target[artificial_rows] - activity[artificial_rows])

        self.state = np.empty(total, dtype=int)
        self.state[:nv] = [
            self._nonbasic_state(lo, hi) for lo, hi in zip(problem.lower, problem.upper)
        ]
        self.state[nv : nv + nc] = _State.BASIC
        self.state[nv + artificial_rows] = np.where(
            below[artificial_rows], _State.AT_LOWER, _State.AT_UPPER
        )
        self.state[nv + nc :] = _State.BASIC

        self.head = nv + np.arange(nc)
        self.head[artificial_rows] = nv + nc + np.arange(na)
        diagonal = np.full(nc, -1.0)
        diagonal[artificial_rows] = sigma
        self.basis_inverse = np.diag(1.0 / diagonal)

        self.iterations = 0
        self.iteration_cap = ITERATION_CAP_FACTOR * (nv + nc) + ITERATION_CAP_OFFSET
        self.bland_threshold = BLAND_DEGENERACY_FACTOR * (nv + nc)
        self._pivots_since_refactor = 0

    @staticmethod
    def _home_values(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
        return np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))

    @staticmethod
    def _nonbasic_state(lower: float, upper: float) -> _State:
        if np.isfinite(lower):
            return _State.AT_LOWER
        if np.isfinite(upper):
            return _State.AT_UPPER
        return _State.FREE

    def solve(self) -> LpSolution:
        """Run both phases.

        Returns:
            LpSolution: Status, primal and dual values.

        Raises:
            NumericalFailureError: If the iteration cap is reached or the basis degenerates.
            TimeLimitExceededError: If the context deadline passes during the solve.
        """
        nv, nc = self.nv, self.nc
        if self.na > 0:
            phase_one_cost = np.zeros(self.x.shape[0])
            phase_one_cost[nv + nc :] = 1.0
            if self._run_phase(phase_one_cost) is LpStatus.UNBOUNDED:
                raise NumericalFailureError("Phase one reported an unbounded ray")
            infeasibility = float(self.x[nv + nc :].sum())
            self.logger.debug(
                f"Phase one finished after {self.iterations} iterations, "
                f"infeasibility {infeasibility:.3e}"
            )
            if infeasibility > TOL_FEAS:
                return LpSolution(status=LpStatus.INFEASIBLE, iterations=self.iterations)
            self.upper[nv + nc :] = 0.0

        phase_two_cost = np.zeros(self.x.shape[0])
        phase_two_cost[:nv] = self.problem.cost
        if self._run_phase(phase_two_cost) is LpStatus.UNBOUNDED:
            return LpSolution(status=LpStatus.UNBOUNDED, iterations=self.iterations)
        self._refactor()
        return self._extract(phase_two_cost)

    def _run_phase(self, cost: np.ndarray) -> LpStatus:
        degenerate_pivots = 0
        bland = False
        while True:
            self._tick()
            duals = cost[self.head] @ self.basis_inverse
            reduced = cost - self.columns.T @ duals
            entering, direction = self._choose_entering(reduced, bland)
            if entering is None:
                return LpStatus.OPTIMAL

            alpha = self._ftran(entering)
            step, leaving_row = self._ratio_test(entering, direction, alpha, bland)
            if np.isinf(step):
                return LpStatus.UNBOUNDED
            self._apply_step(entering, direction, alpha, step, leaving_row)

            if step <= _TIE_TOL:
                degenerate_pivots += 1
                if not bland and degenerate_pivots > self.bland_threshold:
                    self.logger.warning(
                        f"Engaging Bland's rule after {degenerate_pivots} degenerate pivots"
                    )
                    bland = True
            else:
                degenerate_pivots = 0
                bland = False

    def _tick(self) -> None:
        self.iterations += 1
        if self.iterations > self.iteration_cap:
            raise NumericalFailureError(
                f"Iteration cap of {self.iteration_cap} reached on a "
                f"{self.nc}x{self.nv} problem"
            )
        if self.iterations % DEADLINE_CHECK_INTERVAL == 0:
            check_deadline()
        if self._pivots_since_refactor >= REFACTOR_INTERVAL:
            self._refactor()

    def _choose_entering(self, reduced: np.ndarray, bland: bool) -> tuple[int | None, int]:
        movable = self.lower < self.upper
        can_increase = (self.state == _State.AT_LOWER) | (self.state == _State.FREE)
        can_decrease = (self.state == _State.AT_UPPER) | (self.state == _State.FREE)
        increase = movable & can_increase & (reduced < -TOL_DUAL)
        decrease = movable & can_decrease & (reduced > TOL_DUAL)
        candidates = increase | decrease
        if not candidates.any():
            return None, 0
        if bland:
            entering = int(np.flatnonzero(candidates)[0])
        else:
            entering = int(np.argmax(np.where(candidates, np.abs(reduced), -1.0)))
        return entering, 1 if increase[entering] else -1

    def _ftran(self, column: int) -> np.ndarray:
        start, stop = self.columns.indptr[column], self.columns.indptr[column + 1]
        rows = self.columns.indices[start:stop]
        values = self.columns.data[start:stop]
        alpha: np.ndarray = self.basis_inverse[:, rows] @ values
        return alpha

    def _ratio_test(
        self, entering: int, direction: int, alpha: np.ndarray, bland: bool
    ) -> tuple[float, int | None]:
        # basic values move by -step * rate
        rate = direction * alpha
        basic_values = self.x[self.head]
        basic_lower = self.lower[self.head]
        basic_upper = self.upper[self.head]
        limits = np.full(self.nc, np.inf)
        falling = (rate > TOL_PIVOT) & np.isfinite(basic_lower)
        rising = (rate < -TOL_PIVOT) & np.isfinite(basic_upper)
        limits[falling] = (basic_values[falling] - basic_lower[falling]) / rate[falling]
        limits[rising] = (basic_upper[rising] - basic_values[rising]) / -rate[rising]
        limits = np.maximum(limits, 0.0)

        flip = self.upper[entering] - self.lower[entering]
        block = float(limits.min()) if self.nc > 0 else np.inf
        if flip <= block:
            return float(flip), None

        ties = np.flatnonzero(limits <= block * (1.0 + 1e-9) + _TIE_TOL)
        if bland:
            leaving_row = int(ties[np.argmin(self.head[ties])])
        else:
            leaving_row = int(ties[np.argmax(np.abs(alpha[ties]))])
        return block, leaving_row

    def _apply_step(
        self,
        entering: int,
        direction: int,
        alpha: np.ndarray,
        step: float,
        leaving_row: int | None,
    ) -> None:
        self.x[self.head] -= step * direction * alpha
        self.x[entering] += step * direction
        if leaving_row is None:
            if direction > 0:
                self.state[entering] = _State.AT_UPPER
                self.x[entering] = self.upper[entering]
            else:
                self.state[entering] = _State.AT_LOWER
                self.x[entering] = self.lower[entering]
            return

        leaving = int(self.head[leaving_row])
        if direction * alpha[leaving_row] > 0:
            self.state[leaving] = _State.AT_LOWER
            self.x[leaving] = self.lower[leaving]
        else:
            self.state[leaving] = _State.AT_UPPER
            self.x[leaving] = self.upper[leaving]
        self.state[entering] = _State.BASIC
        self.head[leaving_row] = entering

        pivot_row = self.basis_inverse[leaving_row] / alpha[leaving_row]
        self.basis_inverse -= np.outer(alpha, pivot_row)
        self.basis_inverse[leaving_row] = pivot_row
        self._pivots_since_refactor += 1

    def _refactor(self) -> None:
        self._pivots_since_refactor = 0
        if self.nc == 0:
            return
        basis = self.columns[:, self.head].toarray()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinAlgWarning)
            try:
                factors = lu_factor(basis)
            except (ValueError, np.linalg.LinAlgError) as error:
                error_msg = "Basis factorization failed"
                self.logger.error(error_msg, exc_info=error)
                raise NumericalFailureError(error_msg) from error
        if np.abs(np.diag(factors[0])).min() < 1e-13:
            raise NumericalFailureError("Basis became singular")
        self.basis_inverse = lu_solve(factors, np.eye(self.nc))

        nonbasic = np.where(self.state == _State.BASIC, 0.0, self.x)
        self.x[self.head] = self.basis_inverse @ -(self.columns @ nonbasic)

    def _extract(self, cost: np.ndarray) -> LpSolution:
        problem = self.problem
        nv = self.nv
        primal = np.clip(self.x[:nv], problem.lower, problem.upper)
        scaled_duals = cost[self.head] @ self.basis_inverse
        dual = scaled_duals / self.row_scale
        matrix = problem.matrix.reshape(self.nc, nv)
        reduced = problem.cost - matrix.T @ dual
        residual = _row_residuals(matrix, problem.senses, problem.rhs, primal) / self.row_scale
        worst = float(residual.max()) if residual.size else 0.0
        if worst > _RESIDUAL_FAILURE:
            raise NumericalFailureError(f"Primal residual {worst:.3e} after refactoring")
        if worst > TOL_FEAS:
            self.logger.warning(f"Primal residual {worst:.3e} exceeds the feasibility tolerance")
        return LpSolution(
            status=LpStatus.OPTIMAL,
            objective=float(problem.cost @ primal),
            primal=primal,
            dual=dual,
            reduced_costs=reduced,
            iterations=self.iterations,
        )


def _row_residuals(
    matrix: np.ndarray, senses: list[RowSense], rhs: np.ndarray, x: np.ndarray
) -> np.ndarray:
    activity = matrix @ x
    residual = np.zeros(rhs.shape[0])
    for row, sense in enumerate(senses):
        if sense is RowSense.GE:
            residual[row] = max(0.0, rhs[row] - activity[row])
        elif sense is RowSense.LE:
            residual[row] = max(0.0, activity[row] - rhs[row])
        else:
            residual[row] = abs(activity[row] - rhs[row])
    return residual


def validate_problem(problem: LpProblem) -> None:
    """Check dimensions, bounds and finiteness of a problem.

    Args:
        problem (LpProblem): Problem to check.

    Raises:
        MalformedProblemError: If any invariant of `LpProblem` is violated.
    """
    nv, nc = problem.num_variables, problem.num_rows
    matrix = problem.matrix
    if matrix.size == 0 and nc == 0:
        matrix = matrix.reshape(0, nv)
    checks: list[tuple[bool, str]] = [
        (matrix.shape == (nc, nv), f"Matrix shape {matrix.shape} does not match ({nc}, {nv})"),
        (len(problem.senses) == nc, "One sense per row is required"),
        (problem.lower.shape == (nv,), "One lower bound per variable is required"),
        (problem.upper.shape == (nv,), "One upper bound per variable is required"),
    ]
    for passed, message in checks:
        if not passed:
            raise MalformedProblemError(message)
    if not (
        np.isfinite(problem.cost).all()
        and np.isfinite(matrix).all()
        and np.isfinite(problem.rhs).all()
    ):
        raise MalformedProblemError("Cost, matrix and right-hand side must be finite")
    if not ((problem.lower == 0.0) | (problem.lower == -np.inf)).all():
        raise MalformedProblemError("Lower bounds must be 0 or -inf")
    if (problem.upper == -np.inf).any() or (problem.upper < problem.lower).any():
        raise MalformedProblemError("Upper bounds must be finite or +inf and above the lower")


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve a linear program with the bounded-variable revised simplex.

    The result is deterministic for identical input.

    Args:
        problem (LpProblem): Problem to solve.

    Returns:
        LpSolution: Status, objective, primal and dual values.

    Raises:
        MalformedProblemError: If the problem is malformed.
        NumericalFailureError: If the simplex cycles or the basis becomes ill-conditioned.
        TimeLimitExceededError: If a deadline installed by `time_limit` passes.
    """
    validate_problem(problem)
    solution = BoundedSimplex(problem).solve()
    BoundedSimplex.logger.debug(
        f"Solved {problem.num_rows}x{problem.num_variables} LP: {solution.status.value}, "
        f"objective {solution.objective:.9g}, {solution.iterations} iterations"
    )
    return solution
