# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for running solver methods on instances and sweeping benchmark cells."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from typing import Any, Sequence

import numpy as np
from pydantic import BaseModel, Field

from scripts.common.error import BaseError
from scripts.robust_policy.constants import ROUNDING_TRIALS
from scripts.robust_policy.construction.base_construction import CostDecomposition
from scripts.robust_policy.construction.budget_construction import construct_affine_budget
from scripts.robust_policy.construction.disjoint_construction import construct_affine_disjoint
from scripts.robust_policy.covering.covering_problem import (
    ConditionOneViolatedError,
    CoveringError,
    DegenerateColumnError,
    RoundingExhaustedError,
    UncoverableComponentError,
)
from scripts.robust_policy.instance_generator import gen_instance, make_spec
from scripts.robust_policy.lp.base_lp import (
    MalformedProblemError,
    NumericalFailureError,
    TimeLimitExceededError,
)
from scripts.robust_policy.lp.simplex import time_limit
from scripts.robust_policy.model.instance import (
    DimensionMismatchError,
    InfeasibleModelError,
    NegativeRecourseError,
    TwoStageInstance,
)
from scripts.robust_policy.model.instance_file import InstanceDocument
from scripts.robust_policy.model.uncertainty import BudgetSet, IntersectionSet, UncertaintySet
from scripts.robust_policy.reporter.run_reporter import (
    GapRecord,
    RunRecord,
    SolveRecord,
    Status,
)
from scripts.robust_policy.solver.adjustable_solver import solve_adjustable, solve_static
from scripts.robust_policy.solver.affine_solver import solve_optimal_affine
from scripts.robust_policy.solver.base_solver import RecourseInfeasibleError, TooLargeError
from scripts.robust_policy.solver.fast_affine_solver import solve_fast_affine

logger = logging.getLogger(__name__)


class MethodMismatchError(BaseError):
    """Error raised when a method cannot run on the given uncertainty set."""

    pass


class Method(str, Enum):
    """Solver methods available on the command line."""

    AFFINE = "affine"
    FAST = "fast"
    ADJUSTABLE = "adjustable"
    STATIC = "static"
    CONSTRUCT = "construct"
    CONSTRUCT_DISJOINT = "construct-disjoint"


# Subclasses come before their bases
ERROR_CODES: dict[type, str] = {
    TimeLimitExceededError: "TIME_LIMIT",
    MalformedProblemError: "MALFORMED_PROBLEM",
    NumericalFailureError: "NUMERICAL_FAILURE",
    NegativeRecourseError: "NEGATIVE_RECOURSE",
    InfeasibleModelError: "INFEASIBLE_MODEL",
    DimensionMismatchError: "DIMENSION_MISMATCH",
    RecourseInfeasibleError: "RECOURSE_INFEASIBLE",
    TooLargeError: "TOO_LARGE",
    UncoverableComponentError: "UNCOVERABLE_COMPONENT",
    ConditionOneViolatedError: "CONDITION_VIOLATED",
    RoundingExhaustedError: "ROUNDING_EXHAUSTED",
    DegenerateColumnError: "DEGENERATE_COLUMN",
    CoveringError: "COVERING_FAILURE",
    MethodMismatchError: "METHOD_MISMATCH",
}


def error_code(error: BaseException) -> str:
    """Machine-readable code of a domain error, `SOLVER_FAILURE` when unmapped."""
    return next(
        (code for kind, code in ERROR_CODES.items() if isinstance(error, kind)),
        "SOLVER_FAILURE",
    )


class SolverRunner:
    """Runs one method on one instance under a wall-clock cap and records the outcome."""

    logger = logging.getLogger(__name__)

    def __init__(self, time_cap: float | None, rounding_trials: int = ROUNDING_TRIALS) -> None:
        """Initialize the runner.

        Args:
            time_cap (float | None): Seconds allowed per solve, None for no cap.
            rounding_trials (int): Rounding trials of the construction certificates.
        """
        self.time_cap = time_cap
        self.rounding_trials = rounding_trials

    @staticmethod
    def _cost_fields(costs: CostDecomposition) -> dict[str, Any]:
        return {
            "linear_cost": costs.linear_cost,
            "static_cost": costs.static_cost,
            "total_cost": costs.total_cost,
            "bound": costs.bound,
            "violation": costs.violation,
        }

    def _construct(
        self, inst: TwoStageInstance, u: UncertaintySet
    ) -> tuple[float, dict[str, Any]]:
        if not isinstance(u, BudgetSet):
            raise MethodMismatchError(f"construct needs a budget set, got {u.type}")
        inst.require_nonnegative_recourse()
        adjustable = solve_adjustable(inst, u)
        _, state = construct_affine_budget(
            inst, u, adjustable.x, adjustable.objective, self.rounding_trials
        )
        certificate = {
            "beta": state.beta,
            "OPT": adjustable.objective,
            "inexpensive": len(state.inexpensive),
            **self._cost_fields(state.costs),
            "verdict": state.verdict.kind if state.verdict is not None else None,
        }
        return state.costs.total_cost, certificate

    def _construct_disjoint(
        self, inst: TwoStageInstance, u: UncertaintySet
    ) -> tuple[float, dict[str, Any]]:
        if not isinstance(u, IntersectionSet):
            raise MethodMismatchError(f"construct-disjoint needs an intersection, got {u.type}")
        inst.require_nonnegative_recourse()
        adjustable = solve_adjustable(inst, u)
        _, state = construct_affine_disjoint(
            inst, u, adjustable.x, adjustable.objective, self.rounding_trials
        )
        certificate = {
            "beta": state.beta,
            "OPT": adjustable.objective,
            "nu_total": state.nu_total,
            "inexpensive": sum(len(block) for block in state.inexpensive),
            "J1": len(state.J1),
            "J2": len(state.J2),
            **self._cost_fields(state.costs),
        }
        return state.costs.total_cost, certificate

    def _dispatch(
        self, method: Method, inst: TwoStageInstance, u: UncertaintySet
    ) -> tuple[float, dict[str, Any] | None]:
        match method:
            case Method.AFFINE:
                return solve_optimal_affine(inst, u).objective, None
            case Method.FAST:
                return solve_fast_affine(inst, u).objective, None
            case Method.ADJUSTABLE:
                adjustable = solve_adjustable(inst, u)
                return adjustable.objective, {
                    "worst_scenario": adjustable.worst.tolist(),
                    "scenarios": len(adjustable.master.scenarios),
                }
            case Method.STATIC:
                return solve_static(inst, np.ones(inst.m)).cost, None
            case Method.CONSTRUCT:
                return self._construct(inst, u)
            case _:
                return self._construct_disjoint(inst, u)

    def run(self, document: InstanceDocument, method: Method) -> SolveRecord:
        """Solve the instance with one method.

        Domain errors do not propagate: they become a failed record with an error code.

        Args:
            document (InstanceDocument): The instance and its metadata.
            method (Method): Method to run.

        Returns:
            SolveRecord: Objective and wall time, or the failure status and code.
        """
        meta = document.meta
        fields: dict[str, Any] = {
            "instance": document.instance_id,
            "family": meta.family if meta else None,
            "m": document.m,
            "seed": meta.seed if meta else None,
            "method": method.value,
        }
        self.logger.info(f"Solving {document.instance_id} with {method.value}")
        start = time.perf_counter()
        try:
            inst, u = document.to_problem()
            with time_limit(self.time_cap):
                objective, certificate = self._dispatch(method, inst, u)
        except BaseError as error:
            elapsed = time.perf_counter() - start
            code = error_code(error)
            status = (
                Status.TIME_LIMIT if isinstance(error, TimeLimitExceededError) else Status.FAILED
            )
            self.logger.warning(f"{document.instance_id} {method.value} failed: {code}: {error}")
            return SolveRecord(
                **fields, time_s=elapsed, status=status, error_code=code, message=str(error)
            )
        elapsed = time.perf_counter() - start
        self.logger.info(
            f"{document.instance_id} {method.value}: objective {objective:.9g} in {elapsed:.3f}s"
        )
        return SolveRecord(
            **fields,
            objective=objective,
            time_s=elapsed,
            status=Status.OPTIMAL,
            certificate=certificate,
        )


def run_method(
    document: InstanceDocument,
    method: Method | str,
    time_cap: float | None = None,
    rounding_trials: int = ROUNDING_TRIALS,
) -> SolveRecord:
    """Solve an instance document with one method; see `SolverRunner.run`."""
    return SolverRunner(time_cap, rounding_trials).run(document, Method(method))


class BenchCell(BaseModel):
    """One benchmark cell: a generated instance solved by the affine and fast methods."""

    family: str
    m: int = Field(ge=1)
    seed: int = Field(ge=0)
    time_cap: float | None = None


BENCH_METHODS = (Method.AFFINE, Method.FAST)


def run_bench_cell(cell: BenchCell) -> RunRecord:
    """Generate the cell's instance and solve it with every benchmark method.

    Args:
        cell (BenchCell): Family, size, seed and time cap.

    Returns:
        RunRecord: Both method records, failed ones included.
    """
    document = gen_instance(make_spec(cell.family, cell.m, cell.seed))
    runner = SolverRunner(cell.time_cap)
    results = {method.value: runner.run(document, method) for method in BENCH_METHODS}
    return RunRecord(
        instance=document.instance_id,
        family=cell.family,
        m=cell.m,
        seed=cell.seed,
        results=results,
    )


def run_bench(
    families: Sequence[str],
    sizes: Sequence[int],
    seeds: int,
    base_seed: int = 0,
    jobs: int = 1,
    time_cap: float | None = None,
) -> list[RunRecord]:
    """Run every (family, m, seed) cell, seeds being `base_seed + index`.

    Args:
        families (Sequence[str]): Family names.
        sizes (Sequence[int]): Values of m.
        seeds (int): Seeds per family and size.
        base_seed (int): First seed.
        jobs (int): Worker processes, 1 runs in this process.
        time_cap (float | None): Seconds allowed per solve.

    Returns:
        list[RunRecord]: One record per cell, in sweep order.

    Raises:
        InvalidSpecError: If a family or size is not valid, before any cell runs.
    """
    for family in families:
        for m in sizes:
            make_spec(family, m, base_seed)
    cells = [
        BenchCell(family=family, m=m, seed=base_seed + index, time_cap=time_cap)
        for family in families
        for m in sizes
        for index in range(seeds)
    ]
    logger.info(f"Running {len(cells)} benchmark cells on {jobs} worker(s)")
    if jobs == 1:
        return [run_bench_cell(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_bench_cell, cells))


def run_gap_demo(sizes: Sequence[int], time_cap: float | None = None) -> list[GapRecord]:
    """Solve the lot-sizing family adjustably and affinely for each size.

    Args:
        sizes (Sequence[int]): Even values of m, at least 4.
        time_cap (float | None): Seconds allowed per solve.

    Returns:
        list[GapRecord]: `z_AR`, `z_Aff` and the expected `m/2 - 1` per size.

    Raises:
        InvalidSpecError: If a size is odd or below 4.
    """
    runner = SolverRunner(time_cap)
    records: list[GapRecord] = []
    for m in sizes:
        document = gen_instance(make_spec("lot_sizing", m))
        adjustable = runner.run(document, Method.ADJUSTABLE)
        affine = runner.run(document, Method.AFFINE)
        codes = [r.error_code for r in (adjustable, affine) if r.error_code is not None]
        records.append(
            GapRecord(
                m=m,
                z_ar=adjustable.objective,
                z_aff=affine.objective,
                expected_aff=m / 2 - 1,
                error_code=",".join(codes) or None,
            )
        )
    return records

