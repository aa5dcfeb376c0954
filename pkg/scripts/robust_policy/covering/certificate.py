# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the structural certificate on expensive components and its dual rounding.

Given components J whose single covering costs are large relative to their budget weights,
either covering all of J is cheap (`z(J) <= eta·gamma`) or a budget-feasible scenario
`W ⊆ J` with `z(W) > gamma` exists. The scenario is found by rounding the packing dual of the
normalized covering problem and keeping the heaviest prefix of the rounded weights.
"""

import logging
from typing import Annotated, Literal, Sequence

import numpy as np
from pydantic import BaseModel, Field

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.constants import ROUNDING_TRIALS, SCALING_CHECKS, TOL_FEAS
from scripts.robust_policy.covering.covering_problem import (
    ConditionOneViolatedError,
    CoveringError,
    CoveringProblem,
    DegenerateColumnError,
    RoundingExhaustedError,
    cover_cost,
    indicator,
    log_ratio,
    solve_covering_lp,
)
from scripts.robust_policy.lp.base_lp import LpBuilder, NumericalFailureError, RowSense
from scripts.robust_policy.lp.simplex import solve_lp

logger = logging.getLogger(__name__)


def certificate_eta(n: int) -> float:
    """Loss factor `eta = 4 ln n / ln ln n` of the dual rounding, with small-n guards."""
    return 4.0 * log_ratio(n)


class NormalizedCovering(ArrayModel):
    """Covering problem on J rescaled so that `z(W) = eta·gamma·z_hat(W)` for every W ⊆ J.

    `columns` lists the non-degenerate columns kept; `B_hat` has one row per index of J.
    """

    d_hat: Vector
    B_hat: Matrix
    columns: list[int]
    eta: float

    def scaled_cost(self, weights: np.ndarray) -> float:
        """Normalized cost `z_hat` of the requirement `B_hat y >= weights`."""
        value, _ = solve_covering_lp(self.B_hat, self.d_hat, weights)
        return value


class RoundingCertificate(ArrayModel):
    """Rounded packing dual and the heavy prefix scenario it yields."""

    normalized: NormalizedCovering
    dual_optimum: Vector
    dual_value: float
    rounded: Vector
    scaled_dual: Vector
    scenario: list[int]
    trials: int
    seed: int


class BoundedVerdict(BaseModel):
    """Covering every component of J costs at most `eta·gamma`."""

    kind: Literal["bounded"] = "bounded"
    cover_cost: float
    dual_value: float


class ViolatingScenario(ArrayModel):
    """A scenario W with `sum_{i in W} w_i <= 1` and `z(W) > gamma`."""

    kind: Literal["violating"] = "violating"
    scenario: list[int]
    scenario_cost: float
    certificate: RoundingCertificate


Verdict = Annotated[BoundedVerdict | ViolatingScenario, Field(discriminator="kind")]


class RoundingStatistics(BaseModel):
    """Success frequencies of the dual rounding over seeded trials."""

    trials: int
    dual_value: float
    feasible_fraction: float
    heavy_fraction: float
    success_fraction: float


def _check_condition_one(
    cp: CoveringProblem, J: Sequence[int], w: np.ndarray, gamma: float, eta: float
) -> None:
    cp.require_coverable(J)
    for i, weight in zip(J, w):
        unit_cost, _ = cp.unit_cost(i)
        if unit_cost <= eta * gamma * weight:
            raise ConditionOneViolatedError(
                f"Component {i} covers at {unit_cost:.6g}, not above "
                f"eta·gamma·w = {eta * gamma * weight:.6g}"
            )


def normalize_covering(
    cp: CoveringProblem,
    J: Sequence[int],
    w: np.ndarray,
    gamma: float,
    seed: int = 0,
    checks: int = SCALING_CHECKS,
) -> NormalizedCovering:
    """Rescale the covering problem on J by the column maxima `max_{k in J} w_k Bc_kj`.

    `d_hat_j = d_j / (eta·gamma·max_k w_k Bc_kj)` and `B_hat_ij = w_i Bc_ij / max_k w_k Bc_kj`.
    The identity `z(W) = eta·gamma·z_hat(W)` is re-checked on `checks` random subsets.

    Args:
        cp (CoveringProblem): The covering data.
        J (Sequence[int]): Components in scope.
        w (np.ndarray): Budget weights aligned with J.
        gamma (float): Scale of the certificate, positive.
        seed (int): Seed for the random subsets of the check.
        checks (int): Number of subsets checked.

    Returns:
        NormalizedCovering: The rescaled problem over the non-degenerate columns.

    Raises:
        DegenerateColumnError: If every column has a zero maximum over J.
        NumericalFailureError: If the scaling identity fails on a checked subset.
    """
    rows = np.asarray(J, dtype=int)
    w = np.asarray(w, dtype=float)
    eta = certificate_eta(cp.n)
    weighted = w[:, None] * cp.Bc[rows]
    column_max = weighted.max(axis=0) if rows.size else np.zeros(cp.n)
    kept = np.flatnonzero(column_max > 0)
    if kept.size == 0:
        raise DegenerateColumnError("No column touches the weighted components")
    if kept.size < cp.n:
        logger.debug(f"Excluding {cp.n - kept.size} degenerate columns from the normalization")
    normalized = NormalizedCovering(
        d_hat=cp.d[kept] / (eta * gamma * column_max[kept]),
        B_hat=weighted[:, kept] / column_max[kept],
        columns=kept.tolist(),
        eta=eta,
    )

    rng = np.random.default_rng(seed)
    positive = np.flatnonzero(w > 0)
    for _ in range(checks if positive.size else 0):
        subset = positive[rng.random(positive.size) < 0.5]
        requirement = np.zeros(rows.size)
        requirement[subset] = w[subset]
        scaled = eta * gamma * normalized.scaled_cost(requirement)
        original, _ = cover_cost(cp, indicator(cp.m, rows[subset]))
        if abs(scaled - original) > 1e-6 * (1.0 + abs(original)):
            raise NumericalFailureError(
                f"Scaling identity fails: {original:.9g} vs {scaled:.9g} on {rows[subset]}"
            )
    return normalized


def _packing_dual(normalized: NormalizedCovering, w: np.ndarray) -> tuple[float, np.ndarray]:
    # max w·z s.t. B_hat^T z <= d_hat, z >= 0
    builder = LpBuilder()
    z = builder.add_variables(w.size, cost=-w)
    for column in range(normalized.d_hat.size):
        entries = normalized.B_hat[:, column]
        support = np.flatnonzero(entries > 0)
        builder.add_row(z[support], entries[support], RowSense.LE, normalized.d_hat[column])
    solution = solve_lp(builder.build())
    if not solution.is_optimal:
        raise NumericalFailureError(f"Packing dual ended {solution.status.value}")
    return -solution.objective, solution.primal


def _round(dual: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    floor = np.floor(dual)
    rounded: np.ndarray = floor + (rng.random(dual.size) < dual - floor)
    return rounded


def _is_dual_feasible(normalized: NormalizedCovering, scaled: np.ndarray) -> bool:
    return bool((normalized.B_hat.T @ scaled <= normalized.d_hat + TOL_FEAS).all())


def prefix_scenario(w: np.ndarray, rounded: np.ndarray) -> list[int]:
    """Positions of the heaviest `w_i Z_i` up to the first running sum above one half.

    With integral `Z` and weights in [0, 1] the selected weights sum to at most 1.

    Args:
        w (np.ndarray): Weights in [0, 1].
        rounded (np.ndarray): Nonnegative integers Z aligned with w.

    Returns:
        list[int]: Sorted positions of the selected entries.

    Raises:
        CoveringError: If `sum w_i Z_i` does not exceed one half.
    """
    mass = np.asarray(w, dtype=float) * np.asarray(rounded, dtype=float)
    order = np.argsort(-mass, kind="stable")
    running = np.cumsum(mass[order])
    above = np.flatnonzero(running > 0.5)
    if above.size == 0:
        raise CoveringError("Rounded weights do not exceed one half")
    return sorted(order[: above[0] + 1].tolist())


def structural_certificate(
    cp: CoveringProblem,
    J: Sequence[int],
    w: np.ndarray,
    gamma: float,
    seed: int = 0,
    max_trials: int = ROUNDING_TRIALS,
) -> Verdict:
    """Certify that J is cheap to cover or exhibit a budget-feasible expensive scenario.

    Args:
        cp (CoveringProblem): The covering data.
        J (Sequence[int]): Components in scope.
        w (np.ndarray): Budget weights aligned with J, in [0, 1].
        gamma (float): Positive scale; condition one asks `z(e_i) > eta·gamma·w_i` on J.
        seed (int): Seed of the rounding draws.
        max_trials (int): Number of rounding trials before giving up.

    Returns:
        Verdict: Exactly one of the two outcomes.

    Raises:
        ConditionOneViolatedError: If some component of J is cheap relative to its weight.
        UncoverableComponentError: If a component of J cannot be covered.
        RoundingExhaustedError: If no trial yields a verified scenario.
    """
    rows = [int(i) for i in J]
    w = np.asarray(w, dtype=float)
    if not rows:
        return BoundedVerdict(cover_cost=0.0, dual_value=0.0)
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    eta = certificate_eta(cp.n)
    _check_condition_one(cp, rows, w, gamma, eta)
    normalized = normalize_covering(cp, rows, w, gamma, seed)
    dual_value, dual = _packing_dual(normalized, w)
    logger.debug(f"Packing dual value {dual_value:.9g} on {len(rows)} components")
    if dual_value <= 1.0 + TOL_FEAS:
        covering, _ = cover_cost(cp, indicator(cp.m, rows))
        return BoundedVerdict(cover_cost=covering, dual_value=dual_value)

    rng = np.random.default_rng(seed)
    for trial in range(1, max_trials + 1):
        rounded = _round(dual, rng)
        scaled = 2.0 * rounded / eta
        if not _is_dual_feasible(normalized, scaled) or w @ rounded <= 0.5:
            continue
        positions = prefix_scenario(w, rounded)
        scenario = [rows[k] for k in positions]
        scenario_cost, _ = cover_cost(cp, indicator(cp.m, scenario))
        if scenario_cost <= gamma:
            logger.warning(f"Trial {trial} scenario costs {scenario_cost:.6g} <= gamma")
            continue
        logger.info(f"Violating scenario of {len(scenario)} components after {trial} trials")
        certificate = RoundingCertificate(
            normalized=normalized,
            dual_optimum=dual,
            dual_value=dual_value,
            rounded=rounded,
            scaled_dual=scaled,
            scenario=scenario,
            trials=trial,
            seed=seed,
        )
        return ViolatingScenario(
            scenario=scenario, scenario_cost=scenario_cost, certificate=certificate
        )
    raise RoundingExhaustedError(
        f"No rounding of the packing dual (value {dual_value:.6g}) succeeded in "
        f"{max_trials} trials"
    )


def rounding_statistics(
    cp: CoveringProblem,
    J: Sequence[int],
    w: np.ndarray,
    gamma: float,
    trials: int,
    seed: int = 0,
) -> RoundingStatistics:
    """Frequencies of dual feasibility of `2Z/eta` and of `sum w_i Z_i > 1/2` over trials.

    Args:
        cp (CoveringProblem): The covering data.
        J (Sequence[int]): Components in scope, satisfying condition one.
        w (np.ndarray): Budget weights aligned with J.
        gamma (float): Positive scale.
        trials (int): Number of draws.
        seed (int): Seed of the draws.

    Returns:
        RoundingStatistics: The observed frequencies.
    """
    rows = [int(i) for i in J]
    w = np.asarray(w, dtype=float)
    eta = certificate_eta(cp.n)
    _check_condition_one(cp, rows, w, gamma, eta)
    normalized = normalize_covering(cp, rows, w, gamma, seed)
    dual_value, dual = _packing_dual(normalized, w)
    rng = np.random.default_rng(seed)
    feasible = heavy = both = 0
    for _ in range(trials):
        rounded = _round(dual, rng)
        is_feasible = _is_dual_feasible(normalized, 2.0 * rounded / eta)
        is_heavy = bool(w @ rounded > 0.5)
        feasible += is_feasible
        heavy += is_heavy
        both += is_feasible and is_heavy
    statistics = RoundingStatistics(
        trials=trials,
        dual_value=dual_value,
        feasible_fraction=feasible / trials,
        heavy_fraction=heavy / trials,
        success_fraction=both / trials,
    )
    logger.info(
        f"Rounding over {trials} trials: feasible {statistics.feasible_fraction:.3f}, "
        f"heavy {statistics.heavy_fraction:.3f}"
    )
    return statistics
