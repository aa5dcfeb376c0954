# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for reducing uncertainty sets to single budgets with LP-verified inclusions.

A certificate states `s_inner·V ⊆ U ⊆ s_outer·V`. When the first-stage set is a cone the
affine optimum scales with the set, so `s_inner·z_Aff(V) <= z_Aff(U) <= s_outer·z_Aff(V)`.
"""

import logging
import math

import numpy as np
from pydantic import BaseModel

from scripts.common.error import BaseError
from scripts.robust_policy.arrays import ArrayModel, Vector
from scripts.robust_policy.constants import (
    GAP_TOL,
    INCLUSION_TOL,
    PERMUTATION_SPOT_CHECKS,
    SAMPLING_RETRIES,
)
from scripts.robust_policy.model.instance import TwoStageInstance
from scripts.robust_policy.model.uncertainty import (
    BudgetSet,
    IntersectionSet,
    UncertaintySet,
    as_polyhedron,
    contains,
    max_linear,
)
from scripts.robust_policy.solver.affine_solver import solve_optimal_affine

logger = logging.getLogger(__name__)


class ReductionError(BaseError):
    """Base class for errors raised by the set reductions."""

    pass


class SamplingExhaustedError(ReductionError):
    """Error raised when no sampled surrogate budget is accepted within the retry limit."""

    pass


class NotPermutationInvariantError(ReductionError):
    """Error raised when a permuted point of the set falls outside of it."""

    pass


class NotAConeError(ReductionError):
    """Error raised when a bound transfer needs a conic first-stage set."""

    pass


class SandwichCertificate(ArrayModel):
    """Verified inclusions `inner_scale·V ⊆ U ⊆ outer_scale·V` for the surrogate budget V.

    `inner_values` and `outer_values` are the largest normalized row activities found by the
    verification LPs, each at most `1 + INCLUSION_TOL`. Sampled surrogates also record the
    coordinate rate `gamma`, the accepted draw `xi` and the number of draws.
    """

    inner_scale: float
    outer_scale: float
    surrogate: BudgetSet
    inner_values: Vector
    outer_values: Vector
    gamma: float | None = None
    xi: Vector | None = None
    draws: int | None = None


class AffineTransfer(BaseModel):
    """Affine optima on a set and on its surrogate, with the transferred interval."""

    z_set: float
    z_surrogate: float
    lower: float
    upper: float


def verify_inclusion(
    inner: UncertaintySet, inner_scale: float, outer: UncertaintySet, outer_scale: float
) -> tuple[bool, np.ndarray]:
    """Check `inner_scale·inner ⊆ outer_scale·outer` by maximizing each row of the outer set.

    Args:
        inner (UncertaintySet): Contained set.
        inner_scale (float): Positive scale of the contained set.
        outer (UncertaintySet): Containing set.
        outer_scale (float): Positive scale of the containing set.

    Returns:
        tuple[bool, np.ndarray]: Whether every row holds within `INCLUSION_TOL`, and the
            normalized row maxima `(inner_scale / outer_scale)·max R_l·h / r_l`.
    """
    if inner_scale <= 0 or outer_scale <= 0:
        raise ValueError("Inclusion scales must be positive")
    rows, rhs = as_polyhedron(outer)
    ratio = inner_scale / outer_scale
    values = np.array(
        [ratio * max_linear(inner, row)[0] / bound for row, bound in zip(rows, rhs)]
    )
    return bool((values <= 1.0 + INCLUSION_TOL).all()), values


def _certify(
    u: UncertaintySet, surrogate: BudgetSet, inner_scale: float, outer_scale: float
) -> tuple[bool, np.ndarray, np.ndarray]:
    inner_ok, inner_values = verify_inclusion(surrogate, inner_scale, u, 1.0)
    outer_ok, outer_values = verify_inclusion(u, 1.0, surrogate, outer_scale)
    return inner_ok and outer_ok, inner_values, outer_values


def reduce_average(u: IntersectionSet) -> tuple[BudgetSet, SandwichCertificate]:
    """Replace an intersection of L budgets by the budget of their average weights.

    Every point of U satisfies the averaged budget, and a point of the averaged budget shrunk
    by L satisfies every block, so `(1/L)·V ⊆ U ⊆ V`.

    Args:
        u (IntersectionSet): Intersection with at least one block.

    Returns:
        tuple[BudgetSet, SandwichCertificate]: V and its verified certificate.

    Raises:
        ReductionError: If the set has no block or an inclusion fails to verify.
    """
    rows, _ = u.constraint_rows()
    L = rows.shape[0]
    if L == 0:
        raise ReductionError("Averaging needs at least one budget block")
    surrogate = BudgetSet(w=rows.mean(axis=0))
    verified, inner_values, outer_values = _certify(u, surrogate, 1.0 / L, 1.0)
    if not verified:
        raise ReductionError(f"Averaged budget failed its inclusion checks over {L} blocks")
    logger.info(f"Averaged {L} budgets into one, scales (1/{L}, 1)")
    certificate = SandwichCertificate(
        inner_scale=1.0 / L,
        outer_scale=1.0,
        surrogate=surrogate,
        inner_values=inner_values,
        outer_values=outer_values,
    )
    return surrogate, certificate


def check_permutation_invariance(
    u: UncertaintySet, rng: np.random.Generator, checks: int = PERMUTATION_SPOT_CHECKS
) -> None:
    """Spot-check that permuting the coordinates of extreme points of u stays inside u.

    Args:
        u (UncertaintySet): The set.
        rng (np.random.Generator): Source of the directions and permutations.
        checks (int): Number of points tested.

    Raises:
        NotPermutationInvariantError: If a permuted point is outside the set.
    """
    for _ in range(checks):
        _, point = max_linear(u, rng.random(u.m))
        permuted = point[rng.permutation(u.m)]
        if not contains(u, permuted, tol=INCLUSION_TOL):
            raise NotPermutationInvariantError(
                f"Permuted point {np.round(permuted, 6).tolist()} is outside the set"
            )


def _draw_is_admissible(
    rows: np.ndarray, rhs: np.ndarray, xi: np.ndarray, total: float, log_l: float
) -> bool:
    count = float(xi.sum())
    return total <= 2.0 * count and bool((rows @ xi <= 4.0 * log_l * rhs).all())


def acceptance_rate(u: UncertaintySet, draws: int, seed: int = 0) -> float:
    """Fraction of Bernoulli draws meeting both sufficient conditions of the sampling reduction.

    Args:
        u (UncertaintySet): Permutation-invariant set.
        draws (int): Number of draws.
        seed (int): Seed of the draws.

    Returns:
        float: The observed acceptance frequency.
    """
    rows, rhs = u.constraint_rows()
    total, _ = max_linear(u, np.ones(u.m))
    gamma = total / u.m
    log_l = max(math.log(max(rows.shape[0], 1)), 1.0)
    rng = np.random.default_rng(seed)
    accepted = sum(
        _draw_is_admissible(rows, rhs, (rng.random(u.m) < gamma).astype(float), total, log_l)
        for _ in range(draws)
    )
    return accepted / draws


def reduce_permutation_invariant(
    u: UncertaintySet, seed: int = 0, max_retries: int = SAMPLING_RETRIES
) -> tuple[BudgetSet, SandwichCertificate]:
    """Sandwich a permutation-invariant set between scaled copies of a cardinality budget.

    With `gamma = max {e·h : h in U} / m`, each coordinate of ξ is drawn from Bernoulli(gamma)
    until `max e·h <= 2·sum(ξ)` and every row of U holds for ξ within `4·ln L`. The
    surrogate is `V = {h in [0,1]^m : sum h <= sum(ξ)}` with `(1/(4 ln L))·V ⊆ U ⊆ 2·V`,
    `ln L` floored at 1.

    Args:
        u (UncertaintySet): Permutation-invariant set.
        seed (int): Seed of the spot checks and draws.
        max_retries (int): Number of draws before giving up.

    Returns:
        tuple[BudgetSet, SandwichCertificate]: V and its verified certificate.

    Raises:
        NotPermutationInvariantError: If the spot check fails.
        SamplingExhaustedError: If no draw is accepted and verified.
    """
    rng = np.random.default_rng(seed)
    check_permutation_invariance(u, rng)
    rows, rhs = u.constraint_rows()
    total, _ = max_linear(u, np.ones(u.m))
    gamma = total / u.m
    log_l = max(math.log(max(rows.shape[0], 1)), 1.0)
    inner_scale = 1.0 / (4.0 * log_l)

    for draw in range(1, max_retries + 1):
        xi = (rng.random(u.m) < gamma).astype(float)
        if not _draw_is_admissible(rows, rhs, xi, total, log_l):
            continue
        surrogate = BudgetSet(w=np.full(u.m, 1.0 / xi.sum()))
        verified, inner_values, outer_values = _certify(u, surrogate, inner_scale, 2.0)
        if not verified:
            logger.warning(f"Draw {draw} passed the sampling test but not the LP verification")
            continue
        logger.info(
            f"Accepted a cardinality budget of {xi.sum():.0f} after {draw} draws, "
            f"gamma={gamma:.6g}"
        )
        certificate = SandwichCertificate(
            inner_scale=inner_scale,
            outer_scale=2.0,
            surrogate=surrogate,
            inner_values=inner_values,
            outer_values=outer_values,
            gamma=gamma,
            xi=xi,
            draws=draw,
        )
        return surrogate, certificate
    raise SamplingExhaustedError(f"No draw accepted in {max_retries} attempts, gamma={gamma:.6g}")


def transfer_affine_bound(
    inst: TwoStageInstance, u: UncertaintySet, v: BudgetSet, cert: SandwichCertificate
) -> AffineTransfer:
    """Solve the affine problem on U and on its surrogate and check the transferred interval.

    Args:
        inst (TwoStageInstance): Instance with a conic first-stage set.
        u (UncertaintySet): The original set.
        v (BudgetSet): The surrogate budget.
        cert (SandwichCertificate): Certificate relating u and v.

    Returns:
        AffineTransfer: Both optima and the interval `[s_inner, s_outer]·z_Aff(V)`.

    Raises:
        NotAConeError: If the first-stage set is not a cone.
        ReductionError: If z_Aff(U) falls outside the transferred interval.
    """
    if not inst.first_stage_set.is_cone:
        raise NotAConeError("Affine bounds transfer between scaled sets only for conic X")
    z_set = solve_optimal_affine(inst, u).objective
    z_surrogate = solve_optimal_affine(inst, v).objective
    transfer = AffineTransfer(
        z_set=z_set,
        z_surrogate=z_surrogate,
        lower=cert.inner_scale * z_surrogate,
        upper=cert.outer_scale * z_surrogate,
    )
    slack = GAP_TOL * (1.0 + abs(transfer.upper))
    if not transfer.lower - slack <= z_set <= transfer.upper + slack:
        raise ReductionError(
            f"z_Aff(U)={z_set:.9g} outside [{transfer.lower:.9g}, {transfer.upper:.9g}]"
        )
    return transfer


def rescale_instance(inst: TwoStageInstance, scale: np.ndarray) -> TwoStageInstance:
    """Instance for `V` when the original set is `U = diag(scale)·V`.

    Row i of A and B is divided by `scale_i`, so `A x + B y >= diag(scale) g` becomes
    `A' x + B' y >= g`.

    Args:
        inst (TwoStageInstance): Instance over U.
        scale (np.ndarray): Positive coordinate scales.

    Returns:
        TwoStageInstance: The rescaled instance, same costs and first-stage set.
    """
    scale = np.asarray(scale, dtype=float)
    if scale.shape != (inst.m,) or (scale <= 0).any():
        raise ValueError(f"Scales must be a positive vector of length {inst.m}")
    return TwoStageInstance(
        A=inst.A / scale[:, None],
        B=inst.B / scale[:, None],
        c=inst.c,
        d=inst.d,
        first_stage_set=inst.first_stage_set,
    )
