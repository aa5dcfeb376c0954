# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the structural certificate on expensive components."""

from itertools import combinations

import numpy as np
import pytest

from scripts.robust_policy.covering.certificate import (
    BoundedVerdict,
    ViolatingScenario,
    certificate_eta,
    normalize_covering,
    prefix_scenario,
    rounding_statistics,
    structural_certificate,
)
from scripts.robust_policy.covering.covering_problem import (
    ConditionOneViolatedError,
    CoveringError,
    CoveringProblem,
    DegenerateColumnError,
    RoundingExhaustedError,
    cover_cost,
    indicator,
)


def _expensive_identity(n: int, cost: float = 2.0) -> tuple[CoveringProblem, np.ndarray]:
    # Unit costs just above eta·gamma·w with gamma = 1, so the packing dual exceeds one
    cp = CoveringProblem(Bc=np.eye(n), d=np.full(n, cost))
    return cp, np.full(n, cost / (1.2 * certificate_eta(n)))


def _near_diagonal(seed: int, n: int) -> tuple[CoveringProblem, np.ndarray]:
    # Diagonal unit costs in [2, 6] with sparse cross-coverage of at most 0.1, so z(J) > eta
    rng = np.random.default_rng(seed)
    cross = 0.1 * rng.random((n, n)) * (rng.random((n, n)) < 0.3)
    np.fill_diagonal(cross, 0.0)
    cp = CoveringProblem(
        Bc=np.diag(rng.uniform(0.5, 1.0, n)) + cross, d=rng.uniform(2.0, 3.0, n)
    )
    unit = np.array([cp.unit_cost(i)[0] for i in range(n)])
    return cp, unit / (1.2 * certificate_eta(n))


def _bounded_case(seed: int) -> tuple[CoveringProblem, np.ndarray, float]:
    # Smallest weight scale meeting condition one with gamma the largest cost of a
    # budget-feasible subset, found by enumerating every subset
    rng = np.random.default_rng(seed)
    m = 3 + seed % 6
    Bc = rng.uniform(0.0, 1.0, (m, m)) * (rng.random((m, m)) < 0.5)
    Bc[np.arange(m), rng.integers(0, m, m)] = rng.uniform(0.5, 1.0, m)
    cp = CoveringProblem(Bc=Bc, d=rng.uniform(0.5, 2.0, m))
    eta = certificate_eta(m)
    unit = np.array([cp.unit_cost(i)[0] for i in range(m)])
    subsets = [list(s) for size in range(1, m + 1) for s in combinations(range(m), size)]
    costs = np.array([cover_cost(cp, indicator(m, s))[0] for s in subsets])
    for value in np.unique(costs):
        w = np.minimum(1.0, unit / (1.05 * eta * value))
        feasible = np.array([w[s].sum() <= 1.0 for s in subsets])
        gamma = float(costs[feasible].max())
        # first-fit groups of weight <= 1 number at most 2·sum(w) + 1
        if (unit > eta * gamma * w * (1.0 + 1e-6)).all() and 2.0 * w.sum() + 1.0 <= eta:
            return cp, w, gamma
    raise ValueError(f"No admissible weight scale for seed {seed}")


def test_structural_certificate_bounded() -> None:
    """Test that light weights give a bounded verdict with the full covering cost."""
    d = np.array([1.0, 2.0, 3.0, 4.0])
    cp = CoveringProblem(Bc=np.eye(4), d=d)
    gamma = float(d.sum())
    w = 0.9 * d / (certificate_eta(4) * gamma)

    actual_verdict = structural_certificate(cp, [0, 1, 2, 3], w, gamma)

    assert isinstance(actual_verdict, BoundedVerdict)
    assert actual_verdict.cover_cost == pytest.approx(gamma)
    assert actual_verdict.dual_value == pytest.approx(1.0 / certificate_eta(4))


def test_structural_certificate_violating() -> None:
    """Test that heavy weights yield a budget-feasible scenario costing more than gamma."""
    cp, w = _expensive_identity(8)

    actual_verdict = structural_certificate(cp, list(range(8)), w, 1.0, seed=3)

    assert isinstance(actual_verdict, ViolatingScenario)
    assert actual_verdict.certificate.trials == 1
    assert actual_verdict.scenario_cost >= 4.0
    assert w[actual_verdict.scenario].sum() <= 1.0
    assert actual_verdict.certificate.dual_value > 1.0


@pytest.mark.parametrize(
    "seed",
    [
        pytest.param(seed, marks=[pytest.mark.slow] if seed >= 3 else [], id=f"seed{seed}")
        for seed in range(20)
    ],
)
def test_structural_certificate_bounded_when_no_scenario_violates(seed: int) -> None:
    """Test the bounded verdict when every budget-feasible subset costs at most gamma.

    Args:
        seed (int): Seed of the synthesized covering instance.
    """
    cp, w, gamma = _bounded_case(seed)
    J = list(range(cp.m))

    actual_verdict = structural_certificate(cp, J, w, gamma, seed=seed)

    assert isinstance(actual_verdict, BoundedVerdict)
    assert actual_verdict.cover_cost <= certificate_eta(cp.n) * gamma * (1.0 + 1e-6)
    assert actual_verdict.cover_cost == pytest.approx(cover_cost(cp, indicator(cp.m, J))[0])


@pytest.mark.parametrize(
    "seed, n",
    [
        pytest.param(
            seed,
            8 + seed % 5,
            marks=[pytest.mark.slow] if seed >= 2 else [],
            id=f"seed{seed}-n{8 + seed % 5}",
        )
        for seed in range(10)
    ],
)
def test_structural_certificate_finds_violating_scenario(seed: int, n: int) -> None:
    """Test that expensive near-diagonal instances yield a confirmed violating scenario.

    Args:
        seed (int): Seed of the instance and of the rounding.
        n (int): Number of components.
    """
    cp, w = _near_diagonal(seed, n)

    actual_verdict = structural_certificate(cp, list(range(n)), w, 1.0, seed=seed)

    assert isinstance(actual_verdict, ViolatingScenario)
    expected_cost, _ = cover_cost(cp, indicator(n, actual_verdict.scenario))
    assert actual_verdict.scenario_cost == pytest.approx(expected_cost)
    assert expected_cost > 1.0
    assert w[actual_verdict.scenario].sum() <= 1.0


def test_structural_certificate_empty_scope() -> None:
    """Test that an empty set of components is trivially bounded."""
    cp, w = _expensive_identity(2)

    actual_verdict = structural_certificate(cp, [], w[:0], 1.0)

    assert actual_verdict == BoundedVerdict(cover_cost=0.0, dual_value=0.0)


@pytest.mark.parametrize(
    "w, gamma, max_trials, expected_error",
    [
        (np.full(4, 0.5), 1.0, 1000, ConditionOneViolatedError),
        (None, 0.0, 1000, ValueError),
        (None, 1.0, 0, RoundingExhaustedError),
    ],
    ids=["cheap_component", "nonpositive_gamma", "no_trials"],
)
def test_structural_certificate_errors(
    w: np.ndarray | None, gamma: float, max_trials: int, expected_error: type
) -> None:
    """Test the failure modes of the certificate.

    Args:
        w (np.ndarray | None): Weights, the expensive ones when None.
        gamma (float): Scale.
        max_trials (int): Rounding trials allowed.
        expected_error (type): Expected error type.
    """
    cp, expensive = _expensive_identity(4)

    with pytest.raises(expected_error):
        structural_certificate(
            cp, [0, 1, 2, 3], expensive if w is None else w, gamma, max_trials=max_trials
        )


def test_normalize_covering() -> None:
    """Test the column scaling and the preserved covering cost identity."""
    cp, w = _expensive_identity(4)
    eta = certificate_eta(4)

    actual_normalized = normalize_covering(cp, [0, 1, 2, 3], w, 1.0)

    np.testing.assert_allclose(actual_normalized.B_hat, np.eye(4))
    np.testing.assert_allclose(actual_normalized.d_hat, np.full(4, 1.2))
    assert actual_normalized.eta == pytest.approx(eta)
    assert actual_normalized.columns == [0, 1, 2, 3]


def test_normalize_covering_drops_untouched_columns() -> None:
    """Test that columns outside the weighted rows are excluded, and all-zero scope fails."""
    cp = CoveringProblem(Bc=np.eye(3), d=np.ones(3))

    actual_normalized = normalize_covering(cp, [0, 1], np.array([0.5, 0.5]), 1.0)

    assert actual_normalized.columns == [0, 1]
    with pytest.raises(DegenerateColumnError):
        normalize_covering(cp, [0], np.array([0.0]), 1.0)


def test_prefix_scenario() -> None:
    """Test the heaviest prefix of the rounded weights above one half."""
    actual_positions = prefix_scenario(np.array([0.3, 0.5, 0.2]), np.array([1.0, 1.0, 2.0]))

    assert actual_positions == [1, 2]


def test_prefix_scenario_too_light() -> None:
    """Test that rounded weights of at most one half are rejected."""
    with pytest.raises(CoveringError):
        prefix_scenario(np.array([0.3, 0.5]), np.zeros(2))


@pytest.mark.slow
def test_rounding_statistics() -> None:
    """Test the rounding frequencies on a 24-component instance with fractional packing duals."""
    cp, w = _near_diagonal(5, 24)

    actual_statistics = rounding_statistics(cp, list(range(24)), w, 1.0, trials=200, seed=1)

    assert actual_statistics.trials == 200
    assert actual_statistics.dual_value > 1.0
    assert actual_statistics.feasible_fraction >= 0.5
    assert actual_statistics.heavy_fraction >= 0.1
