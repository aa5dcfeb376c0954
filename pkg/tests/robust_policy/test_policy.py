# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the worst-case evaluation of affine policies."""

import numpy as np
import pytest

from scripts.robust_policy.model.instance import DimensionMismatchError, TwoStageInstance
from scripts.robust_policy.model.policy import AffinePolicy, evaluate_policy
from scripts.robust_policy.model.uncertainty import BudgetSet

UNIT_INSTANCE = TwoStageInstance(A=np.eye(2), B=np.eye(2), c=[1.0, 1.0], d=[1.0, 1.0])


@pytest.mark.parametrize(
    "policy, expected_objective, expected_constraint, expected_nonnegativity",
    [
        (AffinePolicy(x=[0.0, 0.0], P=np.eye(2), q=[0.0, 0.0]), 1.0, 0.0, 0.0),
        (AffinePolicy(x=[0.0, 0.0], P=np.zeros((2, 2)), q=[0.0, 0.0]), 0.0, 1.0, 0.0),
        (AffinePolicy(x=[1.0, 1.0], P=np.zeros((2, 2)), q=[0.0, 0.0]), 2.0, 0.0, 0.0),
        (AffinePolicy(x=[2.0, 2.0], P=-np.eye(2), q=[0.5, 0.5]), 5.0, 0.0, 0.5),
    ],
    ids=["pure_recourse", "no_recourse", "pure_first_stage", "negative_recourse"],
)
def test_evaluate_policy(
    policy: AffinePolicy,
    expected_objective: float,
    expected_constraint: float,
    expected_nonnegativity: float,
) -> None:
    """Test worst-case cost and violations over the simplex `h1 + h2 <= 1`.

    Args:
        policy (AffinePolicy): Policy to evaluate.
        expected_objective (float): Expected worst-case cost.
        expected_constraint (float): Expected covering violation.
        expected_nonnegativity (float): Expected violation of `y >= 0`.
    """
    actual_report = evaluate_policy(UNIT_INSTANCE, BudgetSet(w=[1.0, 1.0]), policy)

    assert actual_report.worst_case_objective == pytest.approx(expected_objective)
    assert actual_report.max_constraint_violation == pytest.approx(expected_constraint)
    assert actual_report.max_nonnegativity_violation == pytest.approx(expected_nonnegativity)
    assert actual_report.first_stage_violation == 0.0


def test_evaluate_policy_witness() -> None:
    """Test that the covering witness is a scenario that breaks the policy."""
    policy = AffinePolicy(x=[0.0, 0.0], P=np.zeros((2, 2)), q=[0.0, 0.0])

    actual_report = evaluate_policy(UNIT_INSTANCE, BudgetSet(w=[1.0, 1.0]), policy)

    assert actual_report.max_violation == pytest.approx(1.0)
    assert actual_report.constraint_witness.sum() == pytest.approx(1.0)


def test_evaluate_policy_rejects_shapes() -> None:
    """Test that a policy of the wrong shape raises a dimension error."""
    policy = AffinePolicy(x=[0.0, 0.0], P=np.zeros((3, 2)), q=[0.0, 0.0])

    with pytest.raises(DimensionMismatchError) as actual_error:
        evaluate_policy(UNIT_INSTANCE, BudgetSet(w=[1.0, 1.0]), policy)

    assert "Policy P has shape" in str(actual_error.value)


def test_recourse() -> None:
    """Test the affine recourse rule `P h + q`."""
    policy = AffinePolicy(x=[0.0], P=[[1.0, 2.0]], q=[0.5])

    actual_recourse = policy.recourse(np.array([1.0, 0.25]))

    np.testing.assert_allclose(actual_recourse, [2.0])
