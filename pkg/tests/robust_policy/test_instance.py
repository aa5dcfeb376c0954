# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the two-stage instance and its first-stage set."""

from typing import Any

import numpy as np
import pytest
from pydantic import ValidationError

from scripts.robust_policy.model.instance import (
    DimensionMismatchError,
    FirstStageSet,
    NegativeRecourseError,
    TwoStageInstance,
)

VALID_FIELDS: dict[str, Any] = {
    "A": np.eye(2),
    "B": np.array([[1.0, 0.5, 0.0], [0.0, 1.0, 1.0]]),
    "c": [1.0, 1.0],
    "d": [1.0, 2.0, 3.0],
}


def test_instance_dimensions() -> None:
    """Test that first- and second-stage widths may differ."""
    actual_instance = TwoStageInstance(**VALID_FIELDS)

    assert (actual_instance.m, actual_instance.nx, actual_instance.ny) == (2, 2, 3)
    assert actual_instance.b_nonnegative
    assert actual_instance.first_stage_set.is_cone


@pytest.mark.parametrize(
    "update, expected_message",
    [
        ({"c": [-1.0, 1.0]}, "must be nonnegative"),
        ({"d": [1.0, 2.0]}, "do not match the matrix widths"),
        ({"B": np.ones((3, 3))}, "A has 2 rows but B has 3"),
        ({"A": np.array([[np.inf, 0.0], [0.0, 1.0]])}, "must be finite"),
    ],
    ids=["negative_cost", "short_recourse_cost", "row_mismatch", "infinite_entry"],
)
def test_instance_validation(update: dict[str, Any], expected_message: str) -> None:
    """Test that malformed instances fail validation.

    Args:
        update (dict[str, Any]): Fields replacing valid ones.
        expected_message (str): Expected fragment of the validation message.
    """
    with pytest.raises(ValidationError) as actual_error:
        TwoStageInstance(**(VALID_FIELDS | update))

    assert expected_message in str(actual_error.value)


def test_instance_rejects_first_stage_width() -> None:
    """Test that a first-stage set of another width raises a dimension error."""
    with pytest.raises(DimensionMismatchError):
        TwoStageInstance(**VALID_FIELDS, first_stage_set=FirstStageSet(upper=[1.0, 1.0, 1.0]))


def test_require_nonnegative_recourse() -> None:
    """Test that a negative recourse entry is rejected on request."""
    inst = TwoStageInstance(**(VALID_FIELDS | {"B": np.array([[1.0, -0.5, 0.0], [0.0, 1, 1]])}))

    assert not inst.b_nonnegative
    with pytest.raises(NegativeRecourseError):
        inst.require_nonnegative_recourse()


@pytest.mark.parametrize(
    "first_stage_set, x, expected_violation",
    [
        (FirstStageSet(), [0.5, 2.0], 0.0),
        (FirstStageSet(), [-0.25, 2.0], 0.25),
        (FirstStageSet(F=[[1.0, 1.0]], g=[3.0]), [0.5, 2.0], 0.5),
        (FirstStageSet(upper=[1.0, 1.0]), [0.5, 2.0], 1.0),
    ],
    ids=["cone", "negative_entry", "row_shortfall", "above_upper"],
)
def test_first_stage_violation(
    first_stage_set: FirstStageSet, x: list[float], expected_violation: float
) -> None:
    """Test the largest violation of `x >= 0, F x >= g, x <= upper`.

    Args:
        first_stage_set (FirstStageSet): The set.
        x (list[float]): First-stage point.
        expected_violation (float): Expected largest violation.
    """
    actual_violation = first_stage_set.violation(np.array(x))

    assert actual_violation == pytest.approx(expected_violation)


def test_first_stage_set_is_cone() -> None:
    """Test that right-hand sides or upper bounds make the set a polytope."""
    assert FirstStageSet(F=[[1.0, -1.0]], g=[0.0]).is_cone
    assert not FirstStageSet(F=[[1.0, -1.0]], g=[1.0]).is_cone
    assert not FirstStageSet(upper=[1.0]).is_cone
