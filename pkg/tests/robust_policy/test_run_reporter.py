# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Tests for the run, solve and gap records."""

import pytest

from scripts.robust_policy.reporter.base_reporter import format_objective, format_time
from scripts.robust_policy.reporter.run_reporter import GapRecord, RunRecord, SolveRecord, Status


def _solve(method: str, objective: float | None, status: Status = Status.OPTIMAL) -> SolveRecord:
    return SolveRecord(
        instance="gaussian_u1-m4-s0",
        m=4,
        method=method,
        objective=objective,
        time_s=0.0123456,
        status=status,
    )


def test_format_helpers() -> None:
    """Test the rounding of objectives to nine significant digits and times to milliseconds."""
    assert format_objective(1.23456789012) == 1.23456789
    assert format_objective(None) is None
    assert format_time(0.0123456) == 0.012
    assert format_time(None) is None


def test_solve_record_dict() -> None:
    """Test the JSON form of an optimal record with a certificate."""
    record = _solve("construct", 2.0).model_copy(update={"certificate": {"beta": 3.5}})

    actual_row = record.dict_with_fieldnames()

    assert actual_row == {
        "instance": "gaussian_u1-m4-s0",
        "method": "construct",
        "objective": 2.0,
        "time_s": 0.012,
        "status": "Optimal",
        "certificate": {"beta": 3.5},
    }
    assert record.is_optimal


def test_solve_record_dict_failure() -> None:
    """Test that a failed record carries its error code and message."""
    record = SolveRecord(
        instance="lot_sizing-m4-s0",
        m=4,
        method="construct",
        status=Status.FAILED,
        error_code="NEGATIVE_RECOURSE",
        message="B has negative entries",
    )

    actual_row = record.dict_with_fieldnames()

    assert actual_row["status"] == "Failed"
    assert actual_row["objective"] is None
    assert actual_row["error_code"] == "NEGATIVE_RECOURSE"
    assert actual_row["message"] == "B has negative entries"
    assert not record.is_optimal


@pytest.mark.parametrize(
    "fast, affine, expected_ratio",
    [
        (_solve("fast", 3.0), _solve("affine", 2.0), 1.5),
        (_solve("fast", 3.0), _solve("affine", None, Status.TIME_LIMIT), None),
        (_solve("fast", 3.0), _solve("affine", 0.0), None),
        (None, _solve("affine", 2.0), None),
    ],
    ids=["both_optimal", "affine_time_limit", "zero_denominator", "missing_method"],
)
def test_run_record_ratio(
    fast: SolveRecord | None, affine: SolveRecord, expected_ratio: float | None
) -> None:
    """Test that ratios are only defined when both methods solved with a positive divisor.

    Args:
        fast (SolveRecord | None): Record of the fast method, absent when None.
        affine (SolveRecord): Record of the affine method.
        expected_ratio (float | None): Expected `z_alg / z_aff`.
    """
    results = {"affine": affine} if fast is None else {"fast": fast, "affine": affine}
    record = RunRecord(instance="gaussian_u1-m4-s0", m=4, results=results)

    actual_ratio = record.alg_over_aff

    assert actual_ratio == expected_ratio
    assert record.aff_over_ar is None


def test_run_record_dict() -> None:
    """Test the flat row of a record with two methods."""
    record = RunRecord(
        instance="gaussian_u1-m4-s0",
        family="gaussian_u1",
        m=4,
        seed=0,
        results={"affine": _solve("affine", 2.0), "adjustable": _solve("adjustable", 1.0)},
    )

    actual_row = record.dict_with_fieldnames()

    assert actual_row["affine_objective"] == 2.0
    assert actual_row["adjustable_status"] == "Optimal"
    assert actual_row["aff_over_ar"] == 2.0
    assert actual_row["alg_over_aff"] is None


def test_gap_record_dict() -> None:
    """Test the JSON form of a lot-sizing gap record."""
    record = GapRecord(m=6, z_ar=1.0000000001e-12, z_aff=2.0, expected_aff=2.0)

    actual_row = record.dict_with_fieldnames()

    assert actual_row == {
        "m": 6,
        "z_ar": 1e-12,
        "z_aff": 2.0,
        "expected_aff": 2.0,
        "error_code": None,
    }
