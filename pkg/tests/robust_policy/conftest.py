# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for test configurations for the robust policy tools."""

import numpy as np
import pytest

from scripts.robust_policy.instance_generator import gen_instance, make_spec
from scripts.robust_policy.model.instance import FirstStageSet, TwoStageInstance
from scripts.robust_policy.model.instance_file import InstanceDocument
from scripts.robust_policy.model.uncertainty import BudgetBlock, BudgetSet, IntersectionSet

# Relative tolerance for comparing objectives of different solvers
OBJECTIVE_TOL = 1e-6


def random_instance(seed: int, m: int, n: int | None = None) -> TwoStageInstance:
    """Random instance with a positive recourse matrix and unit-scale costs.

    Args:
        seed (int): Seed of the draws.
        m (int): Number of rows.
        n (int | None): Number of second-stage variables, m when None.

    Returns:
        TwoStageInstance: Instance with `A = B` when n is None.
    """
    rng = np.random.default_rng(seed)
    n = m if n is None else n
    B = rng.uniform(0.1, 1.0, size=(m, n))
    A = B if n == m else rng.uniform(0.1, 1.0, size=(m, m))
    return TwoStageInstance(
        A=A,
        B=B,
        c=rng.uniform(0.5, 1.5, size=A.shape[1]),
        d=rng.uniform(0.5, 1.5, size=n),
    )


def relative_gap(value: float, reference: float) -> float:
    """Absolute difference scaled by `1 + |reference|`."""
    return abs(value - reference) / (1.0 + abs(reference))


@pytest.fixture
def identity_instance() -> TwoStageInstance:
    """Provide a two-component instance `A = B = I` with a cheaper first stage."""
    return TwoStageInstance(A=np.eye(2), B=np.eye(2), c=[0.4, 0.4], d=[1.0, 1.0])


@pytest.fixture
def simplex_set() -> BudgetSet:
    """Provide the two-dimensional simplex `h1 + h2 <= 1`."""
    return BudgetSet(w=[1.0, 1.0])


@pytest.fixture
def gaussian_document() -> InstanceDocument:
    """Provide a small generated Gaussian instance with a U1 budget."""
    return gen_instance(make_spec("gaussian_u1", 4, 7))


@pytest.fixture
def lot_sizing_document() -> InstanceDocument:
    """Provide the smallest lot-sizing instance."""
    return gen_instance(make_spec("lot_sizing", 4))


@pytest.fixture
def disjoint_set() -> IntersectionSet:
    """Provide two disjoint budgets on four components."""
    return IntersectionSet(
        m=4,
        blocks=[
            BudgetBlock(support=[0, 1], weights=[0.6, 0.6]),
            BudgetBlock(support=[2, 3], weights=[0.5, 0.7]),
        ],
        disjoint=True,
    )


@pytest.fixture
def overlapping_set() -> IntersectionSet:
    """Provide two budgets sharing the middle component of three."""
    return IntersectionSet(
        m=3,
        blocks=[
            BudgetBlock(support=[0, 1], weights=[0.5, 0.5]),
            BudgetBlock(support=[1, 2], weights=[0.5, 0.5]),
        ],
    )


@pytest.fixture
def bounded_instance() -> TwoStageInstance:
    """Provide an instance whose first stage lies in the unit box."""
    return TwoStageInstance(
        A=np.eye(2),
        B=np.eye(2),
        c=[0.4, 0.4],
        d=[1.0, 1.0],
        first_stage_set=FirstStageSet(upper=[1.0, 1.0]),
    )
