# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for the seeded benchmark instance families.

Random draws come from numpy's PCG64 bit generator through two fixed derivations so that
other implementations can reproduce the streams:

- uniform: the top 53 bits of a raw 64-bit output times 2**-53, in [0, 1);
- normal: Box-Muller on consecutive uniform pairs (u1, u2), emitting
  `sqrt(-2 ln(1 - u1))·cos(2π u2)` then `sqrt(-2 ln(1 - u1))·sin(2π u2)`.
"""

import logging
import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from scripts.common.error import BaseError
from scripts.robust_policy.model.instance import FirstStageSet, TwoStageInstance
from scripts.robust_policy.model.instance_file import InstanceDocument, InstanceMeta
from scripts.robust_policy.model.uncertainty import BudgetSet, UncertaintySet

logger = logging.getLogger(__name__)

_MAX_SEED = 2**64 - 1


class GeneratorError(BaseError):
    """Base class for errors raised by the instance generators."""

    pass


class InvalidSpecError(GeneratorError):
    """Error raised for an unknown family or an unusable size."""

    pass


class Family(str, Enum):
    """Benchmark instance families."""

    GAUSSIAN_U1 = "gaussian_u1"
    GAUSSIAN_U2 = "gaussian_u2"
    LOT_SIZING = "lot_sizing"


class GenSpec(BaseModel):
    """Family, size and seed of a generated instance."""

    family: Family
    m: int = Field(ge=1)
    seed: int = Field(0, ge=0, le=_MAX_SEED)

    @model_validator(mode="after")
    def _check(self) -> "GenSpec":
        if self.family is Family.LOT_SIZING and (self.m % 2 or self.m < 4):
            raise ValueError(f"Lot-sizing needs an even m >= 4, got {self.m}")
        return self

    @property
    def instance_id(self) -> str:
        """Identifier `<family>-m<m>-s<seed>`."""
        return f"{self.family.value}-m{self.m}-s{self.seed}"


def make_spec(family: str, m: int, seed: int = 0) -> GenSpec:
    """Validate generator arguments.

    Args:
        family (str): Family name.
        m (int): Number of components.
        seed (int): Seed, an unsigned 64-bit integer.

    Returns:
        GenSpec: The validated specification.

    Raises:
        InvalidSpecError: If the family is unknown or m or seed is out of range.
    """
    try:
        return GenSpec(family=family, m=m, seed=seed)
    except (ValidationError, ValueError) as error:
        error_mapping: dict[type, str] = {
            ValidationError: f"Invalid instance specification {family}/m={m}/seed={seed}",
            ValueError: f"Malformed instance specification {family}/m={m}/seed={seed}",
        }
        error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
        logger.error(error_msg, exc_info=error)
        raise InvalidSpecError(error_msg) from error


class PortableRandom:
    """Uniform and normal draws on a PCG64 stream with fixed derivations."""

    def __init__(self, seed: int) -> None:
        self._bits = np.random.PCG64(seed)

    def uniform(self, size: int) -> np.ndarray:
        """Draw `size` uniforms in [0, 1)."""
        raw = self._bits.random_raw(size)
        values: np.ndarray = (raw >> np.uint64(11)).astype(float) * 2.0**-53
        return values

    def normal(self, size: int) -> np.ndarray:
        """Draw `size` standard normals, two per uniform pair."""
        pairs = (size + 1) // 2
        uniforms = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log1p(-uniforms[:, 0]))
        angle = 2.0 * math.pi * uniforms[:, 1]
        values = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)]).ravel()
        result: np.ndarray = values[:size]
        return result


def gen_gaussian(spec: GenSpec) -> tuple[TwoStageInstance, UncertaintySet]:
    """Random instance `A = B = I + G`, `c = d = e`, `X = R^m_+` with a budget set.

    `G_ij = |Y_ij| / sqrt(m)` for standard normals Y drawn row by row. For U1 the budget is
    `sum h <= k` with `k = c·sqrt(m)`, c uniform in [1, 2]; for U2 it is `w·h <= 1` with
    `w = |G'| / ||G'||_2` for a fresh normal vector G'.

    Args:
        spec (GenSpec): A Gaussian family specification.

    Returns:
        tuple[TwoStageInstance, UncertaintySet]: The instance and its budget set.

    Raises:
        InvalidSpecError: If the family is not Gaussian.
    """
    if spec.family is Family.LOT_SIZING:
        raise InvalidSpecError("gen_gaussian does not build lot-sizing instances")
    m = spec.m
    rng = PortableRandom(spec.seed)
    G = np.abs(rng.normal(m * m).reshape(m, m)) / math.sqrt(m)
    B = np.eye(m) + G
    if spec.family is Family.GAUSSIAN_U1:
        k = (1.0 + float(rng.uniform(1)[0])) * math.sqrt(m)
        w = np.full(m, 1.0 / k)
    else:
        draws = np.abs(rng.normal(m))
        w = draws / np.linalg.norm(draws)
    w = np.clip(w, np.finfo(float).tiny, 1.0)
    inst = TwoStageInstance(A=B, B=B, c=np.ones(m), d=np.ones(m))
    return inst, BudgetSet(w=w)


def gen_lot_sizing(m: int) -> tuple[TwoStageInstance, UncertaintySet]:
    """Lot-sizing instance with unbounded gap between affine and adjustable policies.

    Nodes `0..m/2-1` form J1 and the rest J2. Inventory costs 0 on J1 and 1 on J2 with
    capacity 1; only the arcs J1 -> J2 exist, at zero cost, arc (i, j) being column
    `i·(m/2) + (j - m/2)`. Node j of J2 needs `x_j + inflow >= h_j`, node i of J1 needs
    `x_i - outflow >= h_i`. The set is `sum h <= m/2`.

    Args:
        m (int): Even number of nodes, at least 4.

    Returns:
        tuple[TwoStageInstance, UncertaintySet]: The instance and its budget set.

    Raises:
        InvalidSpecError: If m is odd or below 4.
    """
    if m % 2 or m < 4:
        raise InvalidSpecError(f"Lot-sizing needs an even m >= 4, got {m}")
    half = m // 2
    B = np.zeros((m, half * half))
    for i in range(half):
        for j in range(half):
            arc = i * half + j
            B[i, arc] = -1.0
            B[half + j, arc] = 1.0
    c = np.concatenate([np.zeros(half), np.ones(half)])
    inst = TwoStageInstance(
        A=np.eye(m),
        B=B,
        c=c,
        d=np.zeros(half * half),
        first_stage_set=FirstStageSet(upper=np.ones(m)),
    )
    return inst, BudgetSet(w=np.full(m, 2.0 / m))


def gen_instance(spec: GenSpec) -> InstanceDocument:
    """Generate the instance document of a specification.

    Args:
        spec (GenSpec): Family, size and seed.

    Returns:
        InstanceDocument: Instance, set and metadata with id `<family>-m<m>-s<seed>`.
    """
    if spec.family is Family.LOT_SIZING:
        inst, u = gen_lot_sizing(spec.m)
    else:
        inst, u = gen_gaussian(spec)
    meta = InstanceMeta(id=spec.instance_id, family=spec.family.value, m=spec.m, seed=spec.seed)
    logger.info(f"Generated {meta.id} with n_x={inst.nx}, n_y={inst.ny}")
    return InstanceDocument.from_problem(inst, u, meta)
