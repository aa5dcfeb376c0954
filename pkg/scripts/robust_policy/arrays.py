# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for numpy-backed pydantic field types shared by every robust policy record."""

from typing import Annotated, Any

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer


def _as_array(value: Any, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim == 1 and array.size == 0 and ndim == 2:
        array = array.reshape(0, 0)
    if array.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-dimensional array, got shape {array.shape}")
    if np.isnan(array).any():
        raise ValueError("Array contains NaN entries")
    array.setflags(write=False)
    return array


def _as_vector(value: Any) -> np.ndarray:
    return _as_array(value, 1)


def _as_matrix(value: Any) -> np.ndarray:
    return _as_array(value, 2)


def _to_list(array: np.ndarray) -> list[Any]:
    listed: list[Any] = array.tolist()
    return listed


Vector = Annotated[
    np.ndarray, BeforeValidator(_as_vector), PlainSerializer(_to_list, return_type=list)
]
Matrix = Annotated[
    np.ndarray, BeforeValidator(_as_matrix), PlainSerializer(_to_list, return_type=list)
]


class ArrayModel(BaseModel):
    """Base class for immutable records holding numpy arrays."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


def all_finite(*arrays: np.ndarray) -> bool:
    """Check that every entry of every array is a finite real.

    Args:
        *arrays (np.ndarray): Arrays to inspect.

    Returns:
        bool: True when no entry is infinite or NaN.
    """
    return all(bool(np.isfinite(array).all()) for array in arrays)
