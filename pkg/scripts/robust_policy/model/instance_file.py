# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for reading and writing instance JSON documents."""

import json
import logging
from json import JSONDecodeError
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ValidationError, model_validator

from scripts.robust_policy.arrays import ArrayModel, Matrix, Vector
from scripts.robust_policy.model.instance import FirstStageSet, ModelError, TwoStageInstance
from scripts.robust_policy.model.uncertainty import UncertaintySet

logger = logging.getLogger(__name__)


class InstanceFileError(ModelError):
    """Error raised when an instance document cannot be read, parsed or written."""

    pass


class InstanceMeta(BaseModel):
    """Provenance of a generated instance."""

    id: str
    family: str | None = None
    m: int | None = None
    seed: int | None = None


class InstanceDocument(ArrayModel):
    """Serialized form of an instance with its uncertainty set.

    `n` is the number of second-stage variables; the first-stage width is read off A.
    """

    m: int
    n: int
    A: Matrix
    B: Matrix
    c: Vector
    d: Vector
    X: FirstStageSet
    U: UncertaintySet
    b_nonnegative: bool | None = None
    meta: InstanceMeta | None = None

    @model_validator(mode="after")
    def _check(self) -> "InstanceDocument":
        if self.A.shape[0] != self.m or self.B.shape != (self.m, self.n):
            raise ValueError(f"Matrices do not match m={self.m}, n={self.n}")
        if self.U.m != self.m:
            raise ValueError(f"Uncertainty set of dimension {self.U.m} for m={self.m}")
        if self.b_nonnegative is not None and self.b_nonnegative != bool((self.B >= 0).all()):
            raise ValueError("Recorded b_nonnegative flag contradicts B")
        return self

    @classmethod
    def from_problem(
        cls, inst: TwoStageInstance, u: UncertaintySet, meta: InstanceMeta | None = None
    ) -> "InstanceDocument":
        """Wrap an instance and its set for serialization.

        Args:
            inst (TwoStageInstance): The instance.
            u (UncertaintySet): The uncertainty set.
            meta (InstanceMeta | None): Optional provenance.

        Returns:
            InstanceDocument: The document.
        """
        return cls(
            m=inst.m,
            n=inst.ny,
            A=inst.A,
            B=inst.B,
            c=inst.c,
            d=inst.d,
            X=inst.first_stage_set,
            U=u,
            b_nonnegative=inst.b_nonnegative,
            meta=meta,
        )

    def to_problem(self) -> tuple[TwoStageInstance, UncertaintySet]:
        """Unwrap the instance and its set."""
        inst = TwoStageInstance(A=self.A, B=self.B, c=self.c, d=self.d, first_stage_set=self.X)
        return inst, self.U

    @property
    def instance_id(self) -> str:
        """Identifier from the metadata, `unnamed` when absent."""
        return self.meta.id if self.meta is not None else "unnamed"


def load_instance_file(path: Path) -> InstanceDocument:
    """Read an instance document.

    Args:
        path (Path): Path of the JSON file.

    Returns:
        InstanceDocument: The validated document.

    Raises:
        InstanceFileError: If the file cannot be read, is not JSON or does not validate.
    """
    logger.info(f"Loading instance {path}")
    try:
        with path.open() as json_file:
            json_data: dict[str, Any] = json.load(json_file)
        return InstanceDocument.model_validate(json_data)
    except (OSError, JSONDecodeError, ValidationError) as error:
        error_mapping: dict[type, str] = {
            OSError: f"Error reading the file {path}",
            JSONDecodeError: f"Invalid JSON format for file {path}",
            ValidationError: f"Unexpected value or schema in file {path}",
        }
        error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
        logger.error(error_msg, exc_info=error)
        raise InstanceFileError(error_msg) from error


def dump_instance_file(document: InstanceDocument, path: Path) -> None:
    """Write an instance document; identical documents produce identical bytes.

    Args:
        document (InstanceDocument): The document to write.
        path (Path): Destination, parent directories are created.

    Raises:
        InstanceFileError: If the file cannot be written.
    """
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(document.model_dump_json(indent=2) + "\n")
    except OSError as error:
        error_msg = f"Error writing the file {path}"
        logger.error(error_msg, exc_info=error)
        raise InstanceFileError(error_msg) from error
    logger.info(f"Wrote instance {document.instance_id} to {path}")
