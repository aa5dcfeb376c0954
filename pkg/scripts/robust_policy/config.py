# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Configuration handling for the robust policy tools."""

import logging

from pydantic import BaseModel, Field, ValidationError, field_validator

from scripts.common.config import BaseConfig, InvalidConfigError
from scripts.robust_policy.constants import (
    DEFAULT_TIME_CAP,
    ROUNDING_TRIALS,
)

SECTION = "robust_policy"


class RobustPolicyConfig(BaseModel):
    """Model for the robust policy configuration."""

    time_cap: float = Field(DEFAULT_TIME_CAP, gt=0)
    jobs: int = Field(1, ge=1)
    seed: int = Field(0, ge=0)
    rounding_trials: int = Field(ROUNDING_TRIALS, ge=1)
    bench_seeds: int = Field(20, ge=1)
    bench_sizes: list[int] = Field(default_factory=lambda: [10, 20, 30])
    bench_families: list[str] = Field(default_factory=lambda: ["gaussian_u1", "gaussian_u2"])

    @field_validator("bench_sizes", "bench_families", mode="before")
    @classmethod
    def _split_list(cls, value: object) -> object:
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("bench_sizes")
    @classmethod
    def _positive_sizes(cls, value: list[int]) -> list[int]:
        if not value or any(size < 1 for size in value):
            raise ValueError("bench_sizes must list positive sizes")
        return value


class Config(BaseConfig):
    """Configuration handler for the robust policy tools."""

    logger = logging.getLogger(__name__)

    def __init__(self, config_file: str = "config.ini") -> None:
        """Initialize the Config.

        Args:
            config_file (str): Path to the configuration file.

        Raises:
            InvalidConfigError: If the configuration file contains invalid values.
        """
        super().__init__(config_file)
        self.robust_policy_config: RobustPolicyConfig = self._parse_robust_policy_config()
        self.logger.info("Successfully loaded configuration")

    def _parse_robust_policy_config(self) -> RobustPolicyConfig:
        if not self.config_parser.has_section(SECTION):
            return RobustPolicyConfig()
        try:
            options = dict(self.config_parser.items(SECTION))
            return RobustPolicyConfig.model_validate(options)
        except (ValidationError, ValueError) as error:
            error_mapping: dict[type, str] = {
                ValidationError: f"Unexpected value or schema in '{SECTION}' section",
                ValueError: f"Malformed option in '{SECTION}' section",
            }
            error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
            self.logger.error(error_msg, exc_info=error)
            raise InvalidConfigError(error_msg) from error
