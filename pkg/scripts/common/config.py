# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Configuration handling for the robust policy scripts."""

import logging
from configparser import ConfigParser

from pydantic import BaseModel, ValidationError, Field

from scripts.common.error import BaseError

# Constants
DIRECTORY_PATTERN = r"^[^<>:;,?\"*|]+$"
DEFAULT_RESULTS_DIR = "results"
DEFAULT_INSTANCE_DIR = "instances"


class CommonConfig(BaseModel):
    """Configuration model for common settings."""

    results_dir: str = Field(DEFAULT_RESULTS_DIR, pattern=DIRECTORY_PATTERN)
    instance_dir: str = Field(DEFAULT_INSTANCE_DIR, pattern=DIRECTORY_PATTERN)


class InvalidConfigError(BaseError):
    """Custom error raised for invalid configurations."""

    pass


class BaseConfig:
    """Base configuration handler for the robust policy scripts.

    A missing file or section is not an error: every option has a default, so the tools run
    without any configuration. Present but malformed values are rejected.
    """

    logger = logging.getLogger(__name__)

    def __init__(self, config_file: str = "config.ini") -> None:
        """Initialize the BaseConfig.

        Args:
            config_file (str): Path to the configuration file.

        Raises:
            InvalidConfigError: If the configuration file contains invalid values.
        """
        self.config_parser = ConfigParser()
        read_files: list[str] = self.config_parser.read(config_file)
        if not read_files:
            self.logger.info(f"No configuration file at {config_file}, using defaults")
        self.common_config: CommonConfig = self._parse_main_config(self.config_parser)

    def _parse_main_config(self, config_parser: ConfigParser) -> CommonConfig:
        try:
            return CommonConfig(
                results_dir=config_parser.get(
                    "common", "results_dir", fallback=DEFAULT_RESULTS_DIR
                ),
                instance_dir=config_parser.get(
                    "common", "instance_dir", fallback=DEFAULT_INSTANCE_DIR
                ),
            )
        except (ValueError, ValidationError) as error:
            error_mapping: dict[type, str] = {
                ValidationError: "Unexpected value in 'common' section",
                ValueError: "Malformed option in 'common' section",
            }
            error_msg: str = next(m for t, m in error_mapping.items() if isinstance(error, t))
            self.logger.error(error_msg, exc_info=error)
            raise InvalidConfigError(error_msg) from error
