# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Custom error handling for the robust policy scripts."""


class BaseError(Exception):
    """Base class for custom exceptions in the robust policy scripts."""

    pass
