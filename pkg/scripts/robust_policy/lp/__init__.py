# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""__init__.py"""

from scripts.robust_policy.lp.base_lp import (
    LpBuilder,
    LpError,
    LpProblem,
    LpSolution,
    LpStatus,
    MalformedProblemError,
    NumericalFailureError,
    RowSense,
    TimeLimitExceededError,
)
from scripts.robust_policy.lp.simplex import check_deadline, solve_lp, time_limit
