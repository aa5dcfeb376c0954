# This Source Code Form is subject to the terms of the Mozilla Public
# License, v. 2.0. If a copy of the MPL was not distributed with this
# file, You can obtain one at http://mozilla.org/MPL/2.0/.

"""Module for robust policy constants."""

# LP kernel
TOL_FEAS = 1e-7
TOL_PIVOT = 1e-9
TOL_DUAL = 1e-9
REFACTOR_INTERVAL = 100
BLAND_DEGENERACY_FACTOR = 5
ITERATION_CAP_FACTOR = 50
ITERATION_CAP_OFFSET = 10000
DEADLINE_CHECK_INTERVAL = 25

# Policies and benchmarks
POLICY_TOL = 1e-6
GAP_TOL = 1e-6
MEMBERSHIP_TOL = 1e-9
INCLUSION_TOL = 1e-7

# Vertex enumeration limits
MAX_BUDGET_VERTEX_DIM = 16
MAX_GENERIC_VERTEX_DIM = 8
MAX_GENERIC_SYSTEMS = 500_000
MAX_DOMINANCE_FILTER = 5000

# Covering
EXHAUSTIVE_BLOCK_SIZE = 12
ONLINE_STEP_FRACTION = 0.1
ONLINE_MIN_STEP = 1e-9
ROUNDING_TRIALS = 1000
SCALING_CHECKS = 5

# Reductions
SAMPLING_RETRIES = 200
PERMUTATION_SPOT_CHECKS = 5

# Command line
DEFAULT_TIME_CAP = 300.0
TIME_DECIMALS = 3
OBJECTIVE_DIGITS = 9
BENCH_CSV_FIELDS = ["family", "m", "T_aff_s", "T_alg_s", "ratio_mean", "ratio_max", "seeds"]
