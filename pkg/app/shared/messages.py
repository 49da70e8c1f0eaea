ALPHA_NOT_POSITIVE = "alpha must be positive"
C_OUT_OF_RANGE = "c must lie in (0, 1]"
C_SCHEDULE_NOT_DESCENDING = "c_schedule must be descending"
C_SCHEDULE_OUT_OF_RANGE = "c_schedule entries must lie in (0, 1]"
C_SCHEDULE_EMPTY = "c_schedule must not be empty"
N_RANGE_INVALID = "n_range must satisfy 1 <= min <= max"
N_RANGE_OVER_BUDGET = "n_range max exceeds the periodic-point budget for this degree"
EPSILON_NOT_POSITIVE = "epsilon_schedule entries must be positive"
DEGREE_TOO_LOW = "map degree must be at least 2"
LEADING_COEFFICIENT_ZERO = "leading coefficient must be nonzero"
COMMON_ROOT = "numerator and denominator share a root"
EMPTY_COEFFICIENTS = "coefficient list must not be empty"
BRACKET_INVALID = "bracket must satisfy lo < hi"
SAMPLE_COUNT_INVALID = "sample count must be at least 1"
FORMATS_INVALID = "formats must be a subset of {csv, json}"
