import os
import math

# -----------------------------------------------------------------------------
# Global Constants
# -----------------------------------------------------------------------------

SERVICE_NAME = "hlc-workbench"
ARTIFACT_PATH = os.environ.get('HLC_ARTIFACT_PATH', 'artifacts/')  # Local directory or gs://bucket/prefix/
LOG_LEVEL = os.environ.get('HLC_LOG_LEVEL', 'INFO')

# Numeric tolerance used by geometric comparisons
EPSILON = 1e-9

# Fixed number of decimals used in every text artifact
ARTIFACT_DECIMALS = 6

# ------------------------------------------------------------------------------
# Range finder
# ------------------------------------------------------------------------------

RAY_COUNT = 660             # Distances per view
SENSOR_ARC_DEG = 220.0      # Arc centered on the heading; ray 0 is the leftmost
MAX_RANGE_M = 25.0

# ------------------------------------------------------------------------------
# Robot body and actions
# ------------------------------------------------------------------------------

ROBOT_RADIUS_M = 0.4        # Half of a 0.8m-wide body
FORWARD_MOVES_M = (0.1, 0.2, 0.4, 0.8, 1.6, 3.2)
ROTATIONS_RAD = (0.25, 0.5, 1.0, 1.57)
LINEAR_SPEED_MPS = 1.0
ANGULAR_SPEED_RPS = 1.0

# ------------------------------------------------------------------------------
# View features (sector bounds relative to the heading, degrees)
# ------------------------------------------------------------------------------

FRONT_HALF_ANGLE_DEG = 15.0
LATERAL_SECTOR_DEG = (45.0, 110.0)
FRONT_CLEARANCE_HALF_ANGLE_DEG = 5.0   # "directly in front"

# ------------------------------------------------------------------------------
# Stretches and the room/passage classifier
# ------------------------------------------------------------------------------

STRETCH_MIN_LENGTH_M = 7.0          # d
STRETCH_MIN_CONE_DEG = 4.0
STRETCH_LENGTH_WINDOW_DEG = 5.0
KMEANS_SEED = 7
KMEANS_MAX_ITER = 100
CLASSIFIER_MAX_DEPTH = 2
DEFAULT_CLASSIFIER_FRONT_FACTOR = 1.5   # front_max < 1.5 * d ...
DEFAULT_CLASSIFIER_STD_M = 3.0          # ... and all_std < 3 is a room
DEFAULT_CLASSIFIER_PATH = "reference/default_classifier.txt"

# ------------------------------------------------------------------------------
# Exploration for high-level connectivity
# ------------------------------------------------------------------------------

PASSAGE_CELL_M = 1.0
SIMILAR_DISTANCE_M = 1.0
SIMILAR_OVERLAP_FRACTION = 1.0 / 3.0
FRONT_INSERT_FACTOR = 2.0           # front of the list when avg_length > 2 * d
OCCUPANCY_RATIO = 0.5               # h/(h+p) <= 0.5 is unobstructed
PASSAGE_ADJACENT_M = 2.0
OBSTRUCTED_LABEL_M = 4.0
END_TOLERANCE_M = 0.5
FRONT_BLOCKED_M = 0.1
HARD_TURN_DEG = 45.0
ORIENTATION_WINDOW = 40
ROOM_WIDTH_FACTOR = 1.5
ROOM_TEST_START_M = 3.0          # widths count once this far along a passage, past its opening junction
VEER_CLEARANCE_M = 0.15
DECISIONS_PER_CANDIDATE = 750
EXPLORATION_BUDGET_S = 1200.0
STUCK_LIMIT = 5
NEAR_START_M = 1.0

# ------------------------------------------------------------------------------
# Skeleton
# ------------------------------------------------------------------------------

REGION_RADIUS_CAP_M = 2.0
REGION_RADIUS_MIN_M = 0.2
REGION_GAP_M = 0.01
REGION_MEMORY_VIEWS = 20         # recent views whose wall hits also bound a new region
VISIBILITY_TOLERANCE_M = 0.3

# ------------------------------------------------------------------------------
# Planning and control
# ------------------------------------------------------------------------------

ATTACH_DISTANCE_WEIGHT = -5.0       # s = -5 * distance + degree
SUCCESS_RADIUS_M = 0.5
WAYPOINT_VISITED_M = 0.5
WAYPOINT_SKIP_M = 3.0
PLAN_ALIGNMENT_DEG = 10.0
ACTIONS_PER_TARGET = 750
DEAD_END_FRONT_M = 2.0
GREEDY_LOOKAHEAD_M = 1.0
SWEEP_MARGIN_M = 0.05

# Advisor weights for heuristic voting
ADVISOR_WEIGHTS = {
    "greedy": 1.0,
    "exit_dead_end": 2.0,
    "no_oscillation": 0.5,
}

# ------------------------------------------------------------------------------
# Harness
# ------------------------------------------------------------------------------

NUM_TARGETS = 40
TASK_LISTS = 5
REPS_PER_LIST = 5
TARGET_MAX_REJECTIONS = 10_000
GRID_REFERENCE_CELL_M = 0.25
FREE_SPACE_CELL_M = 0.25
SIGNIFICANCE_LEVEL = 0.05
SVG_PIXELS_PER_M = 10.0

FULL_ANGLE = 2.0 * math.pi
