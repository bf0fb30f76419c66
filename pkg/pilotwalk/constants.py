# Copyright 2024 Magnopus LLC

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     https://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

# Euler's number in the low-memory force r/e * sin(v)
EULER = math.e

# Trajectory Column Labels
TIME_COL = "t"
POSITION_COL = "x"
VELOCITY_COL = "X"
MEMORY_FORCE_COL = "Y"
MEMORY_Z_COL = "Z"
LOWMEM_VELOCITY_COL = "v"

FULL_STATE_LABELS = [POSITION_COL, VELOCITY_COL, MEMORY_FORCE_COL, MEMORY_Z_COL]
LOWMEM_STATE_LABELS = [POSITION_COL, LOWMEM_VELOCITY_COL]
MEMORY_STATE_LABELS = [POSITION_COL, VELOCITY_COL]

# System Kinds
FULL_SYSTEM = "full"
LOWMEM_SYSTEM = "lowmem"
MEMORY_SYSTEM = "memory"

# Sweep Result Column Labels
CLASS_COL = "class"
AVG_SPEED_COL = "avg_speed"
AVG_SPEED_NORM_COL = "avg_speed_normalized"
LLE_COL = "lle"
WELL_HOPS_COL = "well_hops"
ERROR_COL = "error"
B_COL = "B"
X0_COL = "X0"
SIGMA_COL = "sigma"
R_CRITICAL_COL = "r_c"

# Config Section Names
RUN_SECTION = "run"
PARAMS_SECTION = "params"
INTEGRATOR_SECTION = "integrator"
CLASSIFIER_SECTION = "classifier"
SIMULATE_SECTION = "simulate"
STABILITY_SECTION = "stability"
SWEEP_SECTION = "sweep"
VELOCITY_SECTION = "velocity"

# Config Path Strings
DEFAULT_CONFIG_DIR = "default_config"
WORKERS_ENV_VAR = "PILOTWALK_WORKERS"
PROVENANCE_SUFFIX = ".provenance.json"
BOUNDARY_SUFFIX = ".boundary.csv"

# CSV Formatting
CSV_FLOAT_FORMAT = "%.17g"
CSV_LINE_TERMINATOR = "\n"

# Spreadsheet Constants
HEADER_COLOR = "878787"
STATIONARY_COLOR = "4F81BD"
BACK_AND_FORTH_COLOR = "C0504D"
RUNAWAY_COLOR = "F2C314"
IRREGULAR_COLOR = "8064A2"
FAILED_COLOR = "D9D9D9"


def label_to_title(column_name: str) -> str:
    tokens = column_name.split("_")
    upper = []

    for token in tokens:
        if token == 'lle':
            upper.append('LLE')
        elif len(token) == 1 or token[0].isupper() or any(char.isdigit() for char in token):
            upper.append(token)
        else:
            upper.append(token.title())

    title = str.join(" ", upper)
    return title
