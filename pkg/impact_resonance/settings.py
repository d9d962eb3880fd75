"""
Settings for the impact resonance toolkit.

Values are read from the process environment, with a `.env` file in the
working directory loaded first. Everything numerical that a user may want
to tune without touching a run configuration lives here.
"""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Logging
LOG_LEVEL = os.getenv("IMPACTRES_LOG", "warn").lower()

LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "warning": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Execution
DEFAULT_JOBS = int(os.getenv("IMPACTRES_JOBS", "1"))
OUTPUT_DIR = os.getenv("IMPACTRES_OUT", "results")

# Averaging quadrature
TAU_GRID_SIZE = int(os.getenv("IMPACTRES_TAU_GRID", "256"))
QUADRATURE_NODES = int(os.getenv("IMPACTRES_QUAD_NODES", "64"))
PHASE_DIFF_STEP = 1e-5

# Green's function
JUMP_GUARD = 1e-12
STATE_TOLERANCE = 1e-8

# Simulator defaults
SIM_RTOL = 1e-10
SIM_ATOL = 1e-12
SIM_GRAZE_TOL = 1e-8
SIM_METHOD = os.getenv("IMPACTRES_METHOD", "DOP853")
SIM_MAX_SILENT_PERIODS = float(os.getenv("IMPACTRES_MAX_SILENT", "50"))

# Lock detection
LOCK_WINDOW = 0.8
LOCK_THRESHOLD = 0.15

# Soft bound on the small parameter
EPSILON_SOFT_MAX = 0.1


def configure_logging(level: str = None) -> int:
    """
    Configure root logging from IMPACTRES_LOG or an explicit level name.

    Args:
        level: One of error, warn, info, debug. Defaults to LOG_LEVEL.

    Returns:
        The numeric logging level that was applied
    """
    name = (level or LOG_LEVEL).lower()
    numeric = LOG_LEVELS.get(name)
    if numeric is None:
        numeric = logging.WARNING
        logging.getLogger(__name__).warning(
            f"Unknown log level '{name}', falling back to warn"
        )
    logging.basicConfig(level=numeric, format=LOG_FORMAT)
    logging.getLogger().setLevel(numeric)
    return numeric
