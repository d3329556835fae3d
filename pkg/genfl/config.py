"""
Process-level configuration for the GenFL simulator.

Settings come from environment variables (optionally a .env file).
Experiment knobs live in the key=value config files, see
genfl.services.experiment_service.load_config.
"""
from dotenv import load_dotenv
import logging
import os
import sys

import psutil

load_dotenv()

# Determine absolute path to the registry DB to avoid CWD issues
BASE_DIR = os.path.dirname(os.path.abspath(__file__))  # genfl/
PROJECT_ROOT = os.path.dirname(BASE_DIR)  # project root

# Default to genfl_runs.db in project root
DEFAULT_DB_PATH = os.path.join(PROJECT_ROOT, "genfl_runs.db")
DATABASE_URL = os.getenv("GENFL_DATABASE_URL", f"sqlite:///{DEFAULT_DB_PATH}")

# Output
DEFAULT_OUTPUT_DIR = os.getenv("GENFL_OUTPUT_DIR", "runs")

# Parallelism
DEFAULT_WORKERS = int(os.getenv("GENFL_WORKERS", "0")) or (psutil.cpu_count(logical=False) or 1)

# Logging
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_LEVELS = {
    "error": logging.ERROR,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def setup_logging(level_name: str = None) -> int:
    """
    Configure the root logger to write to standard error.

    Args:
        level_name: One of 'error', 'info', 'debug'. Defaults to GENFL_LOG.

    Returns:
        The numeric logging level that was applied
    """
    raw = level_name if level_name is not None else os.getenv("GENFL_LOG", "info")
    level = LOG_LEVELS.get(raw.strip().lower())

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level if level is not None else logging.INFO)

    if level is None:
        logging.getLogger(__name__).warning(f"Unknown GENFL_LOG value '{raw}', using 'info'")
        level = logging.INFO
    return level
