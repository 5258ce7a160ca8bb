import os
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables
load_dotenv()

# Repository root and the shipped calibrated config
ROOT_DIR = Path(__file__).resolve().parent.parent
DEFAULT_CONFIG_PATH = ROOT_DIR / "configs" / "defaults.json"

# Runtime knobs (all optional)
READOUT_WORKERS    = int(os.getenv("READOUT_WORKERS", "1"))
READOUT_LOG_LEVEL  = os.getenv("READOUT_LOG_LEVEL", "INFO").upper()
READOUT_OUTPUT_DIR = os.getenv("READOUT_OUTPUT_DIR", "results")

TOOL_VERSION = "1.0.0"


def validate_config():
    if READOUT_WORKERS < 1:
        print("⚠ WARNING: READOUT_WORKERS < 1, falling back to 1")
    if not DEFAULT_CONFIG_PATH.exists():
        print(f"⚠ WARNING: default config missing at {DEFAULT_CONFIG_PATH}")
