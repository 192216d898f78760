"""Version information for campaign logs."""

import importlib.metadata
import sys

import numpy as np
import scipy

try:
    __version__ = importlib.metadata.version("carrier-phase-positioning")
except importlib.metadata.PackageNotFoundError:
    __version__ = "unknown"


def get_version_info() -> dict[str, str]:
    """Get versions of the package and its numerical stack."""
    return {
        "version": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python_version": ".".join(str(v) for v in sys.version_info[:3]),
    }


def format_version_info() -> str:
    """Format version information for logging."""
    info = get_version_info()
    return ", ".join(
        [
            f"version={info['version']}",
            f"numpy={info['numpy']}",
            f"scipy={info['scipy']}",
            f"python={info['python_version']}",
        ]
    )
