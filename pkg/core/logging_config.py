"""Logging configuration for campaign runs."""

import logging
from pathlib import Path


def setup_logging(level: str = "INFO", log_dir: str | Path = "log") -> None:
    """
    Set up logging configuration for the application.

    Args:
        level: Root log level name
        log_dir: Directory receiving campaign.log
    """
    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)

    # Configure logging
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s - %(message)s",
        handlers=[
            logging.FileHandler(log_path / "campaign.log"),
            logging.StreamHandler(),  # Also log to console
        ],
        force=True,
    )

    # Worker pool chatter is not useful at INFO
    logging.getLogger("concurrent.futures").setLevel(logging.WARNING)
