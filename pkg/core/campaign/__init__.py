"""Monte-Carlo campaign harness."""

from core.campaign.calibration import calibrate, sweep, write_sweep
from core.campaign.exporter import export_results, load_summary
from core.campaign.runner import run_campaign, run_drop
from core.campaign.statistics import RunStatistics, percentile
from core.campaign.validation import run_validation

__all__ = [
    "calibrate",
    "sweep",
    "write_sweep",
    "export_results",
    "load_summary",
    "run_campaign",
    "run_drop",
    "RunStatistics",
    "percentile",
    "run_validation",
]
