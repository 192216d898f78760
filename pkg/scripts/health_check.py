#!/usr/bin/env python3
"""Health check script for the carrier-phase positioning toolkit."""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

try:
    from core.campaign import run_campaign
    from core.version_info import format_version_info
    from settings.config import apply_overrides, get_settings
except ImportError as e:
    print(f"Health check failed: Import error - {e}")
    sys.exit(1)


def health_check() -> bool:
    """Run a tiny noiseless campaign and check it recovers positions."""
    try:
        config = apply_overrides(
            get_settings(),
            {
                "n_drops": 1,
                "ues_per_drop": 100,
                "workers": 1,
                "noise": {"sigma_los": 0.0, "sigma_nlos": 0.0, "nlos_excess_mean": 0.0},
                "ambiguity": {"zeta": 0.0},
            },
        )
        stats = run_campaign(config)
        worst = max(stats.samples("error_3d"))
        if worst > 10 * config.solver.epsilon:
            print(f"Health check failed: noiseless 3D error {worst:.3e} m")
            return False
        print(
            f"Health check passed: {format_version_info()}, "
            f"{stats.converged} UEs solved"
        )
        return True

    except Exception as e:
        print(f"Health check failed: {e}")
        return False


if __name__ == "__main__":
    sys.exit(0 if health_check() else 1)
