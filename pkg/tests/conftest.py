"""Test configuration ensuring local packages are importable."""

import os
import sys

import numpy as np
import pytest

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from core.geometry import GnbNode, Position3D, UeKind, UeNode, nearest_gnb  # noqa: E402
from settings.config import CampaignConfig, NoiseModel, Wavelength  # noqa: E402


@pytest.fixture
def wavelength():
    """Default 3.5 GHz carrier."""
    return Wavelength()


@pytest.fixture
def noiseless():
    """Noise model with every error term switched off."""
    return NoiseModel(sigma_los=0.0, sigma_nlos=0.0, nlos_excess_mean=0.0)


@pytest.fixture
def gnbs():
    """Six gNBs at mixed heights with nonzero clock biases."""
    layout = [
        (0.0, 0.0, 4.0),
        (50.0, 0.0, 8.0),
        (100.0, 0.0, 5.0),
        (0.0, 50.0, 9.0),
        (50.0, 50.0, 3.0),
        (100.0, 50.0, 7.0),
    ]
    return [
        GnbNode(id=k, position=Position3D(*xyz), clock_bias=(k - 2.5) * 1e-7)
        for k, xyz in enumerate(layout)
    ]


@pytest.fixture
def make_ue():
    """Factory building a UE served by its nearest gNB."""

    def _make(
        gnbs,
        x,
        y,
        z=1.5,
        ue_id=0,
        clock_bias=3e-7,
        kind=UeKind.TARGET,
    ):
        position = Position3D(x, y, z)
        return UeNode(
            id=ue_id,
            position=position,
            clock_bias=clock_bias,
            kind=kind,
            serving_gnb=nearest_gnb(position, gnbs),
        )

    return _make


@pytest.fixture
def rng():
    """Seeded generator for reproducible draws."""
    return np.random.default_rng(12345)


@pytest.fixture
def small_config(tmp_path):
    """A fast two-drop campaign writing into a temporary directory."""
    return CampaignConfig(
        n_drops=2,
        ues_per_drop=50,
        master_seed=11,
        output_dir=str(tmp_path / "results"),
        log_dir=str(tmp_path / "log"),
    )
