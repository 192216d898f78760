"""End-to-end checks of the calibrated simulator on desk-scale campaigns."""

import math

import pytest

from core.campaign import export_results, run_campaign
from core.campaign.statistics import percentile
from core.campaign.validation import (
    check_bias_cancellation,
    check_gradient,
    check_grid_oracle,
    check_noiseless_exactness,
)
from core.measurement import phase_error_to_distance
from settings.config import CampaignConfig, Wavelength, apply_overrides


@pytest.fixture(scope="module")
def base_config(tmp_path_factory):
    """Shipped defaults shrunk to 20 drops of 100 UEs."""
    root = tmp_path_factory.mktemp("acceptance")
    return CampaignConfig(
        n_drops=20,
        ues_per_drop=100,
        master_seed=2024,
        output_dir=str(root / "results"),
        log_dir=str(root / "log"),
    )


@pytest.fixture(scope="module")
def mixed_run(base_config):
    """Calibrated LOS/NLOS campaign."""
    return run_campaign(base_config)


class TestProperties:
    """Test cases for exact properties of the forward model and solver."""

    def test_clock_bias_cancellation(self):
        """Test cancellation over 10^4 scenes with biases up to 1 ms."""
        result = check_bias_cancellation(n_scenes=10_000)

        assert result.passed, result.detail

    def test_gradient(self):
        """Test design rows against finite differences on 10^3 geometries."""
        result = check_gradient(n_geometries=1000)

        assert result.passed, result.detail

    def test_noiseless_exactness(self, base_config):
        """Test exact recovery over more than a thousand in-hull UEs."""
        result = check_noiseless_exactness(base_config)

        assert result.passed, result.detail

    def test_grid_oracle(self):
        """Test least squares against the lattice minimizer on 20 instances."""
        result = check_grid_oracle(n_instances=20)

        assert result.passed, result.detail


class TestCalibration:
    """Test cases for the shipped noise calibration."""

    def test_los_phase_percentile(self, base_config):
        """Test the LOS 90th-percentile phase error of 1.4 rad."""
        los = apply_overrides(base_config, {"n_drops": 10, "scenario": "los"})
        stats = run_campaign(los, estimate_positions=False)

        assert percentile(stats.samples("dd_phase_error"), 0.9) == pytest.approx(
            1.4, rel=0.15
        )

    def test_mixed_phase_percentile(self, mixed_run):
        """Test the LOS/NLOS 90th-percentile phase error of 3.4 rad."""
        assert percentile(mixed_run.samples("dd_phase_error"), 0.9) == pytest.approx(
            3.4, rel=0.15
        )

    @pytest.mark.parametrize("seed", [7, 31, 555])
    def test_mixed_phase_percentile_across_seeds(self, base_config, seed):
        """Test that the NLOS split holds the 3.4 rad tail on other layouts."""
        config = apply_overrides(base_config, {"n_drops": 10, "master_seed": seed})
        stats = run_campaign(config, estimate_positions=False)

        assert percentile(stats.samples("dd_phase_error"), 0.9) == pytest.approx(
            3.4, rel=0.15
        )

    def test_phase_to_distance(self):
        """Test 1.4 and 3.4 rad against 1.91 and 4.64 cm at 3.5 GHz."""
        wavelength = Wavelength()

        assert phase_error_to_distance(1.4, wavelength) == pytest.approx(0.0191, rel=0.01)
        assert phase_error_to_distance(3.4, wavelength) == pytest.approx(0.0464, rel=0.01)


class TestAccuracyEnvelope:
    """Test cases for end-to-end positioning accuracy."""

    def test_horizontal(self, mixed_run):
        """Test the 90th-percentile horizontal error in [1, 5] cm."""
        p90 = percentile(mixed_run.samples("horizontal"), 0.9)

        assert 0.01 <= p90 <= 0.05

    def test_vertical(self, mixed_run):
        """Test the 90th-percentile vertical error in [6, 30] cm."""
        p90 = percentile(mixed_run.samples("vertical"), 0.9)

        assert 0.06 <= p90 <= 0.30

    def test_vertical_worse_than_horizontal(self, mixed_run):
        """Test that height is the weak direction of the geometry."""
        assert percentile(mixed_run.samples("vertical"), 0.9) > 2 * percentile(
            mixed_run.samples("horizontal"), 0.9
        )
        assert percentile(mixed_run.samples("vdop"), 0.5) > percentile(
            mixed_run.samples("hdop"), 0.5
        )

    def test_3d(self, mixed_run):
        """Test 80th and 90th-percentile 3D errors."""
        samples = mixed_run.samples("error_3d")

        assert percentile(samples, 0.8) < 0.10
        assert percentile(samples, 0.9) < 0.20

    def test_convergence(self, mixed_run):
        """Test that nearly every in-hull UE is solved."""
        assert mixed_run.convergence_rate > 0.95

    def test_median_grows_with_noise(self, base_config):
        """Test that the median 3D error is monotone in the LOS noise."""
        medians = []
        for sigma in (0.0, 0.1, 0.2, 0.4):
            config = apply_overrides(
                base_config,
                {"n_drops": 5, "scenario": "los", "noise": {"sigma_los": sigma}},
            )
            medians.append(percentile(run_campaign(config).samples("error_3d"), 0.5))

        assert medians == sorted(medians)
        assert medians[0] < 1e-3


class TestAmbiguitySensitivity:
    """Test cases for wrong integer-ambiguity fixing."""

    @pytest.mark.parametrize(("eta", "metric"), [(3, "horizontal"), (23, "vertical")])
    def test_degradation_is_monotone(self, base_config, eta, metric):
        """Test non-decreasing errors in zeta and the empirical fixing rate."""
        p90s = []
        for zeta in (0.0, 1e-3, 1e-2):
            config = apply_overrides(
                base_config,
                {
                    "ambiguity": {
                        "zeta": zeta,
                        "eta": eta,
                        "magnitude_mode": "cycles_times_eta",
                    }
                },
            )
            stats = run_campaign(config)
            p90s.append(percentile(stats.samples(metric), 0.9))

            total = stats.ambiguity_tally.total_links
            assert total == config.n_drops * (
                config.ues_per_drop + config.layout.reference_ue_count
            ) * config.layout.gnb_count
            sigma = math.sqrt(zeta * (1 - zeta) / total)
            assert abs(stats.ambiguity_tally.empirical_zeta - zeta) <= 4 * sigma + 1e-12

        assert p90s == sorted(p90s)
        assert p90s[2] > p90s[0]


class TestDeterminism:
    """Test cases for reproducible exports."""

    @pytest.mark.parametrize("export_format", ["csv", "json"])
    def test_byte_identical_exports(self, base_config, tmp_path, export_format):
        """Test that two runs of one configuration export the same bytes."""
        config = apply_overrides(base_config, {"n_drops": 2, "ambiguity": {"zeta": 0.01}})
        first = export_results(run_campaign(config), tmp_path / "a", export_format)
        second = export_results(run_campaign(config), tmp_path / "b", export_format)

        assert [p.name for p in first] == [p.name for p in second]
        for a, b in zip(first, second, strict=True):
            assert a.read_bytes() == b.read_bytes()
