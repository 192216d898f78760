"""Tests for the campaign runner, calibration and sweeps."""

import csv
from unittest.mock import patch

import pytest

from core.campaign import calibrate, run_campaign, run_drop, sweep, write_sweep
from core.campaign.runner import config_echo
from core.campaign.statistics import percentile
from core.errors import (
    ConfigurationError,
    IllConditionedGeometryError,
    NoSolvableUEsError,
    StatisticsError,
)
from settings.config import Scenario, apply_overrides


class TestRunCampaign:
    """Test cases for campaign runs."""

    def test_deterministic(self, small_config):
        """Test that a seed reproduces every sample."""
        a = run_campaign(small_config)
        b = run_campaign(small_config)

        assert a.records == b.records
        assert a.ambiguity_tally == b.ambiguity_tally
        assert a.exclusions == b.exclusions

    def test_seed_changes_samples(self, small_config):
        """Test that another seed gives other samples."""
        other = apply_overrides(small_config, {"master_seed": 12})

        assert run_campaign(small_config).records != run_campaign(other).records

    def test_worker_count_does_not_change_results(self, small_config):
        """Test that parallel drops reproduce the serial run."""
        serial = run_campaign(small_config)
        parallel = run_campaign(apply_overrides(small_config, {"workers": 2}))

        assert parallel.records == serial.records
        assert parallel.ambiguity_tally == serial.ambiguity_tally

    def test_counts(self, small_config):
        """Test link and UE bookkeeping."""
        stats = run_campaign(small_config)
        n_targets = small_config.n_drops * small_config.ues_per_drop

        # Every target and reference UE measures every gNB
        assert stats.ambiguity_tally.total_links == small_config.n_drops * (
            small_config.ues_per_drop + small_config.layout.reference_ue_count
        ) * small_config.layout.gnb_count
        assert stats.exclusions["outside_hull"] > 0
        assert stats.attempted + stats.exclusions["outside_hull"] == n_targets
        assert stats.converged + stats.excluded_ues == n_targets
        assert len(stats.samples("error_3d")) == stats.converged
        assert stats.convergence_rate > 0.9

    def test_phase_only_run(self, small_config):
        """Test that skipping the solver still gathers phase statistics."""
        stats = run_campaign(small_config, estimate_positions=False)

        assert stats.attempted == 0
        assert stats.samples("error_3d") == []
        assert len(stats.samples("dd_phase_error")) > 0
        assert len(stats.samples("link_phase_error")) > 0

    def test_no_solvable_ues(self, small_config):
        """Test that a run without any solved UE raises."""
        with (
            patch(
                "core.campaign.runner.solve",
                side_effect=IllConditionedGeometryError("singular"),
            ),
            pytest.raises(NoSolvableUEsError),
        ):
            run_campaign(small_config)

    def test_nlos_raises_phase_errors(self, small_config):
        """Test that the mixed scenario is worse than pure LOS."""
        los = run_campaign(apply_overrides(small_config, {"scenario": "los"}))
        mixed = run_campaign(small_config)

        assert percentile(los.samples("dd_phase_error"), 0.9) < percentile(
            mixed.samples("dd_phase_error"), 0.9
        )

    def test_drop_is_self_contained(self, small_config):
        """Test that a drop does not depend on the drops before it."""
        stats = run_campaign(small_config)
        drop = run_drop(small_config, 1)

        assert [r for r in stats.records if r.drop == 1] == drop.records

    def test_config_echo_excludes_execution_fields(self, small_config):
        """Test that the echo holds only result-relevant settings."""
        echo = config_echo(small_config)

        assert echo["master_seed"] == 11
        assert echo["noise"]["sigma_los"] == pytest.approx(0.4255)
        assert "workers" not in echo
        assert "output_dir" not in echo


class TestCalibration:
    """Test cases for noise calibration."""

    def test_los_calibration(self, small_config):
        """Test that the LOS std lands near 0.4255 rad for a 1.4 rad target."""
        config = apply_overrides(small_config, {"scenario": Scenario.LOS_ONLY})
        result = calibrate(config)

        assert result.parameter == "sigma_los"
        assert result.achieved == pytest.approx(1.4, abs=0.02)
        assert result.value == pytest.approx(0.4255, rel=0.15)
        assert result.evaluations >= 3

    def test_nlos_scale_keeps_split(self, small_config):
        """Test the joint NLOS fit hitting 3.4 rad with the split preserved."""
        result = calibrate(small_config, parameter="nlos_scale")

        assert result.parameter == "nlos_scale"
        assert result.achieved == pytest.approx(3.4, abs=0.02)
        assert 0.0 < result.value < 4.0
        noise = small_config.noise
        assert result.noise["sigma_nlos"] == pytest.approx(noise.sigma_nlos * result.value)
        assert result.noise["nlos_excess_mean"] / result.noise["sigma_nlos"] == pytest.approx(
            noise.nlos_excess_mean / noise.sigma_nlos
        )
        assert result.noise["sigma_los"] == noise.sigma_los

    def test_excess_path_fit(self, small_config):
        """Test fitting the excess-path mean alone."""
        result = calibrate(small_config, parameter="nlos_excess_mean")

        assert result.achieved == pytest.approx(3.4, abs=0.02)
        assert result.noise["nlos_excess_mean"] == result.value
        assert result.noise["sigma_nlos"] == small_config.noise.sigma_nlos

    def test_nlos_parameter_rejected_for_los(self, small_config):
        """Test that NLOS parameters cannot be fitted without NLOS links."""
        config = apply_overrides(small_config, {"scenario": Scenario.LOS_ONLY})

        with pytest.raises(ConfigurationError):
            calibrate(config, parameter="nlos_scale")

    def test_unbracketed_target(self, small_config):
        """Test that an unreachable target raises."""
        config = apply_overrides(small_config, {"scenario": Scenario.LOS_ONLY})

        with pytest.raises(StatisticsError):
            calibrate(config, target=100.0)


class TestSweep:
    """Test cases for parameter sweeps."""

    def test_zeta_sweep(self, small_config, tmp_path):
        """Test one row per value with growing corruption."""
        results = sweep(small_config, "zeta", [0.0, 0.01])
        path = write_sweep("zeta", results, tmp_path)

        with path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [float(r["value"]) for r in rows] == [0.0, 0.01]
        assert "error_3d_p90" in rows[0]
        assert float(rows[0]["empirical_zeta"]) == 0.0
        assert float(rows[1]["empirical_zeta"]) > 0.0

    def test_unknown_parameter(self, small_config):
        """Test that unknown sweep parameters raise."""
        with pytest.raises(StatisticsError):
            sweep(small_config, "gamma", [1.0])
