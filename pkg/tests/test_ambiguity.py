"""Tests for the integer-ambiguity error model."""

import dataclasses
import math

import numpy as np
import pytest

from core.ambiguity import (
    AmbiguityOutcome,
    corrupt_set,
    inject_ambiguity_error,
    resolve_fixed,
    resolve_ideal,
    search_space,
    tally,
)
from core.measurement import MeasurementSet, PhaseMeasurement, synthesize_set
from settings.config import AmbiguityModel, MagnitudeMode


def _link(n_cycles=1000, gnb_id=0):
    return PhaseMeasurement(
        gnb_id=gnb_id,
        ue_id=0,
        phi=1.25,
        true_distance=85.0,
        los=True,
        integer_ambiguity=n_cycles,
        noise_draw=0.0,
        clock_offset=0.0,
    )


class TestResolution:
    """Test cases for ideal and fixed resolution."""

    def test_ideal_restores_true_cycles(self, gnbs, make_ue, wavelength, noiseless, rng):
        """Test that ideal resolution gives the range observable."""
        ue = make_ue(gnbs, 30.0, 20.0, clock_bias=0.0)
        for m in synthesize_set(ue, gnbs, wavelength, noiseless, rng).measurements:
            offset = m.clock_offset
            assert resolve_ideal(m, wavelength) - offset == pytest.approx(
                m.true_distance, abs=1e-9
            )

    def test_fixed_equals_ideal_without_error(self, wavelength):
        """Test that an uncorrupted link resolves to the ideal observable."""
        m = _link()
        assert resolve_fixed(m, wavelength) == pytest.approx(resolve_ideal(m, wavelength))

    def test_wrong_fix_shifts_by_whole_wavelengths(self, wavelength):
        """Test that a wrong fix moves the observable by k lambda."""
        m = _link()
        wrong = dataclasses.replace(m, ambiguity_error=-2)

        shift = resolve_fixed(wrong, wavelength) - resolve_ideal(m, wavelength)
        assert shift == pytest.approx(-2 * wavelength.meters)
        assert wrong.fixed_cycles == 998


class TestInjection:
    """Test cases for wrong-fixing injection."""

    def test_zero_rate_is_identity(self, rng):
        """Test that zeta = 0 never corrupts."""
        model = AmbiguityModel(zeta=0.0)
        links = [_link(gnb_id=k) for k in range(1000)]

        assert [inject_ambiguity_error(m, model, rng) for m in links] == links

    def test_full_rate_respects_search_space(self, rng):
        """Test that zeta = 1 corrupts every link within eta * N."""
        model = AmbiguityModel(zeta=1.0, eta=3)
        for _ in range(5000):
            m = inject_ambiguity_error(_link(1000), model, rng)
            assert m.ambiguity_error != 0
            assert abs(m.ambiguity_error) <= 3000
            assert m.integer_ambiguity == 1000

    def test_eta_mode_support(self, rng):
        """Test the fixed-cycle support of the eta magnitude mode."""
        model = AmbiguityModel(
            zeta=1.0, eta=3, magnitude_mode=MagnitudeMode.CYCLES_TIMES_ETA
        )
        errors = {
            inject_ambiguity_error(_link(1000), model, rng).ambiguity_error
            for _ in range(5000)
        }

        assert errors == {-3, -2, -1, 1, 2, 3}

    def test_search_space(self):
        """Test N_t for both modes and a zero cycle count."""
        ne = AmbiguityModel(eta=3)
        eta = AmbiguityModel(eta=3, magnitude_mode=MagnitudeMode.CYCLES_TIMES_ETA)

        assert search_space(_link(500), ne) == 1500
        assert search_space(_link(0), ne) == 3
        assert search_space(_link(500), eta) == 3

    def test_empirical_rate(self):
        """Test that the observed corruption rate matches zeta."""
        model = AmbiguityModel(zeta=1e-2)
        rng = np.random.default_rng(21)
        corrupted = [inject_ambiguity_error(_link(), model, rng) for _ in range(100_000)]

        outcome = tally(corrupted)
        assert outcome.total_links == 100_000
        assert 0.008 <= outcome.empirical_zeta <= 0.012

    def test_corruption_nested_across_rates(self):
        """Test that links corrupted at a lower zeta stay corrupted at higher zeta."""
        links = [_link(gnb_id=k) for k in range(2000)]

        def run(zeta):
            rng = np.random.default_rng(99)
            model = AmbiguityModel(zeta=zeta)
            return [inject_ambiguity_error(m, model, rng).ambiguity_error for m in links]

        low, high = run(0.01), run(0.1)
        for a, b in zip(low, high, strict=True):
            if a != 0:
                assert a == b
        assert sum(e != 0 for e in low) < sum(e != 0 for e in high)

    def test_only_cycles_change(self, rng):
        """Test that corruption leaves phase, noise and geometry untouched."""
        model = AmbiguityModel(zeta=1.0)
        m = _link()
        wrong = inject_ambiguity_error(m, model, rng)

        assert wrong.phi == m.phi
        assert wrong.noise_draw == m.noise_draw
        assert wrong.true_distance == m.true_distance
        assert isinstance(wrong.ambiguity_error, int)

    def test_corrupt_set_keeps_serving(self, rng):
        """Test that set corruption preserves ids and the serving link."""
        links = tuple(_link(gnb_id=k) for k in range(6))
        measurements = MeasurementSet(ue_id=0, measurements=links, serving_gnb_id=2)

        corrupted = corrupt_set(measurements, AmbiguityModel(zeta=0.5), rng)
        assert corrupted.serving_gnb_id == 2
        assert [m.gnb_id for m in corrupted.measurements] == list(range(6))


class TestTally:
    """Test cases for ambiguity tallies."""

    def test_tally_counts(self):
        """Test totals and error magnitudes."""
        links = [_link(), _link(), _link()]
        links[1] = dataclasses.replace(links[1], ambiguity_error=4)

        outcome = tally(links)
        assert outcome.total_links == 3
        assert outcome.corrupted_links == 1
        assert outcome.per_link_error == (4,)
        assert outcome.empirical_zeta == pytest.approx(1 / 3)

    def test_outcomes_add(self):
        """Test that per-drop tallies combine."""
        a = AmbiguityOutcome(total_links=10, corrupted_links=1, per_link_error=(2,))
        b = AmbiguityOutcome(total_links=30, corrupted_links=2, per_link_error=(-1, 5))

        total = a + b
        assert total.total_links == 40
        assert total.corrupted_links == 3
        assert total.per_link_error == (2, -1, 5)

    def test_empty_tally(self):
        """Test that no links give a zero rate."""
        assert AmbiguityOutcome().empirical_zeta == 0.0
        assert tally([]).total_links == 0

    def test_phase_of_wrong_fix(self, wavelength):
        """Test that resolved phase includes the cycle error."""
        m = dataclasses.replace(_link(10), ambiguity_error=1)
        assert m.resolved_phase == pytest.approx(m.phi + 2 * math.pi * 11)
