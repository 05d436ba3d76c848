"""Path loss, LoS probability step function and Nakagami fading."""

import math

import numpy as np
import pytest

from aerial_link.channel import (
    Environment,
    fading_cdf,
    los_probability,
    los_step_function,
    path_loss,
    received_power,
    sample_fading,
)
from aerial_link.errors import ValidationError
from aerial_link.scenario import ENVIRONMENT_PRESETS, ScenarioConfig

URBAN = ENVIRONMENT_PRESETS["urban"]


def table_channel():
    return ScenarioConfig().channel


class TestPathLoss:
    def test_reference_distance_gain(self):
        ch = ScenarioConfig(a_l_db=0.0).channel
        assert path_loss(0.0, 1.0, "L", ch) == pytest.approx(1.0)

    def test_reference_parameters_at_altitude(self):
        ch = table_channel()
        expected = 10 ** (-4.11) * (98.5**2) ** (-2.09 / 2)
        assert path_loss(0.0, 98.5, "L", ch) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(5.29e-9, rel=0.01)

    def test_strictly_decreasing_in_distance(self):
        ch = table_channel()
        r = np.linspace(0.0, 2000.0, 500)
        for v in ("L", "N"):
            vals = path_loss(r, 100.0, v, ch)
            assert np.all(np.diff(vals) < 0)

    def test_nlos_weaker_beyond_crossover(self):
        # A_N > A_L here, so NLoS wins at very short range; the steeper
        # exponent makes LoS dominate past the (computed) crossover.
        ch = table_channel()
        dh = 75.0
        ratio = ch.a_n / ch.a_l
        d_cross = ratio ** (1.0 / (ch.alpha_n - ch.alpha_l))
        r_cross = math.sqrt(max(d_cross**2 - dh**2, 0.0))
        r = np.linspace(r_cross + 1.0, r_cross + 3000.0, 200)
        assert np.all(path_loss(r, dh, "N", ch) < path_loss(r, dh, "L", ch))

    def test_rejects_unknown_condition(self):
        with pytest.raises(ValueError):
            path_loss(10.0, 75.0, "X", table_channel())


class TestLosProbability:
    def test_below_first_breakpoint_is_one(self):
        # urban: r*sqrt(ab)/1000 ~ 0.61 at 50 m -> empty building product
        assert los_probability(50.0, 100.0, 25.0, URBAN) == 1.0

    def test_mid_range_value_in_unit_interval_and_matches_plateau(self):
        p = los_probability(200.0, 100.0, 25.0, URBAN)
        assert 0.0 < p < 1.0
        step = los_step_function(URBAN, 100.0, 25.0, 500.0)
        assert float(step(200.0)) == p

    def test_equal_heights_collapse_to_identical_factors(self):
        h = 25.0
        for r in (100.0, 300.0, 777.0):
            m = math.floor(r * math.sqrt(URBAN.a * URBAN.b) / 1000.0 - 1.0)
            expected = (1.0 - math.exp(-h * h / (2.0 * URBAN.c**2))) ** (m + 1)
            assert los_probability(r, h, h, URBAN) == pytest.approx(expected, rel=1e-12)

    def test_nonincreasing_in_distance(self):
        r = np.arange(1.0, 2001.0)
        vals = np.array([los_probability(float(x), 100.0, 25.0, URBAN) for x in r])
        assert np.all(np.diff(vals) <= 1e-15)

    def test_nondecreasing_in_altitude(self):
        for r in (150.0, 400.0, 900.0):
            vals = [los_probability(r, h, 25.0, URBAN) for h in (1.5, 50.0, 100.0, 150.0)]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


class TestLosStepFunction:
    def test_first_breakpoint_urban(self):
        step = los_step_function(URBAN, 100.0, 25.0, 1000.0)
        assert step.breakpoints[0] == pytest.approx(1000.0 / math.sqrt(150.0), rel=1e-12)
        assert step.breakpoints[0] == pytest.approx(81.65, abs=0.01)

    def test_lookup_equals_direct_formula_exactly(self):
        step = los_step_function(URBAN, 100.0, 25.0, 3000.0)
        rng = np.random.default_rng(7)
        for r in rng.uniform(0.0, 3000.0, 1000):
            assert float(step(float(r))) == los_probability(float(r), 100.0, 25.0, URBAN)

    def test_plateaus_nonincreasing(self):
        step = los_step_function(URBAN, 100.0, 25.0, 10_000.0)
        assert np.all(np.diff(step.plateaus) <= 1e-15)
        assert np.all(step.plateaus <= 1.0)
        assert np.all(step.plateaus >= 0.0)

    def test_squared_lookup_matches(self):
        step = los_step_function(URBAN, 100.0, 25.0, 3000.0)
        r = np.linspace(0.0, 2999.0, 500)
        assert np.array_equal(step.lookup_squared(r * r), step(r))


class TestFadingCdf:
    def test_zero_at_origin(self):
        for m in (1, 2, 3, 5):
            assert fading_cdf(0.0, m) == 0.0

    def test_rayleigh_reduction(self):
        omega = np.linspace(0.0, 10.0, 50)
        assert fading_cdf(omega, 1) == pytest.approx(1.0 - np.exp(-omega), rel=1e-12)

    def test_m3_reference_point(self):
        # 1 - (1 + 3 + 4.5) e^-3
        assert fading_cdf(1.0, 3) == pytest.approx(1.0 - 8.5 * math.exp(-3.0), rel=1e-12)
        assert fading_cdf(1.0, 3) == pytest.approx(0.57681, abs=1e-5)

    def test_valid_cdf(self):
        omega = np.linspace(0.0, 50.0, 2000)
        for m in (1, 2, 3, 4, 5):
            vals = fading_cdf(omega, m)
            assert np.all(np.diff(vals) >= -1e-15)
            assert fading_cdf(50.0, m) > 1.0 - 1e-12


class TestSampleFading:
    def test_unit_mean(self):
        rng = np.random.default_rng(42)
        draws = sample_fading(3, rng, size=1_000_000)
        assert draws.mean() == pytest.approx(1.0, abs=0.01)

    def test_second_moment_matches_gamma_identity(self):
        rng = np.random.default_rng(43)
        for m in (1, 3):
            draws = sample_fading(m, rng, size=1_000_000)
            assert np.mean(draws**2) == pytest.approx((m + 1) / m, rel=0.01)

    def test_empirical_cdf_matches_formula(self):
        rng = np.random.default_rng(44)
        draws = sample_fading(3, rng, size=1_000_000)
        assert np.mean(draws < 1.0) == pytest.approx(fading_cdf(1.0, 3), abs=0.005)

    def test_deterministic_under_fixed_seed(self):
        a = sample_fading(3, np.random.default_rng(5), size=100)
        b = sample_fading(3, np.random.default_rng(5), size=100)
        assert np.array_equal(a, b)


class TestReceivedPower:
    def test_zero_fading_gives_zero(self):
        assert received_power(50.0, 75.0, "L", 0.0, table_channel()) == 0.0

    def test_linear_in_transmit_power(self):
        base = ScenarioConfig()
        doubled = base.replace(p_tx_dbm=base.p_tx_dbm + 10.0 * math.log10(2.0))
        p1 = received_power(50.0, 75.0, "L", 1.0, base.channel)
        p2 = received_power(50.0, 75.0, "L", 1.0, doubled.channel)
        assert p2 == pytest.approx(2.0 * p1, rel=1e-9)

    def test_reference_composition(self):
        # 180-degree beamwidth directional UAV antenna: gain 29000/180^2
        from aerial_link.scenario import directional

        cfg = ScenarioConfig(antenna=directional(180.0 - 1e-9, 0.0), h_u=123.5, h_b=25.0)
        ch = cfg.channel
        assert ch.g_u == pytest.approx(29000.0 / 180.0**2, rel=1e-6)
        expected = ch.p_tx * ch.g_tot * path_loss(0.0, 98.5, "L", ch)
        got = received_power(0.0, 98.5, "L", 1.0, ch)
        assert got == pytest.approx(expected, rel=1e-12)
        assert got == pytest.approx(39.8 * 0.5 * 0.895 * 5.29e-9, rel=0.01)


class TestEnvironmentValidation:
    def test_bad_fraction_rejected(self):
        with pytest.raises(ValidationError):
            Environment(a=1.5, b=500.0, c=15.0)

    def test_warns_when_nlos_fading_milder(self):
        with pytest.warns(UserWarning):
            ScenarioConfig(m_l=1, m_n=3).channel
