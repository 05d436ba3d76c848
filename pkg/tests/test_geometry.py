"""Footprint geometry: ellipse parameters, angular extents, exclusion radii."""

import math

import numpy as np
import pytest

from aerial_link.errors import InvalidGeometry, OutOfFootprint
from aerial_link.geometry import (
    AntennaConfig,
    AntennaMode,
    angular_extent,
    boundary_radii,
    compute_footprint,
    extent_weights,
)
from aerial_link.scenario import ScenarioConfig, directional


def ellipse_residual(fp, r, phi):
    """Implicit ellipse equation at the polar point (r, phi); 0 on the boundary."""
    x = r * math.cos(phi)
    y = r * math.sin(phi)
    return ((x - fp.center_offset) / fp.semi_major) ** 2 + (y / fp.semi_minor) ** 2 - 1.0


class TestComputeFootprint:
    def test_untilted_cone_is_centered_circle(self):
        fp = compute_footprint(75.0, directional(90.0, 0.0))
        expected = 75.0 * math.tan(math.radians(45.0))
        assert fp.semi_major == pytest.approx(expected, rel=1e-12)
        assert fp.semi_minor == pytest.approx(expected, rel=1e-12)
        assert fp.center_offset == pytest.approx(0.0, abs=1e-9)
        assert fp.inner_radius == 0.0

    def test_tilted_cone_reference_values(self):
        # beamwidth 60 deg tilted 30 deg from 75 m above BS height
        fp = compute_footprint(75.0, directional(60.0, 30.0))
        assert fp.semi_major == pytest.approx(75.0 * math.sin(math.radians(60.0)), rel=1e-12)
        assert fp.semi_minor == pytest.approx(75.0 * 0.5 / math.sqrt(0.5), rel=1e-12)
        assert fp.center_offset == pytest.approx(fp.semi_major, rel=1e-12)
        assert fp.inner_radius == 0.0
        assert fp.semi_major == pytest.approx(64.9519, abs=1e-3)
        assert fp.semi_minor == pytest.approx(53.0330, abs=1e-3)

    def test_degenerate_cone_rejected(self):
        with pytest.raises(InvalidGeometry):
            AntennaConfig(120.0, 40.0, AntennaMode.DIRECTIONAL)  # 40 + 60 >= 90

    def test_directional_below_bs_rejected(self):
        with pytest.raises(InvalidGeometry):
            compute_footprint(-10.0, directional(60.0, 10.0))
        with pytest.raises(InvalidGeometry):
            compute_footprint(0.0, directional(60.0, 10.0))

    def test_omni_sentinel(self):
        fp = compute_footprint(-23.5, AntennaConfig())
        assert fp.is_omni
        assert math.isinf(fp.semi_major)
        assert fp.center_offset == 0.0 and fp.inner_radius == 0.0

    def test_invariants_across_cone_family(self):
        for dh in (10.0, 75.0, 200.0):
            for beam in (20.0, 60.0, 110.0):
                for tilt in (0.0, 10.0, 25.0):
                    if tilt + beam / 2 >= 90.0:
                        continue
                    fp = compute_footprint(dh, directional(beam, tilt))
                    assert fp.semi_minor <= fp.semi_major + 1e-9
                    assert fp.inner_radius >= 0.0
                    assert fp.inner_radius <= fp.center_offset + 1e-9
                    assert fp.center_offset <= fp.inner_radius + fp.semi_major + 1e-9

    def test_area_increases_with_beamwidth(self):
        for tilt in (0.0, 15.0, 30.0):
            areas = [
                compute_footprint(75.0, directional(b, tilt)).area
                for b in np.arange(10.0, 90.0 - 2 * tilt, 5.0)
            ]
            assert all(b > a for a, b in zip(areas, areas[1:]))


class TestAngularExtent:
    def test_untilted_interior_is_full_ring(self):
        fp = compute_footprint(75.0, directional(90.0, 0.0))
        ext = angular_extent(10.0, fp)
        assert ext.phi1 == pytest.approx(math.pi / 2)
        assert ext.phi2 == pytest.approx(math.pi / 2)
        assert ext.weight == pytest.approx(math.pi)

    def test_omni_weight_is_pi(self):
        fp = compute_footprint(-23.5, AntennaConfig())
        for r in (0.0, 10.0, 1e4):
            assert angular_extent(r, fp).weight == pytest.approx(math.pi)

    def test_outside_footprint_raises(self):
        fp = compute_footprint(75.0, directional(60.0, 30.0))
        with pytest.raises(OutOfFootprint):
            angular_extent(fp.outer_radius * 1.01, fp)
        tight = compute_footprint(75.0, directional(30.0, 40.0))
        assert tight.inner_radius > 0.0
        with pytest.raises(OutOfFootprint):
            angular_extent(tight.inner_radius * 0.9, tight)

    @pytest.mark.parametrize("beam,tilt", [(60.0, 30.0), (60.0, 20.0), (90.0, 5.0), (30.0, 40.0)])
    def test_returned_angles_lie_on_ellipse_boundary(self, beam, tilt):
        # Any angle strictly inside (0, pi) is a genuine circle/ellipse crossing.
        fp = compute_footprint(75.0, directional(beam, tilt))
        radii = np.linspace(fp.inner_radius, fp.outer_radius, 41)[1:-1]
        for r in radii:
            ext = angular_extent(float(r), fp)
            for phi in (ext.phi1, ext.phi2):
                if 1e-9 < phi < math.pi - 1e-9 and abs(phi - math.pi / 2) > 1e-9:
                    assert abs(ellipse_residual(fp, float(r), phi)) < 1e-7, (r, phi)

    def test_extents_match_inside_outside_classification(self):
        # The arcs [0, phi1] U [phi2, pi] must agree with the pointwise
        # inside-ellipse test on a dense azimuth grid.
        fp = compute_footprint(75.0, directional(60.0, 20.0))
        phis = np.linspace(0.0, math.pi, 721)
        for r in np.linspace(1.0, fp.outer_radius * 0.999, 37):
            ext = angular_extent(float(r), fp)
            inside = np.array([ellipse_residual(fp, float(r), p) <= 1e-12 for p in phis])
            claimed = (phis <= ext.phi1 + 1e-7) | (phis >= ext.phi2 - 1e-7)
            mismatches = np.count_nonzero(inside != claimed)
            assert mismatches <= 4, f"r={r}: {mismatches} azimuth mismatches"

    def test_branch_boundary_phi2_is_pi_beyond_rear_vertex(self):
        fp = compute_footprint(75.0, directional(60.0, 20.0))
        rear = fp.semi_major - fp.center_offset
        assert rear > 0
        assert angular_extent(rear, fp).phi2 == pytest.approx(math.pi, abs=1e-9)
        assert angular_extent(rear * 1.0001, fp).phi2 == pytest.approx(math.pi)

    def test_branch_boundary_minor_axis_crossing(self):
        # Where the circle passes through the ellipse point straight above the
        # origin, one crossing angle is exactly pi/2.
        fp = compute_footprint(75.0, directional(60.0, 20.0))
        r_y = (fp.semi_minor / fp.semi_major) * math.sqrt(
            fp.semi_major**2 - fp.center_offset**2)
        ext = angular_extent(r_y, fp)
        assert min(abs(ext.phi1 - math.pi / 2), abs(ext.phi2 - math.pi / 2)) < 1e-9

    def test_weight_continuity_across_branches(self):
        # The weight is continuous in r but with square-root slope at the
        # branch radii, so check that the largest grid jump vanishes under
        # bisection instead of bounding a fixed-grid difference.
        fp = compute_footprint(75.0, directional(60.0, 20.0))
        radii = np.linspace(fp.inner_radius + 1e-6, fp.outer_radius - 1e-6, 4001)
        weights = extent_weights(radii, fp)
        assert np.all(weights >= -1e-12)
        assert np.all(weights <= math.pi + 1e-12)
        k = int(np.argmax(np.abs(np.diff(weights))))
        a, b = float(radii[k]), float(radii[k + 1])
        wa, wb = float(weights[k]), float(weights[k + 1])
        for _ in range(40):
            mid = 0.5 * (a + b)
            wm = float(extent_weights(np.array([mid]), fp)[0])
            if abs(wm - wa) >= abs(wb - wm):
                b, wb = mid, wm
            else:
                a, wa = mid, wm
        assert abs(wb - wa) < 1e-4, "angular weight should be continuous in r"

    def test_weight_pinches_to_zero_at_outer_edge(self):
        fp = compute_footprint(75.0, directional(60.0, 30.0))
        assert angular_extent(fp.outer_radius, fp).weight == pytest.approx(0.0, abs=1e-6)


class TestBoundaryRadii:
    @pytest.fixture
    def channel(self):
        return ScenarioConfig().channel

    @pytest.fixture
    def footprint(self):
        return compute_footprint(75.0, directional(60.0, 20.0))

    def test_same_condition_radius_is_serving_distance(self, channel, footprint):
        for r_s in (10.0, 50.0, 100.0):
            r_l, _ = boundary_radii(r_s, "L", channel, footprint)
            _, r_n = boundary_radii(r_s, "N", channel, footprint)
            assert r_l == r_s
            assert r_n == r_s

    def test_equal_path_loss_laws_are_symmetric(self, footprint):
        ch = ScenarioConfig(alpha_l=2.2, alpha_n=2.2, a_l_db=-40.0, a_n_db=-40.0,
                            m_l=3, m_n=1).channel
        for r_s in (5.0, 40.0, 80.0):
            r_l, r_n = boundary_radii(r_s, "L", ch, footprint)
            assert r_n == pytest.approx(r_s, rel=1e-12)
            r_l, r_n = boundary_radii(r_s, "N", ch, footprint)
            assert r_l == pytest.approx(r_s, rel=1e-12)

    def test_cross_condition_radius_equalizes_path_loss(self, channel, footprint):
        from aerial_link.channel import path_loss

        dh = footprint.delta_h
        r_s = 110.0
        r_l, r_n = boundary_radii(r_s, "L", channel, footprint)
        if r_n > footprint.inner_radius:  # unclamped: exact mean-power tie
            assert path_loss(r_n, dh, "N", channel) == pytest.approx(
                path_loss(r_s, dh, "L", channel), rel=1e-10)
        r_l, r_n = boundary_radii(r_s, "N", channel, footprint)
        if r_l < footprint.outer_radius:
            assert path_loss(r_l, dh, "L", channel) == pytest.approx(
                path_loss(r_s, dh, "N", channel), rel=1e-10)

    def test_monotone_in_serving_distance(self, channel, footprint):
        grid = np.linspace(footprint.inner_radius, footprint.outer_radius, 30)
        for v in ("L", "N"):
            pairs = [boundary_radii(float(r), v, channel, footprint) for r in grid]
            for (a_l, a_n), (b_l, b_n) in zip(pairs, pairs[1:]):
                assert b_l >= a_l - 1e-9
                assert b_n >= a_n - 1e-9
