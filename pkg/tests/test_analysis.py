"""Pseudothresholds, thresholds, TRIP/TIFD, fixed points, threshold sets."""

import math
from fractions import Fraction

import numpy as np
import pytest

from flowmap import analysis, settings
from flowmap.analysis import ScanGrid, SliceSpec
from flowmap.errors import NoPseudothresholdError
from flowmap.maps import one_parameter_map
from flowmap.poly import FailureVector, FlowMap, Polynomial


def _bisect(fn, lo, hi, iters=100):
    flo = fn(lo)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


@pytest.fixture(scope="module")
def gamma_th(tmr):
    # independent oracle: bisect the one-variable voter map against the
    # identity between 0.1 and 0.4
    voter = tmr.components["v"]
    return _bisect(lambda g: voter.evaluate({"v": g}) - g, 0.1, 0.4)


class TestPseudothreshold:
    def test_wire_level1_diagonal(self, tmr):
        g = settings.diagonal(tmr.variables)
        result = analysis.pseudothreshold(tmr, "w", g, 1)
        assert abs(result.value - 0.129) < 1e-3
        assert result.residual < 1e-6 * result.value
        assert result.bracket[0] <= result.value <= result.bracket[1]

    def test_one_parameter_level_independent(self):
        f = one_parameter_map(12, 2)
        g = settings.diagonal(("g",))
        values = [analysis.pseudothreshold(f, "g", g, level).value for level in (1, 2, 3, 5)]
        for v in values:
            assert abs(v - 1 / 12) < 1e-9

    def test_voter_same_value_for_first_levels(self, tmr, gamma_th):
        g = settings.diagonal(tmr.variables)
        values = [analysis.pseudothreshold(tmr, "v", g, level).value for level in (1, 2, 3)]
        assert max(values) - min(values) < 1e-9
        assert abs(values[0] - gamma_th) < 1e-8
        assert abs(values[0] - 0.246) < 1e-3

    def test_no_crossing_reports(self, tmr):
        g = settings.diagonal(tmr.variables)
        with pytest.raises(NoPseudothresholdError):
            analysis.pseudothreshold(tmr, "w", g, 1, ScanGrid(1e-9, 1e-2, 60))

    def test_residual_invariant_across_levels(self, tmr):
        g = settings.diagonal(tmr.variables)
        for level in (1, 2, 4):
            r = analysis.pseudothreshold(tmr, "w", g, level)
            assert abs(analysis.level_value(tmr, "w", g, r.value, level) - r.value) < 1e-6 * r.value


class TestAsymptotic:
    def test_wire_converges_to_voter_fixed_point(self, tmr, gamma_th):
        g = settings.diagonal(tmr.variables)
        result = analysis.asymptotic_location_threshold(tmr, "w", g)
        assert result.converged
        assert abs(result.value - gamma_th) < 1e-3
        assert abs(result.value - 0.246) < 1e-3

    def test_voter_immediate(self, tmr, gamma_th):
        g = settings.diagonal(tmr.variables)
        result = analysis.asymptotic_location_threshold(tmr, "v", g)
        assert result.level <= 2 and abs(result.value - gamma_th) < 1e-6

    def test_one_parameter_immediate(self):
        f = one_parameter_map(12, 2)
        result = analysis.asymptotic_location_threshold(f, "g", settings.diagonal(("g",)))
        assert result.level <= 2 and abs(result.value - 1 / 12) < 1e-9

    def test_ratio_to_level1(self, tmr):
        g = settings.diagonal(tmr.variables)
        level1 = analysis.pseudothreshold(tmr, "w", g, 1).value
        asym = analysis.asymptotic_location_threshold(tmr, "w", g).value
        assert abs(asym / level1 - 1.9) < 0.05


class TestTripCurves:
    def test_wire_crossings_increase_toward_threshold(self, tmr, gamma_th):
        g = settings.diagonal(tmr.variables)
        curves = analysis.trip_curves(tmr, "w", g, (1, 2, 3), np.linspace(1e-4, 0.4, 400))
        crossings = [c.crossings[0] for c in curves]
        assert crossings[0] < crossings[1] < crossings[2] < gamma_th

    def test_voter_crossings_coincide(self, tmr, gamma_th):
        g = settings.diagonal(tmr.variables)
        curves = analysis.trip_curves(tmr, "v", g, (1, 2, 3), np.linspace(1e-4, 0.4, 400))
        for curve in curves:
            assert len(curve.crossings) >= 1
            assert abs(curve.crossings[0] - gamma_th) < 2e-3

    def test_curve_vanishes_at_zero(self, tmr):
        g = settings.diagonal(tmr.variables)
        curves = analysis.trip_curves(tmr, "w", g, (1, 2), np.linspace(0.0, 0.3, 30))
        for curve in curves:
            assert curve.samples[0] == (0.0, 0.0)


class TestTifd:
    def test_tmr_vectors_vanish_at_fixed_points(self, tmr, gamma_th):
        points = [(0.0, 0.0), (0.5, 0.0), (0.5, gamma_th), (0.5, 0.5), (1.0, 0.0)]
        for w, v in points:
            field = analysis.tifd_field(tmr, ("w", "v"), {}, (np.array([w]), np.array([v])))
            assert field.magnitudes[0] < 1e-9

    def test_uv_arrow_at_sample_point(self, uv):
        field = analysis.tifd_field(uv, ("u", "v"), {}, (np.array([0.0]), np.array([0.2])))
        dx, dy = field.vectors[0]
        assert abs(dx - 0.04) < 1e-12
        assert abs(dy - (0.104 - 0.2)) < 1e-12

    def test_identity_map_field_vanishes(self):
        ident = FlowMap.identity(("a", "b"))
        xs = np.linspace(0, 1, 7)
        field = analysis.tifd_field(ident, ("a", "b"), {}, (xs, xs))
        assert np.all(field.magnitudes == 0.0)
        assert np.all(field.normalized == 0.0)


class TestTrajectory:
    def test_orbit_includes_start_and_stops_converged(self, uv):
        orbit = analysis.trajectory(uv, FailureVector({"u": 0.0, "v": 0.2}), 60)
        assert orbit[0]["v"] == 0.2
        assert orbit[-1].max_entry() < 1e-12
        assert len(orbit) < 60

    def test_orbit_stops_escaped(self, uv):
        orbit = analysis.trajectory(uv, FailureVector({"u": 0.28, "v": 0.0}), 60)
        assert orbit[-1].max_entry() > 1 - 1e-12


class TestFixedPoints:
    def test_tmr_has_exactly_five(self, tmr, gamma_th):
        points = analysis.fixed_points(tmr)
        assert len(points) == 5
        expected = [(0.0, 0.0), (0.5, 0.0), (0.5, gamma_th), (0.5, 0.5), (1.0, 0.0)]
        got = [(p["w"], p["v"]) for p in points]
        for ew, ev in expected:
            assert any(abs(gw - ew) < 1e-7 and abs(gv - ev) < 1e-7 for gw, gv in got)
        for p in points:
            out = tmr.evaluate(p)
            assert max(abs(out[v] - p[v]) for v in tmr.variables) < 1e-10

    def test_one_parameter_fixed_points(self):
        f = one_parameter_map(12, 2)
        points = analysis.fixed_points(f, seeds_per_axis=30)
        values = sorted(p["g"] for p in points)
        assert len(values) == 2
        assert abs(values[0]) < 1e-10 and abs(values[1] - 1 / 12) < 1e-10

    def test_uv_fixed_points_include_basin_saddle(self, uv):
        points = analysis.fixed_points(uv, seeds_per_axis=25)
        coords = sorted((p["u"], p["v"]) for p in points)
        assert any(abs(u) < 1e-10 and abs(v) < 1e-10 for u, v in coords)
        # the saddle on the basin boundary, found by Newton from a dense grid
        assert any(abs(u - 0.0836284569) < 1e-6 and abs(v - 0.1785818278) < 1e-6 for u, v in coords)
        for p in points:
            out = uv.evaluate(p)
            assert max(abs(out[v] - p[v]) for v in uv.variables) < 1e-10


class TestBelowThreshold:
    def test_inside_region(self, tmr):
        assert analysis.below_threshold(tmr, FailureVector({"w": 0.4, "v": 0.2}))

    def test_above_voter_threshold(self, tmr):
        assert not analysis.below_threshold(tmr, FailureVector({"w": 0.4, "v": 0.3}))

    def test_origin(self, tmr, uv):
        for f in (tmr, uv):
            assert analysis.below_threshold(f, FailureVector({v: 0.0 for v in f.variables}))

    def test_ray_monotonicity_sampled_in_half_box(self, tmr):
        # within [0, 1/2]^2 the below set is the product region, so scaling
        # toward the origin stays inside it
        rng = np.random.default_rng(23)
        checked = 0
        for _ in range(60):
            x = FailureVector({"w": rng.random() * 0.5, "v": rng.random() * 0.5})
            if analysis.below_threshold(tmr, x):
                c = rng.random()
                scaled = FailureVector({v: c * x[v] for v in tmr.variables})
                assert analysis.below_threshold(tmr, scaled)
                checked += 1
        assert checked > 3

    def test_ray_monotonicity_violations_exist_and_are_reported(self, tmr):
        # pairs of voter faults cancel, so a very noisy voter rate can be
        # below threshold while a scaled-down copy is not; the property is
        # checked, not assumed
        noisy = FailureVector({"w": 0.3, "v": 0.95})
        assert analysis.below_threshold(tmr, noisy)
        scaled = FailureVector({"w": 0.3 * 0.45, "v": 0.95 * 0.45})
        assert not analysis.below_threshold(tmr, scaled)


class TestThresholdSet:
    def test_tmr_region_and_cube(self, tmr, gamma_th):
        report = analysis.threshold_set(tmr, SliceSpec(plane=("w", "v")), resolution=100)
        step = report.grid_step
        assert abs(report.largest_cube_edge - gamma_th) <= step
        for x, y in report.boundary:
            if x < 0.5 - 2 * step:
                assert abs(y - gamma_th) <= 2 * step
            elif x > 0.5 + 2 * step:
                assert y <= 2 * step

    def test_identity_map_cube_is_zero(self):
        ident = FlowMap.identity(("a", "b"))
        report = analysis.threshold_set(ident, SliceSpec(plane=("a", "b")), resolution=40)
        assert report.largest_cube_edge == 0.0
        assert report.classes[0, 0] == "below"  # the origin alone
        assert report.classes[5, 5] == "undetermined"

    def test_classes_match_pointwise_classifier(self, tmr):
        report = analysis.threshold_set(tmr, SliceSpec(plane=("w", "v")), resolution=24)
        rng = np.random.default_rng(4)
        for _ in range(25):
            i = rng.integers(0, 24)
            j = rng.integers(0, 24)
            point = FailureVector({"w": report.xs[i], "v": report.ys[j]})
            assert report.classes[i, j] == analysis.classify_point(tmr, point)


class TestAxisBound:
    def test_tmr_axis_bound(self, tmr, gamma_th):
        report = analysis.axis_upper_bound(tmr)
        # independent oracles for both axis restrictions
        wire_axis_root = _bisect(
            lambda g: tmr.components["w"].evaluate({"w": g, "v": 0.0}) - g, 0.3, 0.7
        )
        assert abs(wire_axis_root - 0.5) < 1e-9
        assert report.per_axis["w"].value == pytest.approx(0.5, abs=1e-9)
        assert report.per_axis["w"].touched_scan_bound
        assert report.location == "v"
        assert abs(report.value - gamma_th) < 1e-8
        assert report.value == pytest.approx(min(0.5, gamma_th), abs=1e-8)

    def test_one_parameter_axis_bound(self):
        f = one_parameter_map(12, 2)
        report = analysis.axis_upper_bound(f)
        assert abs(report.value - 1 / 12) < 1e-9

    def test_conjecture_finding_on_tmr(self, tmr):
        finding = analysis.check_axis_conjecture(tmr, resolution=60)
        assert finding.holds
        assert finding.cube_edge <= finding.bound + finding.cube_edge * 0.05


class TestConservativeBound:
    def test_tmr_bound_is_one_twelfth_exactly(self, tmr):
        bound = analysis.conservative_bound(tmr)
        assert bound == Fraction(1, 12)
        assert isinstance(bound, Fraction)

    def test_one_parameter_bound(self):
        assert analysis.conservative_bound(one_parameter_map(12, 2)) == Fraction(1, 12)


class TestLevelConstancyCondition:
    def test_condition_holds_for_symmetric_map(self, tmr):
        # both components equal: the setting image of the level-1 crossing is
        # a fixed point, so every level crosses at the same rate
        wire = tmr.components["w"]
        f = FlowMap(("w", "v"), {"w": wire, "v": wire._aligned(("w", "v"))})
        g = settings.diagonal(("w", "v"))
        first = analysis.pseudothreshold(f, "w", g, 1).value
        image = f.evaluate(g.apply(first))
        assert abs(image["w"] - first) < 1e-9 and abs(image["v"] - first) < 1e-9
        for level in (2, 3, 4):
            assert abs(analysis.pseudothreshold(f, "w", g, level).value - first) < 1e-9

    def test_condition_fails_for_tmr_wire(self, tmr):
        g = settings.diagonal(tmr.variables)
        first = analysis.pseudothreshold(tmr, "w", g, 1).value
        image = tmr.evaluate(g.apply(first))
        assert abs(image["v"] - first) > 1e-3  # not a constant vector
        second = analysis.pseudothreshold(tmr, "w", g, 2).value
        assert abs(second - first) > 1e-3
