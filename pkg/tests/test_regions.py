import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nonbazilevic.regions import (
    Disk,
    HalfPlane,
    MobiusTarget,
    NearBoundaryError,
    SampledTarget,
    Status,
    check_subordination,
    convex_combination_check,
    convexity_margin,
    mobius_image,
    region_contains,
    region_nested,
    schwarz_witness,
    segment_sag,
    signed_clearance,
    univalence_diagnostic,
    winding_number,
    winding_numbers,
)
from nonbazilevic.series import default_grid

GRID = default_grid(256)


def circle(r=1.0, m=400, f=lambda z: z):
    z = r * np.exp(2j * np.pi * np.arange(m + 1) / m)
    z[-1] = z[0]
    return f(z)


class TestMobiusTarget:
    def test_validation(self):
        with pytest.raises(ValueError):
            MobiusTarget(0.5, 0.5)
        with pytest.raises(ValueError):
            MobiusTarget(0.5, -1.5)
        with pytest.raises(ValueError):
            MobiusTarget(np.nan, 0.0)

    def test_inverse_and_derivatives(self):
        t = MobiusTarget(0.7, -0.4)
        z = np.array([0.3 + 0.2j, -0.6j])
        np.testing.assert_allclose(t.inverse(t(z)), z, atol=1e-14)
        h = 1e-6
        np.testing.assert_allclose(t.derivative(z), (t(z + h) - t(z - h)) / (2 * h), rtol=1e-8)
        np.testing.assert_allclose(t.second_derivative(z),
                                   (t.derivative(z + h) - t.derivative(z - h)) / (2 * h), rtol=1e-6)

    def test_from_rho(self):
        assert mobius_image(MobiusTarget.from_rho(0.3)) == HalfPlane(0.3, ">")


class TestMobiusImage:
    def test_cayley(self):
        assert mobius_image(MobiusTarget(1, -1), 1.0) == HalfPlane(0.0, ">")

    def test_affine(self):
        d = mobius_image(MobiusTarget(0.5, 0), 1.0)
        assert d.center == pytest.approx(1.0) and d.radius == pytest.approx(0.5)

    def test_disk_fit(self):
        d = mobius_image(MobiusTarget(0.5, -0.5), 0.8)
        assert d.center == pytest.approx(29 / 21, abs=1e-14)
        assert d.radius == pytest.approx(20 / 21, abs=1e-14)
        w = MobiusTarget(0.5, -0.5)(0.8 * np.exp(2j * np.pi * np.arange(10_000) / 10_000))
        np.testing.assert_allclose(np.abs(w - d.center), d.radius, atol=1e-12)

    def test_b_plus_one(self):
        # (1 + A z)/(1 + z) with A < 1 maps the disk onto Re w > (1 + A)/2
        h = mobius_image(MobiusTarget(0.2, 1.0), 1.0)
        assert h == HalfPlane(0.6, ">")

    def test_sense_flips(self):
        # (1 + 3z)/(1 + z): boundary Re w = 2 lies to the right of w(0) = 1
        h = mobius_image(MobiusTarget(3.0, 1.0), 1.0)
        assert h == HalfPlane(2.0, "<") and h.margin(1.0) > 0
        assert h.margin(MobiusTarget(3.0, 1.0)(0.9 * np.exp(2j * np.pi * np.arange(16) / 16))).min() > 0

    @pytest.mark.parametrize("r", [0.0, -0.5, 1.5])
    def test_bad_radius(self, r):
        with pytest.raises(ValueError):
            mobius_image(MobiusTarget(1, 0), r)

    @given(st.floats(-1, 1), st.floats(-0.99, 0.99), st.floats(0.05, 0.99))
    @settings(max_examples=50, deadline=None)
    def test_boundary_on_circle(self, A, B, r):
        if abs(A - B) < 1e-3:
            return
        d = mobius_image(MobiusTarget(A, B), r)
        w = MobiusTarget(A, B)(r * np.exp(2j * np.pi * np.arange(64) / 64))
        np.testing.assert_allclose(np.abs(w - d.center), d.radius, atol=1e-10)


class TestContainment:
    def test_margins(self):
        assert region_contains(Disk(1, 0.5), 1.0) == pytest.approx(0.5)
        assert region_contains(HalfPlane(0.0), -0.1) == pytest.approx(-0.1)
        assert region_contains(Disk(29 / 21, 20 / 21), 1.0) == pytest.approx(12 / 21)

    def test_nesting(self):
        n = region_nested(Disk(1, 0.5), HalfPlane(0.0))
        assert n.nested and n.margin == pytest.approx(0.5)
        assert region_nested(mobius_image(MobiusTarget(0.5, 0)), mobius_image(MobiusTarget(1, -1))).nested
        n = region_nested(Disk(0, 1), Disk(0, 1))
        assert n.nested and n.margin == 0

    def test_halfplane_in_disk_false(self):
        n = region_nested(HalfPlane(0.0), Disk(0, 100))
        assert not n.nested and n.margin == -np.inf

    def test_halfplanes(self):
        assert region_nested(HalfPlane(0.5), HalfPlane(0.0)).nested
        assert not region_nested(HalfPlane(0.0), HalfPlane(0.5)).nested
        assert region_nested(HalfPlane(0.0, "<"), HalfPlane(0.5, "<")).nested
        assert not region_nested(HalfPlane(0.0, "<"), HalfPlane(0.5, ">")).nested

    def test_disk_in_left_halfplane(self):
        assert region_nested(Disk(-2, 1), HalfPlane(0.0, "<")).margin == pytest.approx(1.0)

    def test_convex_combination(self):
        t = MobiusTarget(1, -1)
        z = GRID.points
        g = t(z)
        f = np.ones_like(g)
        region = mobius_image(t)
        assert convex_combination_check(f, g, region, 0.5)
        assert convex_combination_check(f, g, region, 0.0) == bool(np.all(region.margin(g) >= 0))
        assert convex_combination_check(f, -f, region, 1.0)
        assert not convex_combination_check(f, -f, region, 0.0)
        with pytest.raises(ValueError):
            convex_combination_check(f, g, region, 1.5)


class TestWinding:
    def test_circle(self):
        c = circle()
        assert winding_number(c, 0) == 1
        assert winding_number(c, 2) == 0
        assert winding_number(c[::-1], 0) == -1

    def test_square_map(self):
        assert winding_number(circle(0.5, f=lambda z: z * z), 0) == 2

    def test_near_boundary(self):
        with pytest.raises(NearBoundaryError):
            winding_number(circle(), 1.0 + 1e-12)

    def test_not_closed(self):
        with pytest.raises(ValueError):
            winding_number(np.array([1, 1j, -1]), 0)

    def test_many_points_and_clearance(self):
        loop = circle()[:-1]
        w, d = winding_numbers(loop, np.array([0, 0.5, 2.0]))
        np.testing.assert_array_equal(w, [1, 1, 0])
        np.testing.assert_allclose(d, [1.0, 0.5, 1.0], atol=1e-4)

    def test_sag_reduces_clearance(self):
        loop = circle(m=16)[:-1]
        sag = segment_sag(loop)
        # the polygon lies inside the circle by at most 1 - cos(pi/16)
        assert np.all(sag >= 1 - np.cos(np.pi / 16))
        c, wind = signed_clearance(loop, np.array([0.0, 2.0]))
        assert c[0] > 0 and c[0] < 1 - (1 - np.cos(np.pi / 16)) + 1e-12
        assert c[1] < 0 and wind[1] == 0


class TestSubordination:
    def test_constant_one(self):
        v = check_subordination(np.ones(GRID.points.size), MobiusTarget(1, -1), GRID)
        assert v.status is Status.CERTIFIED and v.margin == pytest.approx(1.0)

    def test_refuted_with_witness(self):
        left = (1 + 2 * GRID.points) / (1 + 0.5 * GRID.points)
        v = check_subordination(left, MobiusTarget(0.5, 0), GRID)
        assert v.refuted
        z, w = v.witness
        assert abs(w - (1 + 2 * z) / (1 + 0.5 * z)) < 1e-12
        assert mobius_image(MobiusTarget(0.5, 0), abs(z)).margin(w) < 0

    def test_reflexive_is_boundary(self):
        # left = target: samples sit on the image of their own circle, never outside
        t = MobiusTarget(0.5, -0.5)
        v = check_subordination(t(GRID.points), t, GRID)
        assert not v.refuted

    def test_origin_mismatch(self):
        left = np.full(GRID.points.size, 1.1 + 0j)
        v = check_subordination(left, MobiusTarget(1, -1), GRID)
        assert v.refuted and "origin" in v.reason

    def test_sampled_target(self):
        t = MobiusTarget(1, -1)
        target = SampledTarget.from_callable(t, GRID)
        left = t(0.5 * GRID.points)
        v = check_subordination(left, target, GRID)
        assert v.certified
        v = check_subordination(t(GRID.points ** 2), target, GRID)
        assert not v.refuted

    def test_sampled_target_refutes(self):
        target = SampledTarget.from_callable(lambda z: 1 + z, GRID)
        v = check_subordination(1 + 1.5 * GRID.points, target, GRID)
        assert v.refuted

    def test_non_univalent_target(self):
        target = SampledTarget.from_callable(lambda z: 1 + z * z, GRID)
        v = check_subordination(1 + 0.1 * GRID.points, target, GRID)
        assert v.status is Status.INCONCLUSIVE and "univalence" in v.reason

    def test_misaligned_target(self):
        target = SampledTarget.from_callable(lambda z: 1 + z, default_grid(64))
        with pytest.raises(ValueError):
            check_subordination(np.ones(GRID.points.size), target, GRID)

    def test_to_dict(self):
        d = check_subordination(np.ones(GRID.points.size), MobiusTarget(1, -1), GRID).to_dict()
        assert d["status"] == "certified" and d["witness_z"] is None


class TestUnivalence:
    def test_identity_passes(self):
        assert univalence_diagnostic(SampledTarget.from_callable(lambda z: z, GRID)).passed

    def test_constant_fails(self):
        d = univalence_diagnostic(SampledTarget.from_callable(lambda z: np.ones_like(z), GRID))
        assert not d.passed

    def test_square_fails(self):
        assert not univalence_diagnostic(SampledTarget.from_callable(lambda z: z * z, GRID)).passed


class TestSchwarz:
    def test_target_itself(self):
        t = MobiusTarget(0.5, -0.5)
        assert schwarz_witness(t(GRID.points), t, GRID).max_ratio == pytest.approx(1.0)

    def test_constant(self):
        t = MobiusTarget(1, -1)
        assert schwarz_witness(np.ones(GRID.points.size), t, GRID).max_ratio == 0.0

    def test_composed_square(self):
        t = MobiusTarget(1, -1)
        s = schwarz_witness(t(GRID.points ** 2), t, GRID)
        assert s.max_ratio == pytest.approx(0.99)
        np.testing.assert_allclose(s.w, GRID.points ** 2, atol=1e-12)

    def test_blowup_counted(self):
        t = MobiusTarget(1, -1)
        left = np.ones(GRID.points.size, dtype=complex)
        left[5] = -1.0  # A - B * left = 0
        assert schwarz_witness(left, t, GRID).failures == 1


class TestConvexity:
    def test_cayley(self):
        t = MobiusTarget(1, -1)
        z = GRID.points
        m = convexity_margin(z, t.derivative, t.second_derivative)
        assert m == pytest.approx(0.01 / 1.99, rel=1e-10)

    def test_linear(self):
        z = GRID.points
        assert convexity_margin(z, np.ones_like(z), np.zeros_like(z)) == 1.0
        t = MobiusTarget(0.5, 0)
        assert convexity_margin(z, t.derivative, t.second_derivative) == 1.0

    def test_vanishing_derivative(self):
        z = GRID.points
        with pytest.raises(ValueError):
            convexity_margin(z, 2 * z, np.full_like(z, 2))
