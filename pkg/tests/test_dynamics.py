"""Tests for escape radius, Green's function, cycles, and charts."""

import numpy as np
import pytest

from timeavg import ComplexPoly, fiber
from timeavg import dynamics as dyn
from timeavg.exceptions import InvalidInputError

Z2 = ComplexPoly([0, 0, 1])
Z2P1 = ComplexPoly([1, 0, 1])
Z2M1 = ComplexPoly([-1, 0, 1])
WILD = ComplexPoly([0, 0, 8, -8, 2])  # 2 z^2 (z-2)^2
GOLDEN = (np.sqrt(5) - 1) / 2
SIEGEL = ComplexPoly([0, np.exp(2j * np.pi * GOLDEN), 1])  # e^{2 pi i theta} z + z^2

FIXTURES = [Z2, Z2P1, Z2M1, WILD, SIEGEL]


class TestEscapeRadius:
    @pytest.mark.parametrize("f", FIXTURES)
    def test_doubling_outside_radius(self, f):
        R = dyn.escape_radius(f)
        rng = np.random.default_rng(1)
        z = (R + rng.uniform(0, 3, 200)) * np.exp(2j * np.pi * rng.uniform(size=200))
        assert np.all(np.abs(f(z)) >= 2 * np.abs(z))

    def test_z2_radius_two_is_valid(self):
        assert dyn.escape_radius(Z2) <= 2.0

    def test_degree_one_rejected(self):
        with pytest.raises(InvalidInputError):
            dyn.escape_radius(ComplexPoly([1, 1]))


class TestGreen:
    def test_monomial_exact_value(self):
        g = dyn.green_value(Z2, 4.0)
        assert abs(g.value - np.log(4.0)) < 1e-10
        assert g.error_bound <= 1e-10

    def test_bounded_point_is_zero(self):
        assert dyn.green_value(Z2M1, 0.0).value == 0.0

    def test_functional_equation(self):
        rng = np.random.default_rng(2)
        for f in FIXTURES:
            d = f.degree
            R = dyn.escape_radius(f)
            count = 0
            while count < 1000:
                z = complex(rng.uniform(-2 * R, 2 * R), rng.uniform(-2 * R, 2 * R))
                gz = dyn.green_value(f, z)
                if gz.value <= 0:
                    continue
                gfz = dyn.green_value(f, f(z))
                assert abs(gfz.value - d * gz.value) <= 1e-8
                count += 1

    def test_fiber_points_share_green_value(self):
        # G(w) = G(p) / d^N on the fiber of p
        for f, p, N in [(Z2P1, 3.0, 2), (Z2M1, 2.5, 3)]:
            fb = fiber(f, p, N)
            gp = dyn.green_value(f, p).value
            vals = [dyn.green_value(f, w).value for w in fb.points]
            assert np.ptp(vals) <= 1e-6
            assert abs(np.mean(vals) - gp / f.degree**N) <= 1e-6


class TestCycles:
    def test_basilica_two_cycle(self):
        cycles = dyn.find_cycles(Z2M1, 2)
        sup = [c for c in cycles if c.kind == "superattracting"]
        assert len(sup) == 1
        c = sup[0]
        assert c.period == 2
        assert sorted(round(p.real, 6) for p in c.points) == [-1.0, 0.0]
        assert abs(c.multiplier) < 1e-10

    def test_wild_superattracting_fixed_point(self):
        cycles = dyn.find_cycles(WILD, 1)
        sup = [c for c in cycles if c.kind == "superattracting"]
        assert any(abs(c.points[0]) < 1e-8 and c.period == 1 for c in sup)

    def test_siegel_rotation_fixed_point(self):
        cycles = dyn.find_cycles(SIEGEL, 1)
        rot = [c for c in cycles if c.kind == "rotation"]
        assert len(rot) == 1
        assert abs(rot[0].points[0]) < 1e-10
        assert abs(abs(rot[0].multiplier) - 1.0) < 1e-10

    def test_attracting_fixed_point_multiplier_oracle(self):
        # z^2 - 0.7 = z  =>  z = (1 - sqrt(1 + 2.8)) / 2, multiplier 2z
        f = ComplexPoly([-0.7, 0, 1])
        zstar = (1 - np.sqrt(3.8)) / 2
        cycles = dyn.find_cycles(f, 1)
        att = [c for c in cycles if c.kind == "attracting"]
        assert len(att) == 1
        assert abs(att[0].points[0] - zstar) < 1e-9
        assert abs(att[0].multiplier - 2 * zstar) < 1e-9

    def test_linear_rotation(self):
        lam = np.exp(2j * np.pi / 4)
        cycles = dyn.find_cycles(ComplexPoly([0, lam]), 1)
        assert cycles[0].kind == "rotation"

    def test_parabolic_detected(self):
        # z + z^2: fixed point 0 with multiplier exactly 1
        cycles = dyn.find_cycles(ComplexPoly([0, 1, 1]), 1)
        kinds = {c.kind for c in cycles if abs(c.points[0]) < 1e-8}
        assert "parabolic" in kinds


class TestChart:
    def test_z2_unit_disk_single_component(self):
        chart = dyn.component_chart(Z2, resolution=160, iter_budget=256)
        inside = [0.0, 0.3 + 0.2j, -0.4j]
        labels = {chart.label_at(z) for z in inside}
        assert len(labels) == 1 and -1 not in labels
        meta = chart.component_meta(labels.pop())
        assert meta.cycle_id is not None
        cyc = chart.cycles[meta.cycle_id]
        assert cyc.period == 1 and abs(cyc.points[0]) < 1e-8

    def test_basilica_components_distinct_same_cycle(self):
        chart = dyn.component_chart(Z2M1, resolution=300, iter_budget=400)
        l0 = chart.label_at(0.0)
        l1 = chart.label_at(-1.0)
        assert l0 != l1 and l0 >= 0 and l1 >= 0
        m0, m1 = chart.component_meta(l0), chart.component_meta(l1)
        assert m0.cycle_id == m1.cycle_id and m0.cycle_id is not None
        cyc = chart.cycles[m0.cycle_id]
        assert cyc.period == 2 and cyc.kind == "superattracting"

    def test_cantor_julia_has_no_bounded_interior(self):
        # critical orbit of z^2 + 1 escapes, so there are no bounded pixels
        chart = dyn.component_chart(Z2P1, resolution=200, iter_budget=400)
        assert (chart.labels == -1).all()

    def test_refinement_never_unbounds_interior_pixels(self):
        coarse = dyn.component_chart(Z2M1, resolution=120, iter_budget=400)
        fine = dyn.component_chart(Z2M1, resolution=240, iter_budget=400)
        interior = np.zeros_like(coarse.labels, dtype=bool)
        b = coarse.labels >= 0
        interior[1:-1, 1:-1] = (
            b[1:-1, 1:-1]
            & b[:-2, 1:-1] & b[2:, 1:-1] & b[1:-1, :-2] & b[1:-1, 2:]
            & b[:-2, :-2] & b[2:, 2:] & b[:-2, 2:] & b[2:, :-2]
        )
        fb = fine.labels >= 0
        children = fb[0::2, 0::2] & fb[0::2, 1::2] & fb[1::2, 0::2] & fb[1::2, 1::2]
        assert np.all(children[interior])


class TestClassifyPoint:
    def test_z2p1_origin_escapes(self):
        pc = dyn.classify_point(Z2P1, 0.0)
        assert pc.kind == "escaping"
        assert pc.green.value > 0

    def test_basilica_origin_bounded_superattracting(self):
        chart = dyn.component_chart(Z2M1, resolution=300, iter_budget=400)
        pc = dyn.classify_point(Z2M1, 0.0, chart=chart)
        assert pc.kind == "bounded"
        meta = chart.component_meta(pc.component_id)
        assert chart.cycles[meta.cycle_id].kind == "superattracting"

    def test_far_point_escapes(self):
        pc = dyn.classify_point(Z2M1, 10.0)
        assert pc.kind == "escaping"

    def test_julia_point_is_near_julia(self):
        # the repelling fixed point (1 + sqrt 5)/2 of z^2 - 1 lies on the Julia set
        chart = dyn.component_chart(Z2M1, resolution=300, iter_budget=400)
        phi = (1 + np.sqrt(5)) / 2
        pc = dyn.classify_point(Z2M1, phi, chart=chart, iter_budget=300)
        assert pc.kind in ("near_julia", "escaping")  # escaping only if rounding pushed it out
        if pc.kind == "near_julia":
            assert pc.detail


class TestLevelCurve:
    def test_monomial_level_curve_is_circle(self):
        pts = dyn.level_curve_points(Z2, np.log(2.0), n_angles=24)
        r = np.hypot(pts[:, 0], pts[:, 1])
        assert np.abs(r - 2.0).max() < 1e-6
        assert np.abs(pts[:, 2] - np.log(2.0)).max() < 1e-8
