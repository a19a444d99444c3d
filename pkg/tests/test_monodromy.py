"""Monodromy tests: the quadratic worked example, lifts, and invariants."""

import numpy as np
import pytest

from timeavg import ComplexPoly
from timeavg import monodromy as mono
from timeavg import permgroup as pg
from timeavg.exceptions import InvalidInputError, LiftError

Z2P1 = ComplexPoly([1, 0, 1])
Z2M1 = ComplexPoly([-1, 0, 1])
Z2 = ComplexPoly([0, 0, 1])
QUARTIC = ComplexPoly([0, 0, -2, 0, 1])


@pytest.fixture(scope="module")
def z2p1_level2():
    return mono.monodromy_group(Z2P1, 2, p=0.0)


class TestLoops:
    def test_one_loop_per_critical_value(self):
        loops = mono.lollipop_generators(Z2P1, 1, 0.0)
        assert len(loops) == 1
        assert abs(loops[0].center - 1.0) < 1e-9

    def test_level2_gives_two_loops(self):
        loops = mono.lollipop_generators(Z2P1, 2, 0.0)
        assert sorted(round(l.center.real) for l in loops) == [1, 2]

    def test_generic_cubic_level2_gives_four_loops(self):
        rng = np.random.default_rng(7)
        f = ComplexPoly(rng.standard_normal(4) + 1j * rng.standard_normal(4))
        p = mono.pick_base_point(f, 2, seed=1)
        loops = mono.lollipop_generators(f, 2, p)
        assert len(loops) == 4  # 2 * (d - 1) distinct values, generically

    def test_windings(self, z2p1_level2):
        values = z2p1_level2.critical_values
        for loop in z2p1_level2.loops:
            for v in values:
                expect = 1 if abs(v - loop.center) < 1e-9 else 0
                assert loop.winding_number(v) == expect

    def test_planar_order_is_ccw_angle(self, z2p1_level2):
        p = z2p1_level2.tree.base
        angles = [np.mod(np.angle(l.center - p), 2 * np.pi) for l in z2p1_level2.loops]
        assert angles == sorted(angles)

    def test_base_on_critical_value_rejected(self):
        with pytest.raises(InvalidInputError):
            mono.lollipop_generators(Z2P1, 1, 1.0)


class TestQuadraticWorkedExample:
    def test_level1_transposition_of_pm_i(self):
        res = mono.monodromy_group(Z2P1, 1, p=0.0)
        pts = res.tree.points
        # identify indices of i and -i, assert the single lift swaps them
        idx_i = int(np.argmin(np.abs(pts - 1j)))
        idx_mi = int(np.argmin(np.abs(pts + 1j)))
        perm = res.lifts[0].perm
        assert perm[idx_i] == idx_mi and perm[idx_mi] == idx_i

    def test_loop_around_two_swaps_preimages_of_i_only(self, z2p1_level2):
        res = z2p1_level2
        lift2 = [t for l, t in zip(res.loops, res.lifts) if abs(l.center - 2) < 1e-9][0]
        level1 = res.tree.levels[1]
        i_node = int(np.argmin(np.abs(level1 - 1j)))
        mi_node = int(np.argmin(np.abs(level1 + 1j)))
        d = res.tree.d
        i_children = set(range(i_node * d, i_node * d + d))
        mi_children = set(range(mi_node * d, mi_node * d + d))
        for j in mi_children:
            assert lift2.perm[j] == j
        for j in i_children:
            assert lift2.perm[j] in i_children and lift2.perm[j] != j

    def test_square_of_loop_around_one_is_trivial_at_level2(self, z2p1_level2):
        res = z2p1_level2
        lift1 = [t for l, t in zip(res.loops, res.lifts) if abs(l.center - 1) < 1e-9][0]
        assert (lift1 * lift1).is_identity()
        assert not lift1.is_identity()

    def test_level2_group_is_full_tree_aut(self, z2p1_level2):
        G = z2p1_level2.group()
        assert G.order() == 8
        assert pg.is_full_tree_aut(G, 2, 2)


class TestInfinityCycle:
    @pytest.mark.parametrize(
        "f,N",
        [(Z2, 2), (Z2P1, 2), (Z2P1, 3), (Z2M1, 3), (QUARTIC, 2)],
    )
    def test_single_cycle(self, f, N):
        res = mono.monodromy_group(f, N, seed=11)
        assert res.infinity.cycle_type() == (f.degree**N,)

    def test_monomial_level2_is_rotation_of_roots_of_unity(self):
        tree = mono.PreimageTree(Z2, 1.0, 2)
        perm = mono.infinity_cycle(Z2, 2, tree)
        assert perm.cycle_type() == (4,)
        # the action rotates the 4th roots of unity by one step
        pts = tree.points
        target = pts * np.exp(2j * np.pi / 4)
        expected = tuple(int(np.argmin(np.abs(pts - t))) for t in target)
        assert perm.perm == expected or perm.perm == pg.inverse(expected)

    def test_product_of_lollipops_in_planar_order_is_infinity(self):
        for f, N, seed in [(Z2P1, 2, 0), (QUARTIC, 2, 1), (Z2M1, 3, 2)]:
            res = mono.monodromy_group(f, N, seed=seed)
            lifts = res.lifts
            n = len(lifts)
            ok = False
            for shift in range(n):
                prod = lifts[shift]
                for k in range(1, n):
                    prod = prod * lifts[(shift + k) % n]
                if prod.perm in (res.infinity.perm, res.infinity.inverse().perm):
                    ok = True
                    break
            assert ok


class TestTreePermutation:
    def test_tree_compatibility_is_enforced(self):
        with pytest.raises(LiftError):
            mono.TreePermutation(2, 2, (1, 2, 3, 0))  # not sibling-preserving

    def test_restriction_matches_independent_lift(self, z2p1_level2):
        res = z2p1_level2
        tree1 = mono.PreimageTree(Z2P1, 0.0, 1)
        for loop, lift in zip(res.loops, res.lifts):
            low = mono.lift_loop(Z2P1, 1, tree1, loop)
            # match the two level-1 labelings by point values
            cross = [
                int(np.argmin(np.abs(tree1.points - w))) for w in res.tree.levels[1]
            ]
            restricted = lift.restrict(1)
            for j in range(2):
                assert cross[restricted.perm[j]] == low.perm[cross[j]]

    def test_restriction_of_every_lift_is_tree_compatible(self):
        res = mono.monodromy_group(QUARTIC, 2, seed=5)
        for lift in res.lifts + [res.infinity]:
            for k in range(res.N + 1):
                r = lift.restrict(k)
                assert pg.is_tree_compatible(r.perm, res.tree.d, k)

    def test_homotopy_invariance_under_waypoint_jitter(self, z2p1_level2):
        res = z2p1_level2
        rng = np.random.default_rng(13)
        for loop, lift in zip(res.loops, res.lifts):
            for _ in range(3):
                jig = loop.perturbed(rng, 0.09 * loop.clearance)
                again = mono.lift_loop(Z2P1, 2, res.tree, jig)
                assert again.perm == lift.perm


class TestBasePointSelection:
    def test_picked_base_gives_simple_fiber(self):
        p = mono.pick_base_point(Z2M1, 3, seed=4)
        tree = mono.PreimageTree(Z2M1, p, 3)
        assert tree.points.size == 8
