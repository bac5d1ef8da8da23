from fractions import Fraction

import numpy as np
import pytest

import walklab as wl
from walklab.errors import (
    InvalidProfileError,
    InvalidRegionError,
    InvalidStepSetError,
    OutsideDomainError,
)
from walklab.geometry import lex_sort


def brute_boundary(points, steps):
    """Independent oracle: set arithmetic over all (z, e) pairs."""
    pset = {tuple(p) for p in points}
    out = set()
    for z in pset:
        for e in steps:
            w = tuple(a + b for a, b in zip(z, e))
            if w not in pset:
                out.add(w)
    return sorted(out)


class TestBoundary:
    def test_1d_origin(self):
        b = wl.boundary([(0,)], [(1,), (-1,)])
        assert b.tolist() == [[-1], [1]]

    def test_2d_origin(self):
        b = wl.boundary([(0, 0)], wl.unit_steps(2))
        assert len(b) == 4
        assert sorted(map(tuple, b)) == [(-1, 0), (0, -1), (0, 1), (1, 0)]

    def test_knight_step_block(self):
        block = [(i, j) for i in range(3) for j in range(3)]
        steps = [(1, 0), (-1, 0), (0, 1), (0, -1), (2, 1)]
        got = wl.boundary(block, steps)
        assert [tuple(p) for p in got] == brute_boundary(block, steps)
        assert (4, 3) in {tuple(p) for p in got}  # knight translate of (2, 2)

    def test_disjoint_and_witnessed(self):
        rng = np.random.default_rng(3)
        pts = np.unique(rng.integers(-4, 5, size=(30, 2)), axis=0)
        steps = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1)]
        got = {tuple(p) for p in wl.boundary(pts, steps)}
        pset = {tuple(p) for p in pts}
        assert not (got & pset)
        for w in got:
            assert any(
                tuple(a - b for a, b in zip(w, e)) in pset for e in steps
            ), f"no witness for {w}"
        assert got == set(brute_boundary(pts, steps))

    def test_empty_steps_rejected(self):
        with pytest.raises(InvalidStepSetError):
            wl.boundary([(0, 0)], [])

    def test_zero_step_never_boundary(self):
        b = wl.boundary([(0, 0)], [(0, 0), (1, 0), (0, 1), (-1, 0), (0, -1)])
        assert (0, 0) not in {tuple(p) for p in b}


class TestProfilesAndDomains:
    def test_halfspace_membership(self, halfspace2):
        assert halfspace2.contains((1, 5))
        assert not halfspace2.contains((0, 5))
        pts = np.array([[1, 0], [0, 0], [-3, 2], [7, -7]])
        assert halfspace2.contains_array(pts).tolist() == [True, False, False, True]

    def test_cone_membership_exact(self, cone2):
        # x1 > |x2| with strict inequality at the graph
        assert cone2.contains((3, 2))
        assert not cone2.contains((2, 2))
        assert not cone2.contains((2, -2))
        assert cone2.contains((1, 0))

    def test_rational_slope_membership(self):
        dom = wl.LipschitzDomain(
            wl.LipschitzProfile.piecewise_linear(2, [(["1/2"], 0), (["-1/2"], 0)]))
        # x1 > |x2|/2 exactly: (1, 2) has 1 > 1 false
        assert not dom.contains((1, 2))
        assert dom.contains((2, 2))
        arr = np.array([[1, 2], [2, 2], [1, 1], [1, -1], [0, 0]])
        assert dom.contains_array(arr).tolist() == [False, True, True, True, False]

    def test_profile_normalization_enforced(self):
        with pytest.raises(InvalidProfileError):
            wl.LipschitzProfile.piecewise_linear(2, [([1], 1)])

    def test_table_profile(self):
        table = {(-1,): 1, (0,): 0, (1,): 1}
        prof = wl.LipschitzProfile.from_table(2, table, (-1,), (1,))
        dom = wl.LipschitzDomain(prof)
        assert dom.contains((1, 0))
        assert not dom.contains((1, 1))
        # clamped extension beyond the window
        assert not dom.contains((1, 7))
        assert dom.contains((2, 7))
        assert prof.lipschitz_sq == Fraction(1)

    def test_lipschitz_spot_check(self, cone2):
        prof = cone2.profile
        A2 = prof.lipschitz_sq
        rng = np.random.default_rng(11)
        for _ in range(200):
            a, b = rng.integers(-50, 51, size=2)
            dv = (prof.value((int(a),)) - prof.value((int(b),))) ** 2
            assert dv <= A2 * (int(a) - int(b)) ** 2


class TestRegions:
    def test_cube_count(self):
        assert len(wl.enumerate_region(wl.cube((0, 0), 2))) == 25

    def test_ball_count(self):
        assert len(wl.enumerate_region(wl.ball((0, 0), 2))) == 13

    def test_lex_order(self):
        pts = wl.enumerate_region(wl.ball((1, 1), 3))
        assert np.array_equal(pts, lex_sort(pts.copy()))

    @pytest.mark.parametrize("R,r", [(8, 2), (8, 4), (12, 3), (6, 1)])
    def test_collar_slab_double_count(self, halfspace2, R, r):
        whole = wl.enumerate_region(wl.ball((0, 0), R), halfspace2)
        slab = wl.enumerate_region(wl.interior_slab((0, 0), R, r), halfspace2)
        col = wl.enumerate_region(wl.collar((0, 0), R, r), halfspace2)
        assert len(whole) == len(slab) + len(col)
        merged = {tuple(p) for p in slab} | {tuple(p) for p in col}
        assert merged == {tuple(p) for p in whole}

    def test_collar_double_count_cone(self, cone2):
        whole = wl.enumerate_region(wl.ball((0, 0), 10), cone2)
        slab = wl.enumerate_region(wl.interior_slab((0, 0), 10, 3), cone2)
        col = wl.enumerate_region(wl.collar((0, 0), 10, 3), cone2)
        assert len(whole) == len(slab) + len(col)

    def test_halfspace_slab_is_exact_delta_cut(self, halfspace2):
        # delta((x1, x2)) = x1 for the flat profile
        slab = wl.enumerate_region(wl.interior_slab((0, 0), 8, 2), halfspace2)
        assert slab[:, 0].min() > 2
        col = wl.enumerate_region(wl.collar((0, 0), 8, 2), halfspace2)
        assert col[:, 0].max() <= 2

    def test_invalid_regions(self):
        with pytest.raises(InvalidRegionError):
            wl.collar((0, 0), 2, 4)
        with pytest.raises(InvalidRegionError):
            wl.collar((0, 0), 4, -1)
        with pytest.raises(InvalidRegionError):
            wl.ball((0, 0), 0)
        with pytest.raises(InvalidRegionError):
            wl.enumerate_region(wl.collar((0, 0), 4, 2))  # needs a domain


def brute_distance_sq(point, domain, steps, window=40):
    """Exhaustive oracle over a big fixed window."""
    p = np.asarray(point)
    best = None
    lo = p - window
    hi = p + window
    sset = [np.asarray(e) for e in steps]
    for raw in np.ndindex(*(hi - lo + 1)):
        z = lo + np.asarray(raw)
        if domain.contains(tuple(z)):
            continue
        if not any(domain.contains(tuple(z - e)) for e in sset):
            continue
        d2 = int(((z - p) ** 2).sum())
        best = d2 if best is None else min(best, d2)
    return best


class TestDistance:
    def test_halfspace_flat(self, halfspace2):
        assert wl.distance_to_boundary((3, 0), halfspace2) == 3
        assert wl.distance_to_boundary((1, 7), halfspace2) == 1

    def test_halfspace_column_identity(self, halfspace2):
        rng = np.random.default_rng(5)
        for _ in range(20):
            x1 = int(rng.integers(1, 12))
            x2 = int(rng.integers(-12, 12))
            assert wl.distance_sq_to_boundary((x1, x2), halfspace2) == x1 * x1

    def test_cone_vs_brute(self, cone2):
        steps = wl.unit_steps(2)
        for p in [(5, 0), (3, 1), (7, -2), (2, 0)]:
            got = wl.distance_sq_to_boundary(p, cone2, steps)
            assert got == brute_distance_sq(p, cone2, steps, window=14)

    def test_outside_domain_raises(self, halfspace2):
        with pytest.raises(OutsideDomainError):
            wl.distance_to_boundary((0, 0), halfspace2)

    def test_batch_matches_single(self, cone2):
        steps = wl.unit_steps(2)
        pts = wl.enumerate_region(wl.ball((6, 0), 4), cone2)
        batch = wl.boundary_distances_sq(pts, cone2, steps)
        for p, d2 in zip(pts, batch):
            assert d2 == wl.distance_sq_to_boundary(tuple(p), cone2, steps)

    def test_monotone_under_domain_inclusion(self, halfspace2, cone2):
        # cone domain is contained in the half-space; distances are smaller
        for p in [(4, 1), (6, -3), (3, 0)]:
            assert (wl.distance_sq_to_boundary(p, cone2)
                    <= wl.distance_sq_to_boundary(p, halfspace2))


class TestExteriorFraction:
    def test_halfspace_near_half(self, halfspace2):
        for R in (8, 16, 32):
            f = wl.exterior_cone_fraction((0, 0), R, halfspace2)
            assert abs(f - 0.5) < 2.5 / R

    def test_cone_exact_count(self, cone2):
        f = wl.exterior_cone_fraction((0, 0), 16, cone2)
        # independent count over the plain closed cube (unit steps)
        pts = wl.enumerate_region(wl.cube((0, 0), 16))
        closure = {tuple(p) for p in pts} | {
            tuple(p) for p in wl.boundary(pts, wl.unit_steps(2))}
        arr = np.array(sorted(closure))
        outside = (~cone2.contains_array(arr)).sum()
        assert f == outside / len(arr)

    def test_monotone_in_domain(self, halfspace2, cone2):
        # enlarging the domain shrinks the exterior fraction
        for R in (8, 16):
            assert (wl.exterior_cone_fraction((0, 0), R, cone2)
                    >= wl.exterior_cone_fraction((0, 0), R, halfspace2))

    def test_uniform_floor_over_anchors(self, cone2):
        fracs = []
        for y2 in (-6, -2, 0, 3, 7):
            y = (abs(y2), y2)  # graph points of the cone profile
            assert wl.is_domain_boundary_point(y, cone2)
            for R in (8, 16):
                fracs.append(wl.exterior_cone_fraction(y, R, cone2))
        assert min(fracs) > 0.3

    def test_requires_boundary_point(self, halfspace2):
        with pytest.raises(OutsideDomainError):
            wl.exterior_cone_fraction((3, 0), 8, halfspace2)
