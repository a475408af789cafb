"""Geometry primitives against closed-form oracles and invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import hypermosaic as hm
from hypermosaic.geometry import (
    _chebyshev_center,
    positively_spans,
    simplex_volume_delta,
)


def unit(theta):
    return np.array([math.cos(theta), math.sin(theta)])


class TestSimplexInball:
    def test_unit_right_isoceles_triangle(self):
        # Lines y = 0, x = 1, y = x bound a triangle with legs 1; its
        # inradius is (2 - sqrt(2)) / 2 and the incenter sits at (1 - rho, rho).
        tri = [
            hm.Hyperplane(np.array([0.0, -1.0]), 0.0),
            hm.Hyperplane(np.array([1.0, 0.0]), 1.0),
            hm.Hyperplane(unit(3.0 * math.pi / 4.0), 0.0),
        ]
        z, r, orient = hm.simplex_inball(tri)
        rho = (2.0 - math.sqrt(2.0)) / 2.0
        assert abs(r - rho) < 1e-12
        assert np.allclose(z, [1.0 - rho, rho], atol=1e-12)
        assert set(np.unique(orient)) <= {-1.0, 1.0}

    def test_equilateral_triangle(self):
        # Tangent lines of the unit-inradius equilateral triangle.
        normals = [unit(a) for a in (math.pi / 2, math.pi / 2 + 2 * math.pi / 3,
                                     math.pi / 2 + 4 * math.pi / 3)]
        z, r, _ = hm.simplex_inball((np.array(normals), -np.ones(3)))
        assert abs(r - 1.0) < 1e-12
        assert np.allclose(z, 0.0, atol=1e-12)

    def test_parallel_normals_rejected(self):
        planes = (np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                  np.array([0.0, 1.0, 0.0]))
        with pytest.raises(hm.MosaicError):
            hm.simplex_inball(planes)

    def test_tetrahedron_d3(self):
        # Regular tetrahedron tangent planes at distance 1 from the origin.
        v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]],
                     dtype=float) / math.sqrt(3.0)
        z, r, _ = hm.simplex_inball((v, -np.ones(4)))
        assert abs(r - 1.0) < 1e-12
        assert np.allclose(z, 0.0, atol=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_batch_matches_scalar(self, seed):
        rng = np.random.default_rng(seed)
        U = rng.normal(size=(3, 2))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        t = rng.normal(size=3)
        try:
            z1, r1, o1 = hm.simplex_inball((U, t))
        except hm.MosaicError:
            return
        zc, rc, oc, ok = hm.simplex_inball_batch(U[None], t[None])
        assert ok[0]
        assert np.allclose(zc[0], z1, atol=1e-9)
        assert abs(rc[0] - r1) < 1e-9
        # Tangency: distance from center to every plane equals the radius.
        dist = np.abs(U @ z1 - t)
        assert np.allclose(dist, r1, atol=1e-9)

    def test_inball_is_tangent_to_all_planes_d3(self):
        rng = np.random.default_rng(7)
        found = 0
        while found < 25:
            U = rng.normal(size=(4, 3))
            U /= np.linalg.norm(U, axis=1, keepdims=True)
            t = rng.normal(size=4)
            try:
                z, r, _ = hm.simplex_inball((U, t))
            except hm.MosaicError:
                continue
            found += 1
            assert np.allclose(np.abs(U @ z - t), r, atol=1e-9)


class TestCellPolytope:
    def test_triangle_cell(self):
        tri = [
            hm.Hyperplane(np.array([0.0, -1.0]), 0.0),
            hm.Hyperplane(np.array([1.0, 0.0]), 1.0),
            hm.Hyperplane(unit(3.0 * math.pi / 4.0), 0.0),
        ]
        P = hm.cell_polytope(tri)
        assert abs(hm.polytope_size(P, "volume") - 0.5) < 1e-12
        assert abs(hm.polytope_size(P, "surface_area")
                   - (2.0 + math.sqrt(2.0))) < 1e-12

    def test_extra_planes_cut(self):
        tri = [
            hm.Hyperplane(np.array([0.0, -1.0]), 0.0),
            hm.Hyperplane(np.array([1.0, 0.0]), 1.0),
            hm.Hyperplane(unit(3.0 * math.pi / 4.0), 0.0),
        ]
        # A vertical cut at x = 0.3 misses the inball (centered near
        # x = 0.71 with radius 0.29) and keeps the piece containing it.
        P = hm.cell_polytope(tri, ([[1.0, 0.0]], [0.3]))
        assert hm.polytope_size(P, "volume") < 0.5
        assert P.vertices[:, 0].min() >= 0.3 - 1e-12

    def test_vertex_count_square(self):
        square = hm.box_polytope(hm.Box(np.zeros(2), np.ones(2)))
        assert len(square.vertices) == 4
        assert abs(hm.polytope_size(square, "volume") - 1.0) < 1e-12


class TestSizeFunctionals:
    def test_phi_of_ball_is_diameter(self):
        # Polygonal approximation of the disk: mean width tends to 2r.
        P = hm.regular_polygon(512, radius=3.0)
        assert abs(hm.phi_mean_width(P) - 6.0) < 1e-3

    def test_phi_square(self):
        # Unit square: perimeter / pi (Cauchy).
        sq = hm.regular_polygon(4, radius=math.sqrt(0.5), phase=math.pi / 4)
        assert abs(hm.phi_mean_width(sq) - 4.0 / math.pi) < 1e-8

    def test_homogeneity(self):
        P = hm.regular_polygon(7, radius=1.3, phase=0.4)
        Q = hm.Polytope(P.vertices * 2.5, P.halfspace_normals,
                        P.halfspace_offsets * 2.5)
        assert abs(hm.polytope_size(Q, "volume")
                   - 2.5 ** 2 * hm.polytope_size(P, "volume")) < 1e-10
        assert abs(hm.phi_mean_width(Q) - 2.5 * hm.phi_mean_width(P)) < 1e-8

    def test_tau_attained_by_ball(self):
        size = hm.SizeFunctional.volume(2)
        P = hm.regular_polygon(1024, radius=1.0)
        phi = hm.phi_mean_width(P)
        sigma = hm.polytope_size(P, "volume")
        # Near-disk: phi close to tau * sigma^(1/2), never below.
        assert phi >= size.tau * sigma ** 0.5 - 1e-9
        assert phi <= size.tau * sigma ** 0.5 + 1e-3

    def test_isoperimetric_on_random_polygons(self):
        size = hm.SizeFunctional.volume(2)
        rng = np.random.default_rng(11)
        for _ in range(50):
            P = _hull_polytope(rng.normal(size=(32, 2)))
            phi = hm.phi_mean_width(P)
            sigma = hm.polytope_size(P, "volume")
            assert phi >= size.tau * sigma ** (1.0 / size.degree) - 1e-9


def _hull_polytope(pts):
    from scipy.spatial import ConvexHull

    h = ConvexHull(pts)
    return hm.Polytope(pts[h.vertices], h.equations[:, :2], -h.equations[:, 2])


class TestDeviationTheta:
    def test_ball_is_zero(self):
        P = hm.regular_polygon(256, radius=2.0)
        assert hm.deviation_theta(P) < 2e-4

    def test_square_value(self):
        sq = hm.regular_polygon(4, radius=1.0)
        assert abs(hm.deviation_theta(sq) - (3.0 - 2.0 * math.sqrt(2.0))) < 1e-6

    @pytest.mark.parametrize("n", [3, 5, 6, 8])
    def test_regular_polygon_formula(self, n):
        # Circumradius/inradius of the regular n-gon give
        # theta = (1 - cos(pi/n)) / (1 + cos(pi/n)).
        P = hm.regular_polygon(n, radius=1.7, phase=0.3)
        want = (1.0 - math.cos(math.pi / n)) / (1.0 + math.cos(math.pi / n))
        assert abs(hm.deviation_theta(P) - want) < 1e-6

    def test_translation_invariant(self):
        P = hm.regular_polygon(5, radius=1.0)
        w = np.array([17.0, -4.0])
        Q = hm.Polytope(P.vertices + w, P.halfspace_normals,
                        P.halfspace_offsets + P.halfspace_normals @ w)
        assert abs(hm.deviation_theta(P) - hm.deviation_theta(Q)) < 1e-6


class TestChebyshevAndSpan:
    def test_chebyshev_square(self):
        A = np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]])
        b = np.array([1.0, 0.0, 1.0, 0.0])
        z, r = _chebyshev_center(A, b)
        assert np.allclose(z, [0.5, 0.5], atol=1e-9)
        assert abs(r - 0.5) < 1e-9

    def test_positively_spans(self):
        assert positively_spans(np.array([[1.0, 0], [-0.5, 0.5], [-0.5, -0.5]]))
        assert not positively_spans(np.array([[1.0, 0], [0.5, 0.5], [0, 1.0]]))

    @given(st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_generic_lines_always_bound_a_simplex(self, seed):
        # Three generic lines in the plane always enclose a triangle, so a
        # bounded simplex must be found for any offsets.
        rng = np.random.default_rng(seed)
        U = rng.normal(size=(3, 2))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        t = rng.normal(size=3)
        try:
            hm.simplex_inball((U, t))
        except hm.NotGeneralPosition:
            return
        # No Unbounded means the triangle was found; reaching here passes.

    def test_random_rotation_orthogonal(self):
        rng = np.random.default_rng(0)
        for d in (2, 3, 5):
            Q = hm.random_rotation(d, rng)
            assert np.allclose(Q @ Q.T, np.eye(d), atol=1e-12)
            assert abs(np.linalg.det(Q) - 1.0) < 1e-9


class TestSimplexVolume:
    def test_unit_simplex_delta(self):
        pts = np.array([[0.0, 0], [1, 0], [0, 1]])
        assert abs(simplex_volume_delta(pts) - 0.5) < 1e-12

    def test_degenerate_is_zero(self):
        pts = np.array([[0.0, 0], [1, 1], [2, 2]])
        assert abs(simplex_volume_delta(pts)) < 1e-12
