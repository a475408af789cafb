"""Convex geometry primitives for hyperplane mosaics.

Provides the deterministic geometric layer used everywhere else:

* spherical constants (unit ball volume, unit sphere surface area),
* value types: Hyperplane, Ball, Box, Polytope, SizeFunctional,
* inball of a bundle of d+1 hyperplanes with facet orientations,
* construction of the mosaic cell determined by such a bundle,
* size functionals (volume, surface area) and mean width,
* the shape deviation functional min_z (R(z) - rho(z)) / (R(z) + rho(z)),
* simplex and parallelepiped volumes of direction tuples and the
  positive-spanning test for d+1 directions.

Dimensions 2 and 3 are fully supported for cell construction; the scalar
integral-geometry helpers work for any d >= 2.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize
from scipy.spatial import ConvexHull, HalfspaceIntersection

from .errors import (
    DegeneratePolytope,
    DimensionUnsupported,
    InballHit,
    NotGeneralPosition,
    QuadratureNotConverged,
    Unbounded,
)

# Tolerances. UNIT_TOL gates hyperplane normal lengths, SPAN_TOL the
# positive-spanning cofactor test, VERTEX_TOL the halfspace residuals of
# polytope vertices, COND_MAX the conditioning of accepted inball solves.
UNIT_TOL = 1e-12
SPAN_TOL = 1e-10
VERTEX_TOL = 1e-9
COND_MAX = 1e12


def unit_ball_volume(d):
    """Volume of the unit ball in R^d."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def unit_sphere_area(d):
    """Surface measure of the unit sphere S^(d-1) in R^d (d * ball volume)."""
    return d * unit_ball_volume(d)


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Hyperplane {x : <normal, x> = offset} with a unit normal.

    The normal must have unit length within 1e-12. ``offset`` is the signed
    distance of the hyperplane from the origin along ``normal``.
    """

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.ndim != 1 or n.shape[0] < 2:
            raise ValueError("normal must be a vector of dimension >= 2")
        if abs(np.linalg.norm(n) - 1.0) > UNIT_TOL:
            raise ValueError("normal must have unit length within 1e-12")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dimension(self):
        return self.normal.shape[0]

    def signed_distance(self, x):
        """<normal, x> - offset, positive on the normal's side."""
        return float(np.dot(self.normal, x) - self.offset)


@dataclass(frozen=True, eq=False)
class Ball:
    """Closed ball with given center and radius >= 0."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1:
            raise ValueError("center must be a vector")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dimension(self):
        return self.center.shape[0]

    def contains_point(self, x, tol=0.0):
        return np.linalg.norm(np.asarray(x) - self.center) <= self.radius + tol

    def contains_ball(self, other, tol=0.0):
        gap = np.linalg.norm(other.center - self.center) + other.radius
        return gap <= self.radius + tol


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be vectors of equal dimension")
        if np.any(hi <= lo):
            raise ValueError("box must have positive side lengths")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self):
        return self.lo.shape[0]

    @property
    def volume(self):
        return float(np.prod(self.hi - self.lo))

    def contains_points(self, x, tol=0.0):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.all((x >= self.lo - tol) & (x <= self.hi + tol), axis=1)

    def circumball(self):
        c = 0.5 * (self.lo + self.hi)
        return Ball(c, float(np.linalg.norm(self.hi - c)))

    def scaled(self, s):
        """Box s * [lo, hi] under scalar scaling about the origin."""
        return Box(self.lo * s, self.hi * s)


@dataclass(eq=False)
class Polytope:
    """Bounded intersection of halfspaces {x : A x <= b} with its vertices.

    ``halfspace_normals`` rows are unit outward normals, ``halfspace_offsets``
    the matching right-hand sides. Vertices must satisfy every halfspace
    within 1e-9; construction validates this. For d = 2 the vertices are in
    counterclockwise order.
    """

    vertices: np.ndarray
    halfspace_normals: np.ndarray
    halfspace_offsets: np.ndarray

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        self.halfspace_normals = np.atleast_2d(
            np.asarray(self.halfspace_normals, dtype=float))
        self.halfspace_offsets = np.asarray(self.halfspace_offsets, dtype=float)
        d = self.vertices.shape[1]
        if self.vertices.shape[0] < d + 1:
            raise DegeneratePolytope("polytope needs at least d+1 vertices")
        resid = self.vertices @ self.halfspace_normals.T - self.halfspace_offsets
        worst = float(resid.max(initial=-np.inf))
        if worst > VERTEX_TOL:
            raise DegeneratePolytope(
                f"vertex violates a halfspace by {worst:.3e} > {VERTEX_TOL}")

    @property
    def dimension(self):
        return self.vertices.shape[1]

    def contains_points(self, x, tol=VERTEX_TOL):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        resid = x @ self.halfspace_normals.T - self.halfspace_offsets
        return np.all(resid <= tol, axis=1)

    def support(self, directions):
        """Support function max_v <v, u> for one or many directions."""
        u = np.asarray(directions, dtype=float)
        vals = np.atleast_2d(u) @ self.vertices.T
        h = vals.max(axis=1)
        return float(h[0]) if u.ndim == 1 else h

    def circumradius(self, z):
        return float(np.linalg.norm(self.vertices - np.asarray(z), axis=1).max())


@dataclass(frozen=True)
class SizeFunctional:
    """A size functional with its homogeneity degree and isoperimetric slope.

    ``kind`` is "volume" or "surface_area"; ``degree`` is the homogeneity
    degree k (sigma(s K) = s^k sigma(K)); ``tau`` is the largest constant
    with mean_width(K) >= tau * sigma(K)^(1/k) over convex bodies, attained
    by balls.
    """

    kind: str
    dimension: int
    degree: int
    tau: float

    def __post_init__(self):
        if self.kind not in ("volume", "surface_area"):
            raise ValueError("kind must be 'volume' or 'surface_area'")
        if self.degree < 1 or self.tau <= 0:
            raise ValueError("degree must be >= 1 and tau positive")

    @classmethod
    def volume(cls, d):
        # Ball of radius rho: width 2 rho, volume kappa_d rho^d.
        return cls("volume", d, d, 2.0 * unit_ball_volume(d) ** (-1.0 / d))

    @classmethod
    def surface_area(cls, d):
        # Ball of radius rho: width 2 rho, surface omega_d rho^(d-1).
        if d < 2:
            raise ValueError("surface area needs d >= 2")
        return cls("surface_area", d, d - 1,
                   2.0 * unit_sphere_area(d) ** (-1.0 / (d - 1)))

    def evaluate(self, P):
        return polytope_size(P, self.kind)


def _as_normal_offset_arrays(hyperplanes):
    """Coerce a sequence of Hyperplane or an (U, t) pair to arrays."""
    if isinstance(hyperplanes, tuple) and len(hyperplanes) == 2:
        U = np.atleast_2d(np.asarray(hyperplanes[0], dtype=float))
        t = np.asarray(hyperplanes[1], dtype=float)
    else:
        U = np.array([h.normal for h in hyperplanes], dtype=float)
        t = np.array([h.offset for h in hyperplanes], dtype=float)
    norms = np.linalg.norm(U, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-9):
        raise ValueError("hyperplane normals must be unit vectors")
    return U, t


def simplex_volume_delta(points):
    """Volume of the simplex spanned by ell+1 points in R^d (ell <= d).

    Computed as sqrt(det(E E^T)) / ell! with E the edge matrix from the
    first point. Returns 0 for a single point.
    """
    p = np.atleast_2d(np.asarray(points, dtype=float))
    ell = p.shape[0] - 1
    if ell == 0:
        return 0.0
    E = p[1:] - p[0]
    gram = E @ E.T
    det = float(np.linalg.det(gram))
    return math.sqrt(max(det, 0.0)) / math.factorial(ell)


def parallelepiped_volume_nabla(vectors):
    """ell-volume of the parallelepiped spanned by ell vectors in R^d."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    gram = V @ V.T
    det = float(np.linalg.det(gram))
    return math.sqrt(max(det, 0.0))


def _cofactor_null_vector(U):
    """Null vector of U^T for U of shape (d+1, d) via signed minors.

    lam_i = (-1)^i det(U with row i removed). U^T lam = 0 always; in general
    position all entries are nonzero and sign(lam) encodes the unique pair of
    facet orientations under which the hyperplane bundle bounds a simplex.
    """
    m, d = U.shape
    if m != d + 1:
        raise ValueError("need exactly d+1 vectors")
    lam = np.empty(m)
    for i in range(m):
        minor = np.delete(U, i, axis=0)
        lam[i] = (-1.0) ** i * np.linalg.det(minor)
    return lam


def positively_spans(vectors, tol=SPAN_TOL):
    """Whether d+1 unit vectors positively span R^d.

    True iff 0 is in the interior of their convex hull, tested through the
    signed-minor null vector: the d+1 cofactors must share a strict sign.
    Cofactors smaller than tol (relative to the largest) are treated as
    degenerate and yield False.
    """
    U = np.atleast_2d(np.asarray(vectors, dtype=float))
    lam = _cofactor_null_vector(U)
    scale = np.abs(lam).max()
    if scale == 0.0 or np.any(np.abs(lam) <= tol * scale):
        return False
    return bool(np.all(lam > 0) or np.all(lam < 0))


def simplex_inball(hyperplanes):
    """Inball and facet orientations of the simplex bounded by d+1 hyperplanes.

    Parameters
    ----------
    hyperplanes : sequence of Hyperplane, or (normals, offsets) pair
        d+1 hyperplanes in R^d with unit normals.

    Returns
    -------
    center : ndarray, shape (d,)
    radius : float, > 0
    orientations : ndarray of +-1, shape (d+1,)
        Side indicators: the simplex is the set of x with
        orientations[i] * (<normals[i], x> - offsets[i]) >= 0 for all i, and
        the center satisfies <normals[i], center> - offsets[i] =
        orientations[i] * radius. Outward facet normals are
        -orientations[i] * normals[i].

    Raises
    ------
    NotGeneralPosition
        If normals are degenerate, the accepted linear system has condition
        number above 1e12, or several sign patterns pass.
    Unbounded
        If no sign pattern yields a bounded simplex with positive radius.

    Notes
    -----
    Enumerates the 2^d sign patterns with the last entry fixed to +1 (a
    global flip negates the radius, so this covers all 2^(d+1)) through one
    batched linear solve, then accepts the unique pattern whose outward
    normals positively span R^d and whose radius is positive.
    """
    U, t = _as_normal_offset_arrays(hyperplanes)
    m, d = U.shape
    if m != d + 1:
        raise ValueError(f"need d+1 = {d + 1} hyperplanes, got {m}")
    if d > 12:
        raise DimensionUnsupported("sign-pattern enumeration capped at d = 12")

    # All sign patterns with eps[d] = +1; column of -eps completes the system
    # <u_i, z> - eps_i r = t_i in the unknowns (z, r).
    k = 2 ** d
    eps = np.ones((k, m))
    for j in range(d):
        eps[:, j] = np.where((np.arange(k) >> j) & 1, 1.0, -1.0)
    A = np.broadcast_to(U, (k, m, d)).copy()
    A = np.concatenate([A, -eps[:, :, None]], axis=2)

    dets = np.linalg.det(A)
    scale = np.abs(dets).max()
    if scale == 0.0:
        raise NotGeneralPosition("all sign-pattern systems are singular")
    solvable = np.abs(dets) > 1e-14 * scale
    sols = np.full((k, m), np.nan)
    if solvable.any():
        rhs = np.broadcast_to(t[:, None], (int(solvable.sum()), m, 1))
        sols[solvable] = np.linalg.solve(A[solvable], rhs)[:, :, 0]

    lam = _cofactor_null_vector(U)
    lscale = np.abs(lam).max()
    if lscale == 0.0 or np.any(np.abs(lam) <= SPAN_TOL * lscale):
        raise NotGeneralPosition("a d-subset of the normals is linearly dependent")

    accepted = []
    for idx in range(k):
        if not solvable[idx]:
            continue
        r = sols[idx, -1]
        if not np.isfinite(r) or r == 0.0:
            continue
        e = eps[idx] if r > 0 else -eps[idx]
        # Outward normals -e_i u_i positively span iff e == +-sign(lam).
        if np.all(e == np.sign(lam)) or np.all(e == -np.sign(lam)):
            accepted.append((idx, abs(r), e))
    if not accepted:
        raise Unbounded("no sign pattern yields a bounded simplex")
    if len(accepted) > 1:
        raise NotGeneralPosition("multiple sign patterns accepted")

    idx, radius, orient = accepted[0]
    if np.linalg.cond(A[idx]) > COND_MAX:
        raise NotGeneralPosition("inball system condition number above 1e12")
    center = sols[idx, :d].copy()
    return center, float(radius), orient


def cofactor_batch(U):
    """Signed-minor null vectors for stacked (N, d+1, d) direction tuples."""
    U = np.asarray(U, dtype=float)
    N, m, d = U.shape
    if m != d + 1:
        raise ValueError("tuples must contain d+1 vectors")
    lam = np.empty((N, m))
    for i in range(m):
        minor = np.delete(U, i, axis=1)
        lam[:, i] = (-1.0) ** i * np.linalg.det(minor)
    return lam


def positively_spans_batch(U, tol=SPAN_TOL):
    """Vectorized positive-spanning test for stacked direction tuples."""
    lam = cofactor_batch(U)
    scale = np.abs(lam).max(axis=1)
    ok = (scale > 0) & (np.abs(lam) > tol * scale[:, None]).all(axis=1)
    same = np.all(lam > 0, axis=1) | np.all(lam < 0, axis=1)
    return ok & same


def delta_batch(points):
    """Vectorized simplex volumes for stacked (N, d+1, d) point tuples."""
    p = np.asarray(points, dtype=float)
    d = p.shape[2]
    E = p[:, 1:, :] - p[:, :1, :]
    return np.abs(np.linalg.det(E)) / math.factorial(d)


def simplex_inball_batch(U, t, span_tol=SPAN_TOL):
    """Vectorized simplex inballs for many hyperplane bundles at once.

    Parameters
    ----------
    U : ndarray, shape (N, d+1, d)
        Unit normals of N bundles.
    t : ndarray, shape (N, d+1)
        Offsets.

    Returns
    -------
    center : ndarray, shape (N, d)
    radius : ndarray, shape (N,)
    orientations : ndarray, shape (N, d+1)
    ok : ndarray of bool, shape (N,)
        False where the bundle is degenerate; other outputs are NaN there.

    Matches simplex_inball on every bundle with ok True. The sign pattern is
    taken directly from the cofactor null vector instead of enumerating, which
    is equivalent in general position.
    """
    U = np.asarray(U, dtype=float)
    t = np.asarray(t, dtype=float)
    N, m, d = U.shape
    if m != d + 1:
        raise ValueError("bundles must contain d+1 hyperplanes")
    lam = cofactor_batch(U)
    scale = np.abs(lam).max(axis=1)
    ok = (scale > 0) & (np.abs(lam) > span_tol * scale[:, None]).all(axis=1)

    eps = np.sign(lam)
    eps[~ok] = 1.0  # placeholder to keep the batched solve well posed
    A = np.concatenate([U, -eps[:, :, None]], axis=2)
    dets = np.linalg.det(A)
    ok &= np.abs(dets) > 1e-14 * np.abs(A).max(initial=1.0) ** (d + 1)
    A[~ok] = np.eye(m)
    sol = np.linalg.solve(A, t[:, :, None])[:, :, 0]
    center = sol[:, :d].copy()
    radius = sol[:, d].copy()
    flip = radius < 0
    radius = np.abs(radius)
    eps[flip] = -eps[flip]
    ok &= radius > 0
    center[~ok] = np.nan
    radius[~ok] = np.nan
    return center, radius, eps, ok


def _simplex_vertices(U, t):
    """Vertices of the simplex: intersection of each d-subset of d+1 planes."""
    m, d = U.shape
    verts = np.empty((m, d))
    for i in range(m):
        sub = np.delete(np.arange(m), i)
        verts[i] = np.linalg.solve(U[sub], t[sub])
    return verts


def _clip_polygon(verts, normal, offset, keep_sign):
    """Clip a polygon to {x : keep_sign * (<normal, x> - offset) >= 0}."""
    g = keep_sign * (verts @ normal - offset)
    if np.all(g >= 0):
        return verts, False
    out = []
    n = len(verts)
    for i in range(n):
        j = (i + 1) % n
        gi, gj = g[i], g[j]
        if gi >= 0:
            out.append(verts[i])
        if (gi > 0) != (gj > 0) and gi != gj:
            s = gi / (gi - gj)
            out.append(verts[i] + s * (verts[j] - verts[i]))
    return np.array(out), True


def _order_ccw(verts):
    c = verts.mean(axis=0)
    ang = np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0])
    order = np.argsort(ang)
    v = verts[order]
    # Shoelace sign check; reversal should never trigger after angular sort.
    area2 = np.dot(v[:, 0], np.roll(v[:, 1], -1)) - np.dot(v[:, 1], np.roll(v[:, 0], -1))
    return v if area2 >= 0 else v[::-1]


def cell_polytope(tuple_hyperplanes, other_hyperplanes=None, inball=None):
    """Mosaic cell determined by a bundle of d+1 hyperplanes.

    The cell is the simplex of the bundle intersected with, for every other
    hyperplane, the closed halfspace containing the simplex inball center.

    Parameters
    ----------
    tuple_hyperplanes : sequence of Hyperplane or (normals, offsets)
        The d+1 hyperplanes whose inball the cell realizes.
    other_hyperplanes : (normals, offsets) pair or sequence, optional
        Remaining hyperplanes of the realization. None means none.
    inball : (center, radius, orientations), optional
        Precomputed result of simplex_inball for the bundle.

    Returns
    -------
    Polytope

    Raises
    ------
    DimensionUnsupported
        If d is not 2 or 3.
    InballHit
        If an other hyperplane meets the open inball (distance to the center
        below radius - 1e-12); the bundle then does not define this cell.
    """
    U, t = _as_normal_offset_arrays(tuple_hyperplanes)
    d = U.shape[1]
    if d not in (2, 3):
        raise DimensionUnsupported("cell construction supports d in {2, 3}")
    if inball is None:
        inball = simplex_inball((U, t))
    z, r, orient = inball

    if other_hyperplanes is None:
        V = np.empty((0, d))
        s = np.empty((0,))
    else:
        V, s = _as_normal_offset_arrays(other_hyperplanes)

    dist = np.abs(V @ z - s) if len(V) else np.empty((0,))
    if np.any(dist < r - 1e-12):
        raise InballHit("a non-bundle hyperplane meets the open inball")

    # Outward halfspaces of the simplex facets.
    A_rows = [-orient[:, None] * U]
    b_rows = [-orient * t]

    if d == 2:
        verts = _order_ccw(_simplex_vertices(U, t))
        if len(V):
            # Planes farther from z than the current circumradius cannot cut.
            order = np.argsort(dist)
            for i in order:
                rmax = np.linalg.norm(verts - z, axis=1).max()
                if dist[i] > rmax:
                    break
                side = 1.0 if (V[i] @ z - s[i]) >= 0 else -1.0
                verts, cut = _clip_polygon(verts, V[i], s[i], side)
                if cut:
                    A_rows.append((-side * V[i])[None, :])
                    b_rows.append(np.array([-side * s[i]]))
        A = np.vstack(A_rows)
        b = np.concatenate(b_rows)
        return Polytope(verts, A, b)

    # d == 3: halfspace intersection seeded at the inball center.
    A = [-orient[:, None] * U]
    b = [-orient * t]
    if len(V):
        side = np.where(V @ z - s >= 0, 1.0, -1.0)
        A.append(-side[:, None] * V)
        b.append(-side * s)
    A = np.vstack(A)
    b = np.concatenate(b)
    hs = np.column_stack([A, -b])
    try:
        inter = HalfspaceIntersection(hs, z)
    except Exception as exc:  # qhull reports degeneracies as QhullError
        raise DegeneratePolytope(f"halfspace intersection failed: {exc}") from exc
    verts = inter.intersections
    hull = ConvexHull(verts)
    return Polytope(verts[hull.vertices], A, b)


def polytope_size(P, kind="volume"):
    """Size functional of a polytope: "volume" or "surface_area".

    Volume is a fan decomposition about an interior point (shoelace for
    d = 2, signed tetrahedra over hull facets for d = 3); surface area is the
    boundary perimeter (d = 2) or the sum of facet areas (d = 3).
    """
    if isinstance(kind, SizeFunctional):
        kind = kind.kind
    if kind not in ("volume", "surface_area"):
        raise ValueError("kind must be 'volume' or 'surface_area'")
    v = P.vertices
    d = P.dimension
    if d == 2:
        x, y = v[:, 0], v[:, 1]
        if kind == "volume":
            return float(0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
        return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())
    if d == 3:
        hull = ConvexHull(v)
        return float(hull.volume if kind == "volume" else hull.area)
    raise DimensionUnsupported("sizes support d in {2, 3}")


def _polygon_normal_angles(P):
    """Outward edge-normal angles of a ccw polygon, for quadrature breakpoints."""
    v = P.vertices
    e = np.roll(v, -1, axis=0) - v
    ang = np.arctan2(-e[:, 0], e[:, 1])  # rotate edge by -pi/2 for outward normal
    return np.sort(np.mod(ang, 2 * math.pi))


def phi_mean_width(K, rel_tol=1e-8):
    """Mean width 2 * integral of the support function over the unit sphere.

    For a Ball this is 2 * radius exactly. For a d = 2 Polytope the support
    function is integrated by adaptive quadrature with breakpoints at the
    edge-normal angles (relative error <= 1e-8 enforced). For d = 3 the
    spherical integral is evaluated edge by edge in closed form: each edge
    contributes length * exterior_angle / (4 pi) to the mean width.
    """
    if isinstance(K, Ball):
        return 2.0 * K.radius
    d = K.dimension
    if d == 2:
        verts = K.vertices

        def h(theta):
            u = np.array([math.cos(theta), math.sin(theta)])
            return float((verts @ u).max())

        pts = _polygon_normal_angles(K)
        # One smooth piece per angular interval between consecutive edge
        # normals (QUADPACK caps the break-point count well below large
        # vertex counts, so integrate piecewise instead).
        edges = np.concatenate([pts, [pts[0] + 2 * math.pi]])
        val = 0.0
        err = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if b - a < 1e-15:
                continue
            v_i, e_i = integrate.quad(h, a, b, limit=200,
                                      epsabs=0.0, epsrel=1e-10)
            val += v_i
            err += e_i
        if err > rel_tol * max(abs(val), 1e-300):
            raise QuadratureNotConverged(
                f"support quadrature error {err:.2e} above tolerance")
        return float(val / math.pi)
    if d == 3:
        hull = ConvexHull(K.vertices)
        pts = hull.points
        # Facet unit normals of the triangulated hull, oriented outward.
        total = 0.0
        simplices = hull.simplices
        normals = hull.equations[:, :3]
        # Map each undirected edge to the two adjacent facets.
        edge_faces = {}
        for fi, tri in enumerate(simplices):
            for a, b in ((0, 1), (1, 2), (2, 0)):
                key = (min(tri[a], tri[b]), max(tri[a], tri[b]))
                edge_faces.setdefault(key, []).append(fi)
        for (i, j), faces in edge_faces.items():
            if len(faces) != 2:
                raise DegeneratePolytope("open edge in hull triangulation")
            n1, n2 = normals[faces[0]], normals[faces[1]]
            cosang = float(np.clip(np.dot(n1, n2), -1.0, 1.0))
            ext = math.acos(cosang)
            length = float(np.linalg.norm(pts[i] - pts[j]))
            total += length * ext
        return total / (4 * math.pi)
    raise DimensionUnsupported("mean width supports balls and d in {2, 3}")


def _chebyshev_center(A, b):
    """Center of the largest inscribed ball of {A x <= b} via linear program."""
    m, d = A.shape
    c = np.zeros(d + 1)
    c[-1] = -1.0
    Aub = np.column_stack([A, np.ones(m)])
    res = optimize.linprog(c, A_ub=Aub, b_ub=b,
                           bounds=[(None, None)] * d + [(0, None)],
                           method="highs")
    if not res.success:
        raise DegeneratePolytope("Chebyshev center linear program failed")
    return res.x[:d], float(res.x[-1])


def deviation_theta(P, restarts=5, tol=1e-8, seed=0):
    """Shape deviation min over z of (R(z) - rho(z)) / (R(z) + rho(z)).

    R(z) is the circumradius about z, rho(z) the distance from z to the
    boundary. The minimum over interior points z is 0 exactly for balls and
    grows toward 1 for elongated bodies. Found by Nelder-Mead local search
    from ``restarts`` starting points (Chebyshev center, vertex centroid,
    and seeded random interior perturbations), tolerance 1e-8.
    """
    A = P.halfspace_normals
    b = P.halfspace_offsets
    verts = P.vertices
    cheb, inr = _chebyshev_center(A, b)
    if inr <= 0:
        raise DegeneratePolytope("polytope has empty interior")

    def objective(z):
        rho = float((b - A @ z).min())
        if rho <= 0.0:
            return 2.0 - rho  # push back inside
        R = float(np.linalg.norm(verts - z, axis=1).max())
        return (R - rho) / (R + rho)

    rng = np.random.default_rng(seed)
    starts = [cheb, verts.mean(axis=0)]
    while len(starts) < restarts:
        starts.append(cheb + rng.normal(size=P.dimension) * (inr / 3.0))
    best = np.inf
    for z0 in starts[:restarts]:
        res = optimize.minimize(objective, z0, method="Nelder-Mead",
                                options={"xatol": tol * max(inr, 1.0) * 0.1,
                                         "fatol": tol * 0.1,
                                         "maxiter": 400})
        if res.fun < best:
            best = float(res.fun)
    return best


def regular_polygon(n, radius=1.0, center=(0.0, 0.0), phase=0.0):
    """Regular n-gon as a Polytope, for tests and demos."""
    c = np.asarray(center, dtype=float)
    ang = phase + 2 * math.pi * np.arange(n) / n
    verts = c + radius * np.column_stack([np.cos(ang), np.sin(ang)])
    mid = phase + 2 * math.pi * (np.arange(n) + 0.5) / n
    A = np.column_stack([np.cos(mid), np.sin(mid)])
    b = A @ c + radius * math.cos(math.pi / n)
    return Polytope(verts, A, b)


def box_polytope(box):
    """Axis-aligned Box as a Polytope (d = 2 or 3)."""
    d = box.dimension
    if d == 2:
        lo, hi = box.lo, box.hi
        verts = np.array([[lo[0], lo[1]], [hi[0], lo[1]],
                          [hi[0], hi[1]], [lo[0], hi[1]]])
        A = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        b = np.array([hi[0], -lo[0], hi[1], -lo[1]])
        return Polytope(verts, A, b)
    if d == 3:
        lo, hi = box.lo, box.hi
        pts = np.array([[x, y, z] for x in (lo[0], hi[0])
                        for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        A = np.vstack([np.eye(3), -np.eye(3)])
        b = np.concatenate([hi, -lo])
        return Polytope(pts, A, b)
    raise DimensionUnsupported("box polytopes support d in {2, 3}")


def random_rotation(d, rng):
    """Haar-random rotation matrix in SO(d)."""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
