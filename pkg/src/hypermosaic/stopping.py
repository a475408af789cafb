"""Directional stopping radii for mosaic cells.

A cone system splits directions at a point into finitely many cones. For a
cell with inball center z and inradius r, the cone radius R_i is the
distance from z to the nearest hyperplane whose direction from z falls in
cone i. Writing alpha for the cone opening, the stopping radius

    R = max_i R_i / cos(alpha),

computed over the hyperplanes that miss the inball, bounds the circumradius
of the cell: once every direction cone is closed off, nothing outside
B(z, R) can touch the cell, so the hyperplanes hitting B(z, R) determine it
completely. The set of hyperplanes hitting B(z, R) is a stopping set: whether
it is contained in a compact set S can be decided from the hyperplanes in S
alone.

The primed radius R' replaces each cone radius by the minimum over the
cone's neighbors and relaxes the angle to 3 alpha. It is used by the
decorrelation experiment: the events "a cell near x is large and has a
small primed radius" at two distant locations x, y are nearly independent,
with correlation ratio bounded by 2.

For d = 2 the cones are equal sectors, essentially disjoint with spherical
measure 1/|I| each, and the stopping radius of a cell with inradius r has
the explicit survival law

    P(R > u) = 1 - (1 - exp(-2 gamma (u cos(alpha) - r)/|I|))^|I|

for u > r / cos(alpha). For d = 3 the cones come from an icosahedral
covering and overlap, so only the determination guarantees hold there, not
the product law.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigInvalid,
    CoverageFailure,
    DimensionUnsupported,
    InsufficientSamples,
    PreconditionViolated,
)
from .geometry import Ball
from .process import replicate_rng, sample, uniform_sphere

DIST_TOL = 1e-12


@dataclass(eq=False)
class ConeSystem:
    """Finite collection of direction cones covering R^d.

    axes holds one unit vector per cone; angular_radius is the half-opening
    alpha/2. neighbors[i] lists the cones whose closures meet cone i
    (including i itself).
    """

    dimension: int
    alpha: float
    axes: np.ndarray
    neighbors: list

    @property
    def n_cones(self):
        return len(self.axes)

    @property
    def angular_radius(self):
        return self.alpha / 2.0

    def cone_index(self, dirs):
        """Sector index of each direction (d = 2 only)."""
        if self.dimension != 2:
            raise DimensionUnsupported("sector indexing is d = 2 only")
        theta = np.mod(np.arctan2(dirs[:, 1], dirs[:, 0]), 2.0 * math.pi)
        width = 2.0 * math.pi / self.n_cones
        return np.minimum((theta / width).astype(np.int64), self.n_cones - 1)

    def membership(self, dirs):
        """Boolean matrix (directions x cones); cones may overlap for d = 3."""
        if self.dimension == 2:
            m = np.zeros((len(dirs), self.n_cones), dtype=bool)
            m[np.arange(len(dirs)), self.cone_index(dirs)] = True
            return m
        cosr = math.cos(self.angular_radius)
        return dirs @ self.axes.T >= cosr - 1e-12


def _icosahedron():
    p = (1.0 + math.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0],
        [0, -1, p], [0, 1, p], [0, -1, -p], [0, 1, -p],
        [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1],
    ], dtype=float)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    return verts, faces


def _subdivide(verts, faces):
    verts = list(map(tuple, verts))
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = np.array(verts[i]) + np.array(verts[j])
            m /= np.linalg.norm(m)
            cache[key] = len(verts)
            verts.append(tuple(m))
        return cache[key]

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_faces.extend([[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]])
    return np.array(verts), np.array(new_faces)


def _fibonacci_sphere(n):
    i = np.arange(n) + 0.5
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def build_cone_system(d, alpha, coverage_grid=100_000, max_level=6):
    """Cone system with opening alpha in (0, pi/6).

    d = 2: exactly ceil(2 pi / alpha) equal sectors. d = 3: circular cones
    of angular radius alpha/2 around subdivided-icosahedron directions,
    subdividing until a dense direction grid is covered
    (CoverageFailure if max_level refinements do not suffice).
    """
    if not 0.0 < alpha < math.pi / 6.0:
        raise ConfigInvalid("alpha must lie in (0, pi/6)")
    if d == 2:
        n = math.ceil(2.0 * math.pi / alpha)
        ang = (np.arange(n) + 0.5) * 2.0 * math.pi / n
        axes = np.column_stack([np.cos(ang), np.sin(ang)])
        nbrs = [np.array([(i - 1) % n, i, (i + 1) % n]) for i in range(n)]
        return ConeSystem(2, alpha, axes, nbrs)
    if d != 3:
        raise DimensionUnsupported("cone systems implemented for d in {2, 3}")
    verts, faces = _icosahedron()
    grid = _fibonacci_sphere(coverage_grid)
    for _ in range(max_level + 1):
        cos_gap = (grid @ verts.T).max(axis=1)
        if cos_gap.min() >= math.cos(alpha / 2.0):
            axes = verts
            cosa = math.cos(alpha)
            nbrs = [np.where(axes @ axes[i] >= cosa - 1e-12)[0]
                    for i in range(len(axes))]
            return ConeSystem(3, alpha, axes, nbrs)
        verts, faces = _subdivide(verts, faces)
    raise CoverageFailure(
        f"no covering within {max_level} refinements at alpha={alpha}")


def cone_radii(z, realization, cones, exclude=None):
    """Per-cone distance from z to the nearest hyperplane with direction in
    the cone; infinity for unfilled cones.

    The direction of a hyperplane from z is its unit normal oriented to
    point from z toward the hyperplane. exclude is an optional boolean mask
    of hyperplanes to ignore.
    """
    z = np.asarray(z, dtype=float)
    signed = realization.offsets - realization.normals @ z
    dists = np.abs(signed)
    dirs = realization.normals * np.where(signed >= 0, 1.0, -1.0)[:, None]
    if exclude is not None:
        keep = ~exclude
        dists, dirs = dists[keep], dirs[keep]
    R = np.full(cones.n_cones, np.inf)
    if len(dists) == 0:
        return R
    if cones.dimension == 2:
        np.minimum.at(R, cones.cone_index(dirs), dists)
    else:
        member = cones.membership(dirs)
        masked = np.where(member, dists[:, None], np.inf)
        R = masked.min(axis=0)
    return R


@dataclass(frozen=True)
class StoppingRecord:
    """Cone radii and the derived stopping radii of one cell."""

    cone_radii: np.ndarray
    radius: float
    radius_prime: float
    alpha: float

    @property
    def n_cones(self):
        return len(self.cone_radii)


def stopping_radius(z, r, realization, cones):
    """Stopping record of the cell with inball center z and inradius r.

    The plain radius R is computed over hyperplanes missing the closed
    inball (the carrying tangent hyperplanes are excluded by the distance
    filter); the primed radius R' uses every hyperplane and neighborhood
    minima, with the relaxed angle 3 alpha.
    """
    z = np.asarray(z, dtype=float)
    hit_inball = realization.distances(z) <= r + DIST_TOL
    Ri = cone_radii(z, realization, cones, exclude=hit_inball)
    R = Ri.max() / math.cos(cones.alpha)
    Ri_full = cone_radii(z, realization, cones)
    prime_per_cone = np.array([Ri_full[nb].min() for nb in cones.neighbors])
    R_prime = prime_per_cone.max() / math.cos(3.0 * cones.alpha)
    return StoppingRecord(Ri, float(R), float(R_prime), cones.alpha)


def btR_survival(u, r, gamma, alpha, n_cones):
    """Survival P(R > u) of the stopping radius of a cell with inradius r,
    for equal disjoint sectors (d = 2). Equals 1 for u <= r / cos(alpha)."""
    u = np.asarray(u, dtype=float)
    x = 2.0 * gamma * (u * math.cos(alpha) - r) / n_cones
    surv = 1.0 - (1.0 - np.exp(-np.maximum(x, 0.0))) ** n_cones
    out = np.where(u * math.cos(alpha) <= r, 1.0, surv)
    return float(out) if out.ndim == 0 else out


def btR_empirical(r, gamma, alpha, u_grid, samples=10_000, seed=0):
    """Monte Carlo survival of the stopping radius at each u in u_grid.

    Simulates the hyperplanes outside the inball directly: directions
    uniform, distances uniform on (r, L] with a Poisson count of mean
    2 gamma (L - r), where L is large enough that radii beyond the grid
    cannot be misclassified. Returns (survival estimates, standard errors).
    """
    cones = build_cone_system(2, alpha)
    u_grid = np.asarray(u_grid, dtype=float)
    L = float(u_grid.max()) * math.cos(alpha) + 1e-9
    if L <= r:
        raise ConfigInvalid("u grid must extend past r / cos(alpha)")
    rng = replicate_rng(seed)
    counts = rng.poisson(2.0 * gamma * (L - r), size=samples)
    total = int(counts.sum())
    sample_id = np.repeat(np.arange(samples), counts)
    dirs = uniform_sphere(2, total, rng)
    dists = rng.uniform(r, L, size=total)
    idx = cones.cone_index(dirs)
    flat = np.full(samples * cones.n_cones, np.inf)
    np.minimum.at(flat, sample_id * cones.n_cones + idx, dists)
    R = flat.reshape(samples, cones.n_cones).max(axis=1) / math.cos(alpha)
    surv = (R[:, None] > u_grid[None, :]).mean(axis=0)
    se = np.sqrt(np.maximum(surv * (1.0 - surv), 0.0) / samples)
    return surv, se


def stopping_set_property_test(z, r, realization, cones, q_grid):
    """Stopping-set self-consistency on a grid of compact hitting sets.

    For S the set of hyperplanes hitting B(z, q): containment of the
    stopping set in S must be decidable from the hyperplanes in S, i.e.
    {R(omega) <= q} iff {R(omega restricted to S) <= q}. Also checks
    monotonicity: restricting the realization cannot shrink the radius.
    """
    z = np.asarray(z, dtype=float)
    R_full = stopping_radius(z, r, realization, cones).radius
    for q in np.atleast_1d(q_grid):
        sub = realization.subset(realization.distances(z) <= q)
        R_sub = stopping_radius(z, r, sub, cones).radius
        if (R_full <= q) != (R_sub <= q):
            return False
        if R_sub < R_full - 1e-9:  # fewer hyperplanes, larger radius
            return False
    return True


def cell_determination_gap(record, realization, cones):
    """Largest vertex displacement when the cell is rebuilt from only the
    hyperplanes hitting its stopping ball. Requires the record's body.

    Returns nan when the stopping ball is infinite or sticks out of the
    sampled region (the subset of hitting planes is then not fully
    observed), and inf when the rebuilt polytope disagrees."""
    from .mosaic import fill_body

    if record.body is None:
        fill_body(record, realization)
    rec_r = stopping_radius(record.center, record.inradius, realization, cones)
    if not math.isfinite(rec_r.radius):
        return math.nan
    if not realization.region.contains_ball(
            Ball(record.center, rec_r.radius), tol=1e-9):
        # Planes beyond the sampled region could shrink the cone radii, so
        # the stopping ball is not fully observed; the check cannot run.
        return math.nan
    mask = realization.distances(record.center) <= rec_r.radius + DIST_TOL
    rows = np.array(record.tuple_indices)
    if not mask[rows].all():
        return math.inf
    sub = realization.subset(mask)
    new_rows = np.cumsum(mask)[rows] - 1
    from .geometry import cell_polytope

    tuple_mask = np.zeros(len(sub), dtype=bool)
    tuple_mask[new_rows] = True
    body = cell_polytope((sub.normals[new_rows], sub.offsets[new_rows]),
                         (sub.normals[~tuple_mask], sub.offsets[~tuple_mask]))
    a, b = record.body.vertices, body.vertices
    if len(a) != len(b):
        return math.inf
    d2 = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d2.min(axis=0).max(), d2.min(axis=1).max()))


def removal_bound_check(z1, r1, z2, r2, realization, cones, tol=1e-9):
    """Primed radius after removing pair-hitting hyperplanes vs the plain one.

    Removes every hyperplane hitting both widened inballs
    B(z_i, r_i / (cos(alpha) cos(3 alpha))) and checks that the primed
    radius of the first cell on the thinned realization stays at most
    (cos(alpha) / cos(3 alpha)) times its plain stopping radius. Holds when
    the inradii are small against the center distance.
    """
    cos_fac = math.cos(cones.alpha) * math.cos(3.0 * cones.alpha)
    b1 = Ball(np.asarray(z1, dtype=float), r1 / cos_fac)
    b2 = Ball(np.asarray(z2, dtype=float), r2 / cos_fac)
    hit_both = realization.hits_ball(b1) & realization.hits_ball(b2)
    thinned = realization.subset(~hit_both)
    lhs = stopping_radius(z1, r1, thinned, cones).radius_prime
    rhs = stopping_radius(z1, r1, realization, cones).radius
    rhs *= math.cos(cones.alpha) / math.cos(3.0 * cones.alpha)
    return lhs <= rhs + tol


@dataclass
class DecorrelationTable:
    distances: np.ndarray
    ratios: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    p_joint: np.ndarray
    p_x: np.ndarray
    p_y: np.ndarray
    replicates: int

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["distance", "ratio", "ci_low", "ci_high"])
            for k in range(len(self.distances)):
                w.writerow([f"{self.distances[k]:.17g}",
                            f"{self.ratios[k]:.17g}",
                            f"{self.ci_low[k]:.17g}",
                            f"{self.ci_high[k]:.17g}"])


def decorrelation_experiment(params, u_threshold, distance_grid,
                             replicates=2000, window_radius=2.0,
                             alpha=math.pi / 12.0, radius_multiplier=12.0,
                             r_cap=None, seed_offset=0, bootstrap=1000,
                             guard=None):
    """Correlation ratio of two distant large-cell events.

    The event at location x: some cell with inball center in B(x, w) has
    volume above u_threshold, inradius at most r_cap, and primed stopping
    radius at most radius_multiplier * r / (cos(alpha) cos(3 alpha)).
    Locations sit at +-distance/2 on the first axis, sharing one
    realization per replicate across the distance grid. Returns the table
    of P(A_x and A_y) / (P(A_x) P(A_y)) with bootstrap percentile intervals.

    The radius multiplier widens the bare primed-radius cap, which at
    multiplier 1 has vanishing probability; together with r_cap it keeps
    the event local: it depends on the hyperplanes within distance
    window_radius + radius_multiplier * r_cap / (cos(alpha) cos(3 alpha))
    of the probe. The default guard covers exactly that radius, so the
    event is evaluated on complete information.
    """
    if params.dimension != 2:
        raise DimensionUnsupported("decorrelation experiment is d = 2")
    distance_grid = np.sort(np.asarray(distance_grid, dtype=float))
    if distance_grid[0] <= 2.0 * window_radius:
        raise PreconditionViolated(
            "distances must exceed the window diameter so events are disjoint")
    cones = build_cone_system(2, alpha)
    cos_fac = math.cos(alpha) * math.cos(3.0 * alpha)
    if r_cap is None:
        r_cap = 2.5 / params.gamma
    if guard is None:
        guard = radius_multiplier * r_cap / cos_fac + 1.0
    dmax = float(distance_grid.max())
    region_R = dmax / 2.0 + window_radius + guard
    harvest_R = dmax / 2.0 + window_radius
    n_d = len(distance_grid)
    hit_x = np.zeros((replicates, n_d), dtype=bool)
    hit_y = np.zeros((replicates, n_d), dtype=bool)
    from .mosaic import candidate_cells, fill_body, CellRecord

    # Carrier planes of any event cell pass within r_cap of a center that is
    # itself within window_radius of a probe, so enumerating triples over
    # the planes hitting this ball loses nothing; emptiness is re-checked
    # against the full realization afterwards.
    carrier_R = dmax / 2.0 + window_radius + r_cap + 1e-9
    for rep in range(replicates):
        real = sample(params, Ball(np.zeros(2), region_R),
                      replicate=seed_offset + rep)
        sub_rows = np.where(real.hits_ball(Ball(np.zeros(2), carrier_R)))[0]
        z, r, idx = candidate_cells(real.subset(sub_rows),
                                    Ball(np.zeros(2), harvest_R))
        if len(r) == 0:
            continue
        dists = np.abs(z @ real.normals.T - real.offsets[None, :])
        empty = (dists >= r[:, None] - 1e-12).all(axis=1)
        z, r, idx = z[empty], r[empty], idx[empty]
        if len(r) == 0:
            continue
        idx = sub_rows[idx]
        # Only cells near one of the probe locations can matter.
        near = np.abs(np.abs(z[:, 0:1]) - distance_grid[None, :] / 2.0).min(axis=1)
        cand = np.where((near <= window_radius)
                        & (np.abs(z[:, 1]) <= window_radius))[0]
        passing = []
        for k in cand:
            if r[k] > r_cap:
                continue
            rec = CellRecord(z[k], float(r[k]), tuple(int(i) for i in idx[k]))
            fill_body(rec, real)
            if rec.volume <= u_threshold:
                continue
            sr = stopping_radius(rec.center, rec.inradius, real, cones)
            if sr.radius_prime <= radius_multiplier * rec.inradius / cos_fac:
                passing.append(rec.center)
        if not passing:
            continue
        P = np.array(passing)
        for j, s in enumerate(distance_grid):
            xs = np.array([-s / 2.0, 0.0])
            ys = np.array([s / 2.0, 0.0])
            hit_x[rep, j] = bool(
                (np.linalg.norm(P - xs, axis=1) <= window_radius).any())
            hit_y[rep, j] = bool(
                (np.linalg.norm(P - ys, axis=1) <= window_radius).any())
    p_x = hit_x.mean(axis=0)
    p_y = hit_y.mean(axis=0)
    joint = hit_x & hit_y
    p_joint = joint.mean(axis=0)
    occupancy = np.minimum(hit_x.sum(axis=0), hit_y.sum(axis=0))
    if occupancy.min() < 10:
        raise InsufficientSamples(
            f"rarest event occupied {int(occupancy.min())} replicates; "
            "raise replicates or loosen thresholds")
    ratios = p_joint / np.maximum(p_x * p_y, 1e-300)
    rng = replicate_rng(params.seed, 10_000_001)
    boots = np.empty((bootstrap, n_d))
    for b in range(bootstrap):
        rows = rng.integers(0, replicates, size=replicates)
        bx = hit_x[rows].mean(axis=0)
        by = hit_y[rows].mean(axis=0)
        bj = joint[rows].mean(axis=0)
        boots[b] = bj / np.maximum(bx * by, 1e-300)
    ci_low = np.quantile(boots, 0.025, axis=0)
    ci_high = np.quantile(boots, 0.975, axis=0)
    return DecorrelationTable(distance_grid, ratios, ci_low, ci_high,
                              p_joint, p_x, p_y, replicates)
