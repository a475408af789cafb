"""Cells of a Poisson hyperplane mosaic.

Every cell of the mosaic is carried by exactly d+1 hyperplanes of the
realization: the facets touched by its inball. Extraction therefore
enumerates (d+1)-subsets of hyperplanes, solves for each subset's simplex
inball, and keeps those whose inball is not crossed by any other hyperplane
of the realization (strict tolerance 1e-12).

Cells harvested from a bounded region are only trustworthy if no unobserved
hyperplane could change them. certify_cell offers two soundness rules:

* "cell": the ball around the inball center through the farthest cell vertex
  determines the cell; if that ball lies inside the simulated region, no
  hyperplane outside the observed set can alter the cell.
* "cone": the directional stopping radius (see the stopping module), the
  radius at which every direction cone around the center has been closed off
  by an observed hyperplane.

The module also provides the typical-cell samplers (window harvest and a
direct construction from the polar parametrization), the cell intensity
estimators, the empirical size transform G with an optional smooth tail
extension, the zero cell, and CSV persistence of cell tables.
"""

import csv
import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import lsq_linear

from .errors import (
    CertificationStarvation,
    ConfigInvalid,
    DimensionUnsupported,
    InsufficientSamples,
    OutOfRange,
    WindowNotContained,
)
from .geometry import (
    Ball,
    Box,
    Polytope,
    cell_polytope,
    delta_batch,
    polytope_size,
    positively_spans_batch,
    simplex_inball_batch,
    unit_ball_volume,
)
from .process import Realization, replicate_rng, sample, uniform_sphere

EMPTINESS_TOL = 1e-12

# Largest direction-simplex volume over unit vectors: equilateral triangle
# for d = 2, regular tetrahedron for d = 3. Rejection bounds for the direct
# typical-cell sampler.
DELTA_MAX = {2: 3.0 * math.sqrt(3.0) / 4.0, 3: 8.0 / (9.0 * math.sqrt(3.0))}


def default_guard(gamma, n_cones=24):
    """Default padding between window and simulated region.

    Chosen so that the probability of a cell reaching from the window past
    the guard is negligible at the given intensity; grows only
    logarithmically in the cone count used by directional certification.
    """
    return 3.0 / (2.0 * gamma) * math.log(10.0 * n_cones)


@dataclass(eq=False)
class CellRecord:
    """One extracted cell.

    center and inradius describe the inball; tuple_indices are the positions
    of the d+1 carrying hyperplanes in the realization (None for directly
    sampled cells). body holds the cell polytope when it was built. volume
    and surface are NaN until computed. certified says whether the cell is
    provably unaffected by unobserved hyperplanes; certification_radius is
    the radius of the ball that the applied rule required to be observed.
    """

    center: np.ndarray
    inradius: float
    tuple_indices: tuple | None = None
    body: Polytope | None = None
    volume: float = math.nan
    surface: float = math.nan
    certified: bool = False
    certification_radius: float = math.nan

    def size(self, kind):
        return self.volume if kind == "volume" else self.surface


def _window_circumball(window):
    if isinstance(window, Ball):
        return window
    if isinstance(window, Box):
        return window.circumball()
    raise ConfigInvalid("window must be a Ball or a Box")


def _window_contains(window, pts):
    if isinstance(window, Ball):
        return np.linalg.norm(pts - window.center, axis=1) <= window.radius
    return window.contains_points(pts)


def _combinations_array(n, k):
    if k == 3:
        # Vectorized k=3 enumeration: pairs i<j, then a third index beyond j.
        i, j = np.triu_indices(n, 1)
        counts = n - 1 - j
        keep = counts > 0
        i, j, counts = i[keep], j[keep], counts[keep]
        total = int(counts.sum())
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        offs = np.arange(total) - np.repeat(starts, counts)
        return np.column_stack([np.repeat(i, counts), np.repeat(j, counts),
                                np.repeat(j, counts) + 1 + offs])
    combos = np.fromiter(itertools.chain.from_iterable(
        itertools.combinations(range(n), k)), dtype=np.int64)
    return combos.reshape(-1, k)


def _triple_vertex_areas(U, T):
    """Simplex areas of d = 2 hyperplane triples from pairwise intersections."""
    areas = None
    verts = []
    for i, j in ((0, 1), (0, 2), (1, 2)):
        det = U[:, i, 0] * U[:, j, 1] - U[:, i, 1] * U[:, j, 0]
        det = np.where(np.abs(det) < 1e-300, np.nan, det)
        vx = (T[:, i] * U[:, j, 1] - T[:, j] * U[:, i, 1]) / det
        vy = (U[:, i, 0] * T[:, j] - U[:, j, 0] * T[:, i]) / det
        verts.append(np.column_stack([vx, vy]))
    a, b, c = verts
    areas = 0.5 * np.abs((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                         - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))
    return areas


def candidate_cells(realization, window=None, min_inradius=0.0,
                    min_simplex_size=None, chunk=200_000):
    """Arrays (centers, inradii, tuple index rows) of the realization's cells.

    Enumerates all (d+1)-subsets in chunks, solves their inballs, filters by
    window membership and minimum inradius, then keeps subsets whose inball
    no other hyperplane crosses (strict tolerance 1e-12). min_simplex_size
    additionally requires the carrying simplex's volume to reach the given
    value before the emptiness test; the cell is contained in that simplex,
    so no qualifying cell is lost.
    """
    N = len(realization)
    d = realization.dimension
    m = d + 1
    if N < m:
        return (np.empty((0, d)), np.empty(0), np.empty((0, m), dtype=np.int64))
    combos = _combinations_array(N, m)
    out_z, out_r, out_idx = [], [], []
    for start in range(0, len(combos), chunk):
        idx = combos[start:start + chunk]
        U = realization.normals[idx]
        T = realization.offsets[idx]
        z, r, _, ok = simplex_inball_batch(U, T)
        keep = ok & (r > min_inradius)
        if window is not None:
            inw = np.zeros(len(idx), dtype=bool)
            inw[keep] = _window_contains(window, z[keep])
            keep &= inw
        if min_simplex_size is not None and keep.any():
            if d != 2:
                raise DimensionUnsupported("simplex prefilter implemented for d = 2")
            areas = _triple_vertex_areas(U[keep], T[keep])
            sel = np.where(keep)[0][~(areas >= min_simplex_size)]
            keep[sel] = False
        if not keep.any():
            continue
        zs, rs, rows = z[keep], r[keep], idx[keep]
        # Emptiness of the inball against every hyperplane; the carrying
        # planes are tangent and pass automatically.
        dists = np.abs(zs @ realization.normals.T - realization.offsets)
        empty = np.all(dists >= rs[:, None] - EMPTINESS_TOL, axis=1)
        out_z.append(zs[empty])
        out_r.append(rs[empty])
        out_idx.append(rows[empty])
    if not out_z:
        return (np.empty((0, d)), np.empty(0), np.empty((0, m), dtype=np.int64))
    return (np.concatenate(out_z), np.concatenate(out_r),
            np.concatenate(out_idx))


def extract_cells(realization, window, min_inradius=0.0, with_bodies=False,
                  min_simplex_size=None):
    """All cells with inball center in the window, as CellRecords.

    The window must be contained in the simulated region
    (WindowNotContained otherwise). with_bodies also builds each cell's
    polytope and fills volume and surface.
    """
    wb = _window_circumball(window)
    if not realization.region.contains_ball(wb, tol=1e-9):
        raise WindowNotContained("window exceeds the simulated region")
    z, r, idx = candidate_cells(realization, window, min_inradius,
                                min_simplex_size)
    records = []
    for k in range(len(r)):
        rec = CellRecord(z[k], float(r[k]), tuple(int(i) for i in idx[k]))
        if with_bodies:
            fill_body(rec, realization)
        records.append(rec)
    return records


def fill_body(record, realization):
    """Build the cell polytope of a record and fill volume and surface."""
    rows = np.array(record.tuple_indices, dtype=np.int64)
    mask = np.zeros(len(realization), dtype=bool)
    mask[rows] = True
    body = cell_polytope((realization.normals[rows], realization.offsets[rows]),
                         (realization.normals[~mask], realization.offsets[~mask]))
    record.body = body
    record.volume = polytope_size(body, "volume")
    record.surface = polytope_size(body, "surface_area")
    return record


def certify_cell(record, realization, rule="cell", cones=None):
    """Mark a cell certified if unobserved hyperplanes provably cannot alter it.

    rule "cell": the cell is determined by the hyperplanes meeting the ball
    around its inball center through its farthest vertex; certified when
    that ball lies in the simulated region. rule "cone": the directional
    stopping radius computed from the observed hyperplanes must lie in the
    region (requires a cone system; see the stopping module).
    """
    if rule == "cell":
        if record.body is None:
            fill_body(record, realization)
        rad = record.body.circumradius(record.center)
    elif rule == "cone":
        if cones is None:
            raise ConfigInvalid("cone rule needs a cone system")
        from .stopping import stopping_radius
        rad = stopping_radius(record.center, record.inradius, realization,
                              cones).radius
    else:
        raise ConfigInvalid("rule must be 'cell' or 'cone'")
    record.certification_radius = float(rad)
    record.certified = bool(
        np.isfinite(rad)
        and realization.region.contains_ball(Ball(record.center, rad)))
    return record


@dataclass
class CellHarvest:
    records: list
    replicates: int
    certified_fraction: float
    gamma: float
    dimension: int


def sample_typical_cells(params, count, seed_offset=0, window_radius=None,
                         guard=None, with_bodies=True, rule="cell",
                         require_certified=False, starvation_threshold=0.5,
                         max_replicates=10_000):
    """Harvest typical cells: all cells with center in a window, replicated.

    Windows are balls at the origin; the simulated region adds a guard so
    cells near the window edge are still fully observed. Cells are certified
    under the given rule; if fewer than starvation_threshold of the
    harvested cells certify, CertificationStarvation is raised. By default
    all cells (certified or not) are returned, preserving the distribution;
    require_certified keeps only certified cells and harvests until `count`
    of them are collected.
    """
    if require_certified and not with_bodies:
        raise ConfigInvalid("certification requires cell bodies")
    if guard is None:
        guard = default_guard(params.gamma)
    if window_radius is None:
        window_radius = 12.0 / params.gamma
    records = []
    total = 0
    certified = 0
    reps = 0
    while len(records) < count:
        if reps >= max_replicates:
            raise InsufficientSamples(
                f"{len(records)} cells after {reps} replicates")
        real = sample(params, Ball(np.zeros(params.dimension),
                                   window_radius + guard),
                      replicate=seed_offset + reps)
        reps += 1
        cells = extract_cells(real, Ball(np.zeros(params.dimension),
                                         window_radius),
                              with_bodies=with_bodies)
        for rec in cells:
            if with_bodies:
                certify_cell(rec, real, rule=rule)
                certified += rec.certified
            total += 1
            if require_certified and not rec.certified:
                continue
            records.append(rec)
    frac = certified / total if (total and with_bodies) else 1.0
    if with_bodies and frac < starvation_threshold:
        raise CertificationStarvation(
            f"only {frac:.1%} of harvested cells certified")
    return CellHarvest(records[:count], reps, frac, params.gamma,
                       params.dimension)


def sample_palm_cells(params, count, seed_offset=0, with_bodies=True,
                      env_margin=None, batch=4096):
    """Typical cells built directly from the polar parametrization.

    Inradius Exp(2 gamma); contact directions drawn from the
    simplex-volume-weighted positively-spanning law by rejection; the
    environment is an independent realization conditioned to miss the
    inball, extended outward on demand until the cell is fully determined.
    Every returned cell is certified by construction.
    """
    d = params.dimension
    if d not in DELTA_MAX:
        raise DimensionUnsupported("direct sampler supports d in {2, 3}")
    if env_margin is None:
        env_margin = 6.0 / params.gamma
    rng = replicate_rng(params.seed, seed_offset)
    dirs = _rejection_direction_tuples(d, count, rng, batch)
    radii = rng.exponential(1.0 / (2.0 * params.gamma), size=count)
    records = []
    for k in range(count):
        rec = _build_palm_cell(params, radii[k], dirs[k], rng, env_margin,
                               with_bodies)
        records.append(rec)
    return CellHarvest(records, count, 1.0, params.gamma, d)


def _rejection_direction_tuples(d, count, rng, batch):
    """Direction tuples with density proportional to simplex volume on the
    positively spanning set."""
    out = []
    bound = DELTA_MAX[d]
    need = count
    while need > 0:
        u = uniform_sphere(d, batch * (d + 1), rng).reshape(batch, d + 1, d)
        w = delta_batch(u) * positively_spans_batch(u)
        acc = rng.random(batch) * bound < w
        got = u[acc]
        out.append(got[:need])
        need -= len(got[:need])
    return np.concatenate(out)


def _build_palm_cell(params, r, dirs, rng, env_margin, with_bodies):
    d = params.dimension
    z = np.zeros(d)
    R_env = r + env_margin
    real = sample(params, Ball(z, R_env), rng=rng)
    keep = real.distances(z) > r  # conditioning: the inball is empty
    normals = np.vstack([dirs, real.normals[keep]])
    offsets = np.concatenate([np.full(d + 1, r), real.offsets[keep]])
    while True:
        env = Realization(normals, offsets, Ball(z, R_env), params.gamma)
        rec = CellRecord(z, float(r), tuple(range(d + 1)))
        if not with_bodies:
            return rec
        fill_body(rec, env)
        det_rad = rec.body.circumradius(z)
        if det_rad <= R_env - 1e-9:
            rec.certified = True
            rec.certification_radius = float(det_rad)
            return rec
        # Extend the environment outward; the restriction of the process to
        # hyperplanes at distance in (R_env, R_new] is independent Poisson.
        R_new = max(det_rad + 1e-6, R_env) + env_margin
        n_extra = rng.poisson(2.0 * params.gamma * (R_new - R_env))
        u = uniform_sphere(d, n_extra, rng)
        t = rng.uniform(R_env, R_new, size=n_extra)
        normals = np.vstack([normals, u])
        offsets = np.concatenate([offsets, t])
        R_env = R_new


def gamma_d_estimate(d, gamma, mc_samples=400_000, seed=0):
    """Cell intensity from the direction-tuple representation.

    gamma^(d) = (2 gamma)^d / (d+1) * E[simplex_volume * spanning indicator]
    over d+1 independent uniform directions. Returns (estimate, standard
    error). For d = 2 the exact value is gamma^2 / pi.
    """
    rng = replicate_rng(seed)
    u = uniform_sphere(d, mc_samples * (d + 1), rng).reshape(mc_samples, d + 1, d)
    w = delta_batch(u) * positively_spans_batch(u)
    scale = (2.0 * gamma) ** d / (d + 1)
    return (float(scale * w.mean()),
            float(scale * w.std(ddof=1) / math.sqrt(mc_samples)))


def cell_intensity_empirical(params, window_radius=10.0, replicates=40,
                             seed_offset=0, guard=None):
    """Cell intensity as mean cell count per unit window volume."""
    if guard is None:
        guard = default_guard(params.gamma)
    d = params.dimension
    counts = np.empty(replicates)
    vol = unit_ball_volume(d) * window_radius ** d
    for i in range(replicates):
        real = sample(params, Ball(np.zeros(d), window_radius + guard),
                      replicate=seed_offset + i)
        _, r, _ = candidate_cells(real, Ball(np.zeros(d), window_radius))
        counts[i] = len(r)
    per_vol = counts / vol
    return float(per_vol.mean()), float(per_vol.std(ddof=1) / math.sqrt(replicates))


def zero_cell(realization):
    """The cell containing the origin, as a (record, polytope) pair.

    Intersects, over every hyperplane, the closed halfplane containing the
    origin, then locates the inball. The realization's region must extend
    beyond the cell (checked via the cell's circumradius).
    """
    d = realization.dimension
    if d != 2:
        raise DimensionUnsupported("zero cell implemented for d = 2")
    if len(realization) < d + 1:
        raise InsufficientSamples("too few hyperplanes for a bounded zero cell")
    U, T = realization.normals, realization.offsets
    A = np.where((U @ np.zeros(d) - T)[:, None] <= 0, U, -U)
    b = np.where(U @ np.zeros(d) - T <= 0, T, -T)
    # Clip a box larger than the region.
    R = realization.region.radius + np.linalg.norm(realization.region.center)
    from .geometry import _chebyshev_center, _clip_polygon, box_polytope

    poly = box_polytope(Box(np.full(d, -2 * R), np.full(d, 2 * R))).vertices
    for i in np.argsort(np.abs(T)):
        poly, _ = _clip_polygon(poly, A[i], b[i], -1.0)
        if len(poly) < 3:
            raise InsufficientSamples("zero cell degenerate")
    body = Polytope(poly, A, b)
    center, inr = _chebyshev_center(A, b)
    rec = CellRecord(center, float(inr), None, body,
                     polytope_size(body, "volume"),
                     polytope_size(body, "surface_area"))
    det = body.circumradius(center)
    rec.certification_radius = float(det)
    rec.certified = bool(realization.region.contains_ball(Ball(center, det)))
    return rec


# ---------------------------------------------------------------------------
# Empirical size distribution and the transform G
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class EmpiricalDistribution:
    """Sorted sample values with ECDF helpers."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or len(v) == 0:
            raise InsufficientSamples("empirical distribution needs values")
        self.values = v

    @property
    def n(self):
        return len(self.values)

    def survival(self, x):
        """Fraction of values strictly above x."""
        idx = np.searchsorted(self.values, np.asarray(x, dtype=float), "right")
        return (self.n - idx) / self.n

    def quantile(self, q):
        return float(np.quantile(self.values, q))

    def save_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value"])
            for v in self.values:
                w.writerow([f"{v:.17g}"])

    @classmethod
    def load_csv(cls, path):
        vals = []
        with open(path, newline="") as fh:
            rd = csv.reader(fh)
            next(rd)
            for row in rd:
                vals.append(float(row[0]))
        return cls(np.array(vals))


@dataclass(frozen=True)
class TailModel:
    """Smooth survival extension log S(x) = -(a x^(1/k)) + b log x + c."""

    a: float
    b: float
    c: float
    k: float
    splice_x: float
    splice_log_s: float

    def log_survival(self, x):
        x = np.asarray(x, dtype=float)
        raw = -self.a * x ** (1.0 / self.k) + self.b * np.log(x) + self.c
        raw0 = -self.a * self.splice_x ** (1.0 / self.k) \
            + self.b * math.log(self.splice_x) + self.c
        return raw - raw0 + self.splice_log_s  # continuity at the splice


@dataclass(eq=False)
class GTransform:
    """Empirical transform G = 1 / (1 - F) of a size distribution.

    In the bulk, G(x) = n / #{values > x}, clamped to at most n + 1, which
    corresponds to clamping the ECDF to 1 - 1/(n+1). With a fitted tail
    model attached, values beyond the splice point use the smooth survival
    extension instead, so thresholds far beyond the sample maximum stay
    resolvable. G is nondecreasing with G >= 1 everywhere.
    """

    dist: EmpiricalDistribution
    tail: TailModel | None = None

    @property
    def n(self):
        return self.dist.n

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        s = self.dist.survival(x)
        g = np.where(s > 0, self.n / np.maximum(self.n * s, 1e-300), self.n + 1.0)
        g = np.minimum(g, self.n + 1.0)
        if self.tail is not None:
            use = x > self.tail.splice_x
            if use.any():
                g[use] = np.exp(-self.tail.log_survival(x[use]))
        out = np.maximum(g, 1.0)
        return float(out[0]) if scalar else out

    def inverse(self, y):
        """Smallest x with G(x) >= y; OutOfRange when unresolvable."""
        y = float(y)
        if y < 1.0:
            raise OutOfRange("G is at least 1 everywhere")
        v = self.dist.values
        n = self.n
        if self.tail is None:
            if y > n + 1.0:
                raise OutOfRange(f"G is clamped at {n + 1}")
            k = math.ceil(n * (1.0 - 1.0 / y) - 1e-9)
            k = min(max(k, 0), n - 1)
            return float(v[k])
        splice_g = float(self(self.tail.splice_x))
        if y <= splice_g:
            k = math.ceil(n * (1.0 - 1.0 / y) - 1e-9)
            k = min(max(k, 0), n - 1)
            return float(v[k])
        target = -math.log(y)
        lo = self.tail.splice_x
        hi = lo * 2.0
        for _ in range(200):
            if float(self.tail.log_survival(hi)) < target:
                break
            lo = hi
            hi *= 2.0
        else:
            raise OutOfRange("tail model does not reach the requested level")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self.tail.log_survival(mid)) >= target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)


def g_transform(values, tail="fitted", k=2.0, fit_upper=5e-3, fit_lower=None,
                min_tail_points=100):
    """Build the size transform G from sample values.

    tail None keeps the clamped empirical transform only. tail "fitted"
    attaches the smooth survival extension log S = -a x^(1/k) + b log x + c,
    fitted by weighted least squares on the upper tail of the sample
    (between survival levels fit_upper and fit_lower), spliced continuously
    at the fit_upper quantile. k is the homogeneity degree of the size
    functional (2 for area in the plane).
    """
    dist = values if isinstance(values, EmpiricalDistribution) \
        else EmpiricalDistribution(np.asarray(values, dtype=float))
    if tail is None:
        return GTransform(dist, None)
    n = dist.n
    if fit_lower is None:
        fit_lower = max(20.0 / n, 1e-5)
    k_hi = int(n * (1.0 - fit_upper))
    k_lo = int(n * (1.0 - fit_lower))
    if k_lo - k_hi < min_tail_points:
        raise InsufficientSamples(
            f"only {max(k_lo - k_hi, 0)} tail points between survival "
            f"{fit_upper} and {fit_lower}")
    idx = np.arange(k_hi, k_lo)
    x = dist.values[idx]
    s_emp = (n - idx - 0.5) / n  # midpoint continuity correction
    logS = np.log(s_emp)
    X = np.column_stack([-x ** (1.0 / k), np.log(x), np.ones_like(x)])
    wts = np.sqrt(n * s_emp)  # inverse of the approximate log-ECDF stddev
    # Sign-constrained least squares: a >= 0, b <= 0 force a decreasing
    # extension even when the tail is too short to identify both terms.
    fit = lsq_linear(X * wts[:, None], logS * wts,
                     bounds=([0.0, -np.inf, -np.inf], [np.inf, 0.0, np.inf]))
    a, b, c = (float(fit.x[0]), float(fit.x[1]), float(fit.x[2]))
    splice_x = float(dist.values[k_hi])
    splice_log_s = math.log((n - k_hi) / n)
    tail_model = TailModel(a, b, c, k, splice_x, splice_log_s)
    # The extension must be strictly decreasing past the splice.
    grid = splice_x * np.exp(np.linspace(0.0, 6.0, 200))
    ls = tail_model.log_survival(grid)
    if np.any(np.diff(ls) >= 0):
        raise InsufficientSamples("tail fit is not monotone; more data needed")
    return GTransform(dist, tail_model)


def g_inverse(G, y):
    """Smallest x with G(x) >= y."""
    return G.inverse(y)


# ---------------------------------------------------------------------------
# Cell table persistence
# ---------------------------------------------------------------------------

def dump_cells_csv(records, path, meta=None):
    """Write cells as CSV: z_1..z_d, r, volume, surface, certified."""
    if not records:
        raise InsufficientSamples("no records to write")
    d = len(records[0].center)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"z_{i + 1}" for i in range(d)]
                   + ["r", "volume", "surface", "certified"])
        for rec in records:
            w.writerow([f"{v:.17g}" for v in rec.center]
                       + [f"{rec.inradius:.17g}", f"{rec.volume:.17g}",
                          f"{rec.surface:.17g}", int(rec.certified)])
    if meta is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(meta, fh, indent=2)


def load_cells_csv(path):
    """Read a cell table written by dump_cells_csv."""
    records = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        d = sum(1 for h in header if h.startswith("z_"))
        for row in rd:
            rec = CellRecord(np.array([float(v) for v in row[:d]]),
                             float(row[d]))
            rec.volume = float(row[d + 1])
            rec.surface = float(row[d + 2])
            rec.certified = bool(int(row[d + 3]))
            records.append(rec)
    return records
