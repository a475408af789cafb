"""Extremal marked point processes of large mosaic cells.

Scaling space by n^{-1/d} and attaching to each cell a largeness mark gives
point processes that converge to Poisson processes on W x (c, infinity):

* zeta_n marks each cell with 2 gamma r - log n, where r is the inradius;
  the limit has intensity gamma^(d) dz e^{-y} dy, so marks above c arrive
  with mean gamma^(d) lambda(W) e^{-c} and mark - c is asymptotically
  Exp(1).
* xi_n marks each cell with n^{-1} G(Sigma(cell)) for a general size
  functional Sigma, where G = 1/(1 - F) is the transform of the typical
  cell's size law; the limit intensity is gamma^(d) dz y^{-2} dy, with
  survival of a mark beyond y proportional to 1/y (Pareto profile).

The module builds both processes from simulated realizations (certified
cells only, with the uncertified fraction reported), compares replicate
counts with the Poisson law (total-variation proxy and a multibin test),
and runs the shape experiments: the conditional roundness of large cells
(Kendall-type monotonicity) and the slow asymptote
log n / G^{-1}(n)^{1/k} -> tau gamma.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    ConfigInvalid,
    DimensionUnsupported,
    InsufficientSamples,
    OutOfRange,
    PreconditionViolated,
)
from .geometry import Box, Ball, SizeFunctional, deviation_theta, phi_mean_width
from .mosaic import (
    CellRecord,
    GTransform,
    candidate_cells,
    certify_cell,
    default_guard,
    fill_body,
    sample_palm_cells,
)
from .process import replicate_rng, sample


@dataclass(frozen=True)
class MarkedPoint:
    location: np.ndarray
    mark: float


@dataclass(eq=False)
class MarkedProcess:
    """One replicate of a scaled, thresholded cell process."""

    points: list
    n: float
    kind: str
    window: Box
    mark_floor: float
    certified_fraction: float = 1.0

    def __len__(self):
        return len(self.points)

    def locations(self):
        if not self.points:
            return np.empty((0, self.window.dimension))
        return np.array([p.location for p in self.points])

    def marks(self):
        return np.array([p.mark for p in self.points])


@dataclass(frozen=True)
class CountLaw:
    """Poisson count law for a window-threshold rectangle."""

    lam: float

    def pmf(self, k):
        return stats.poisson.pmf(np.asarray(k), self.lam)


def zeta_expected_count(gamma_d, window, c):
    return gamma_d * window.volume * math.exp(-c)


def xi_expected_count(gamma_d, window, c):
    return gamma_d * window.volume / c


def _scaled_window_region(window, n, d, guard):
    s = n ** (1.0 / d)
    scaled = window.scaled(s)
    wb = scaled.circumball()
    region = Ball(wb.center, wb.radius + guard)
    return scaled, region


def _certified_records(real, z, r, idx):
    recs = []
    certified = 0
    for k in range(len(r)):
        rec = CellRecord(z[k], float(r[k]), tuple(int(i) for i in idx[k]))
        fill_body(rec, real)
        certify_cell(rec, real)
        certified += rec.certified
        recs.append(rec)
    return recs, certified


def build_zeta_n(params, n, window, c, replicate=None, guard=None):
    """One replicate of the inradius extremal process.

    Simulates the mosaic on a ball covering n^{1/d} * window plus a guard,
    keeps certified cells with inball center in the scaled window and
    2 gamma r - log n > c (equivalently inradius above
    (c + log n) / (2 gamma), exactly), and returns scaled locations with
    their marks. Cells failing certification are dropped and reported via
    certified_fraction.
    """
    v = (c + math.log(n)) / (2.0 * params.gamma)
    if v <= 0:
        raise PreconditionViolated("threshold radius must be positive")
    d = params.dimension
    if guard is None:
        guard = default_guard(params.gamma) + v
    scaled, region = _scaled_window_region(window, n, d, guard)
    real = sample(params, region, replicate=replicate)
    z, r, idx = candidate_cells(real, scaled, min_inradius=v)
    recs, certified = _certified_records(real, z, r, idx)
    pts = []
    for rec in recs:
        if not rec.certified:
            continue
        mark = 2.0 * params.gamma * rec.inradius - math.log(n)
        pts.append(MarkedPoint(rec.center * n ** (-1.0 / d), float(mark)))
    frac = certified / len(recs) if recs else 1.0
    return MarkedProcess(pts, n, "zeta", window, c, frac)


def build_xi_n(params, n, window, c, size, G, replicate=None, guard=None,
               enforce_fit_size=True):
    """One replicate of the general-size extremal process.

    Marks are n^{-1} G(Sigma(cell)). Candidate tuples are prefiltered by
    the volume of their carrying simplex (the cell is contained in it), so
    exact polytopes are built only for potential threshold crossers. Only
    certified cells are kept.
    """
    if enforce_fit_size and G.n < 100_000:
        raise InsufficientSamples(
            f"size transform fitted on {G.n} cells; at least 100000 required")
    if size.kind != "volume" or params.dimension != 2:
        raise DimensionUnsupported(
            "general-size extremal process implemented for planar volume")
    t_star = G.inverse(n * c)  # raises OutOfRange when unresolvable
    d = params.dimension
    if guard is None:
        guard = default_guard(params.gamma) \
            + 2.0 * math.sqrt(t_star / math.pi)
    scaled, region = _scaled_window_region(window, n, d, guard)
    real = sample(params, region, replicate=replicate)
    z, r, idx = candidate_cells(real, scaled, min_simplex_size=t_star)
    recs, certified = _certified_records(real, z, r, idx)
    pts = []
    for rec in recs:
        if not rec.certified:
            continue
        mark = G(rec.volume) / n
        if mark > c:
            pts.append(MarkedPoint(rec.center * n ** (-1.0 / d), float(mark)))
    frac = certified / len(recs) if recs else 1.0
    return MarkedProcess(pts, n, "xi", window, c, frac)


@dataclass
class ProcessEnsemble:
    """Replicated marked processes with pooled summaries."""

    processes: list
    counts: np.ndarray
    certified_fraction: float

    def pooled_marks(self):
        out = [p.marks() for p in self.processes if len(p)]
        return np.concatenate(out) if out else np.empty(0)

    def pooled_locations(self):
        out = [p.locations() for p in self.processes if len(p)]
        return np.concatenate(out) if out \
            else np.empty((0, self.processes[0].window.dimension))


def run_ensemble(builder, replicates, seed_offset=0):
    """Run a per-replicate builder(replicate_index) into an ensemble."""
    procs = []
    fracs = []
    for i in range(replicates):
        p = builder(seed_offset + i)
        procs.append(p)
        fracs.append(p.certified_fraction)
    counts = np.array([len(p) for p in procs])
    return ProcessEnsemble(procs, counts, float(np.mean(fracs)))


# ---------------------------------------------------------------------------
# Poisson comparison
# ---------------------------------------------------------------------------

def _tv_empirical(counts, lam, kmax):
    pmf_hat = np.bincount(counts, minlength=kmax + 1)[:kmax + 1] / len(counts)
    q = stats.poisson.pmf(np.arange(kmax + 1), lam)
    tail = max(1.0 - q.sum(), 0.0)  # law mass beyond kmax, all unmatched
    return 0.5 * (np.abs(pmf_hat - q).sum() + tail)


@dataclass(frozen=True)
class TVReport:
    tv: float
    tv_debiased: float
    ci_low: float
    ci_high: float
    null_bias: float
    lam: float
    replicates: int


def count_tv(counts, law, bootstrap=1000, null_sims=400, seed=0):
    """Total variation between replicate counts and a Poisson law.

    Returns the raw plug-in distance, a debiased version (the mean TV of
    same-size samples drawn from the law itself is subtracted), and a
    bootstrap interval. The interval takes the envelope of the percentile
    construction around the debiased value and the reverse-percentile
    (basic) construction: the former is calibrated when the laws coincide,
    the latter when they are far apart, and the envelope stays near nominal
    coverage in both regimes. The statistic is a lower-bound proxy for the
    process-level distance: only total counts enter.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if len(counts) < 200:
        raise InsufficientSamples("need at least 200 replicate counts")
    lam = law.lam
    kmax = int(max(counts.max(), lam + 10.0 * math.sqrt(lam + 1.0)) + 1)
    tv = _tv_empirical(counts, lam, kmax)
    rng = replicate_rng(seed)
    null = np.array([
        _tv_empirical(rng.poisson(lam, size=len(counts)), lam, kmax)
        for _ in range(null_sims)])
    bias = float(null.mean())
    boots = np.array([
        _tv_empirical(rng.choice(counts, size=len(counts)), lam, kmax)
        for _ in range(bootstrap)])
    lo = min(float(np.quantile(boots - bias, 0.025)),
             2.0 * tv - float(np.quantile(boots, 0.975)))
    hi = max(float(np.quantile(boots - bias, 0.975)),
             2.0 * tv - float(np.quantile(boots, 0.025)))
    return TVReport(float(tv), float(tv - bias), lo, hi,
                    bias, lam, len(counts))


@dataclass
class MultibinReport:
    bin_labels: list
    expected: np.ndarray
    means: np.ndarray
    ses: np.ndarray
    mean_z: np.ndarray
    cov_z: np.ndarray  # upper-triangle pairwise covariance z-scores
    max_abs_mean_z: float
    max_abs_cov_z: float


def multibin_poisson_test(ensemble, gamma_d, space_splits=2, mark_edges=None):
    """Bin counts over (window cell) x (mark interval) against the limit law.

    Expected bin means follow the product intensity: spatial volume times
    e^{-y1} - e^{-y2} for zeta marks, 1/y1 - 1/y2 for xi marks. Cross-bin
    covariances of a Poisson process vanish; their z-scores are reported.
    """
    procs = ensemble.processes
    if len(procs) < 500:
        raise InsufficientSamples("need at least 500 replicates")
    proto = procs[0]
    window, kind, c = proto.window, proto.kind, proto.mark_floor
    d = window.dimension
    if mark_edges is None:
        mark_edges = [c, c + 1.0, math.inf] if kind == "zeta" \
            else [c, 2.0 * c, math.inf]
    mark_edges = list(mark_edges)
    lo, hi = window.lo, window.hi
    edges = [np.linspace(lo[k], hi[k], space_splits + 1) for k in range(d)]
    n_space = space_splits ** d
    n_mark = len(mark_edges) - 1
    n_bins = n_space * n_mark
    table = np.zeros((len(procs), n_bins), dtype=np.int64)
    for i, p in enumerate(procs):
        if not len(p):
            continue
        locs, marks = p.locations(), p.marks()
        sidx = np.zeros(len(marks), dtype=np.int64)
        mult = 1
        for k in range(d):
            col = np.clip(np.searchsorted(edges[k], locs[:, k], "right") - 1,
                          0, space_splits - 1)
            sidx += col * mult
            mult *= space_splits
        midx = np.clip(np.searchsorted(mark_edges, marks, "right") - 1,
                       0, n_mark - 1)
        np.add.at(table, (i, sidx * n_mark + midx), 1)
    vol_cell = window.volume / n_space
    labels, expected = [], []
    for s in range(n_space):
        for m in range(n_mark):
            y1, y2 = mark_edges[m], mark_edges[m + 1]
            if kind == "zeta":
                profile = math.exp(-y1) - (math.exp(-y2)
                                           if math.isfinite(y2) else 0.0)
            else:
                profile = 1.0 / y1 - (1.0 / y2 if math.isfinite(y2) else 0.0)
            expected.append(gamma_d * vol_cell * profile)
            labels.append(f"space{s}:mark({y1:g},{y2:g}]")
    expected = np.array(expected)
    if expected.min() * len(procs) < 1.0:
        raise InsufficientSamples("a bin has expected count below 1")
    means = table.mean(axis=0)
    ses = table.std(axis=0, ddof=1) / math.sqrt(len(procs))
    mean_z = (means - expected) / np.maximum(ses, 1e-300)
    R = len(procs)
    cov_z = []
    sds = table.std(axis=0, ddof=1)
    centered = table - means
    for a in range(n_bins):
        for b in range(a + 1, n_bins):
            cov = float(centered[:, a] @ centered[:, b]) / (R - 1)
            se = sds[a] * sds[b] / math.sqrt(R - 1)
            cov_z.append(cov / max(se, 1e-300))
    cov_z = np.array(cov_z)
    return MultibinReport(labels, expected, means, ses, mean_z, cov_z,
                          float(np.abs(mean_z).max()),
                          float(np.abs(cov_z).max()) if len(cov_z) else 0.0)


# ---------------------------------------------------------------------------
# Shape experiments
# ---------------------------------------------------------------------------

@dataclass
class KendallReport:
    thresholds: np.ndarray
    quantile_levels: np.ndarray
    mean_theta: np.ndarray
    se_theta: np.ndarray
    n_conditional: np.ndarray
    p_theta_above: np.ndarray  # P(theta >= 0.3 | Sigma > u)
    strictly_decreasing_3sigma: bool


def kendall_experiment(params, u_quantiles=(0.5, 0.8, 0.95), samples=20_000,
                       seed_offset=0, theta_ref=0.3, restarts=3):
    """Conditional roundness of large typical cells.

    Samples typical cells directly, computes each cell's volume and its
    deviation from a ball (0 for balls), and reports the conditional mean
    deviation given volume above each quantile threshold. Large cells
    concentrate near balls, so the means must decrease.
    """
    harvest = sample_palm_cells(params, samples, seed_offset=seed_offset)
    vols = np.array([rec.volume for rec in harvest.records])
    qs = np.quantile(vols, u_quantiles)
    min_u = qs.min()
    # Shape optimization only where some threshold can select the cell.
    idx = np.where(vols > min_u)[0]
    thetas = np.full(len(vols), np.nan)
    for k in idx:
        thetas[k] = deviation_theta(harvest.records[k].body,
                                    restarts=restarts, seed=k)
    means, ses, ns, p_above = [], [], [], []
    for u in qs:
        sel = vols > u
        th = thetas[sel]
        if len(th) < 30:
            raise InsufficientSamples(
                f"only {len(th)} cells above threshold {u:g}")
        means.append(th.mean())
        ses.append(th.std(ddof=1) / math.sqrt(len(th)))
        ns.append(int(sel.sum()))
        p_above.append(float((th >= theta_ref).mean()))
    means, ses = np.array(means), np.array(ses)
    dec = True
    for k in range(len(qs) - 1):
        gap = means[k] - means[k + 1]
        if gap <= 3.0 * math.hypot(ses[k], ses[k + 1]):
            dec = False
    return KendallReport(qs, np.array(u_quantiles), means, ses,
                         np.array(ns), np.array(p_above), dec)


@dataclass
class IsoperimetricReport:
    checked: int
    violations: int
    worst_margin: float
    tau: float


def isoperimetric_check(records, size, tol=1e-9):
    """Mean width against tau * size^(1/k) on concrete cells.

    The sharp inequality mean_width(K) >= tau * Sigma(K)^{1/k} holds for
    every convex body with equality for balls; any violation beyond
    numerical tolerance is counted.
    """
    tau, k = size.tau, size.degree
    worst = math.inf
    violations = 0
    for rec in records:
        if rec.body is None:
            raise ConfigInvalid("records need bodies for the width check")
        phi = phi_mean_width(rec.body)
        margin = phi - tau * rec.size(size.kind) ** (1.0 / k)
        worst = min(worst, margin)
        if margin < -tol * max(phi, 1.0):
            violations += 1
    return IsoperimetricReport(len(records), violations, float(worst), tau)


@dataclass
class AsymptoteReport:
    n_grid: np.ndarray
    ratios: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    target: float
    final_relative_error: float
    monotone_within_ci: bool


def g_inverse_asymptote_check(G, gamma, size=None, n_grid=None,
                              refits=30, seed=0):
    """Trend of log n / G^{-1}(n)^{1/k} toward tau * gamma.

    The transform must carry a fitted tail so thresholds beyond the sample
    range stay resolvable (OutOfRange otherwise). Confidence bands come
    from refitting the tail on bootstrap resamples of the size corpus.
    """
    if size is None:
        size = SizeFunctional.volume(2)
    k = size.degree
    target = size.tau * gamma
    if n_grid is None:
        n_grid = np.exp(np.linspace(4.0, 18.0, 8))
    n_grid = np.asarray(n_grid, dtype=float)
    if G.tail is None and n_grid.max() > G.n:
        raise OutOfRange("transform has no tail model; grid exceeds the sample")

    def ratios_of(g):
        return np.array([math.log(n) / g.inverse(n) ** (1.0 / k)
                         for n in n_grid])

    ratios = ratios_of(G)
    from .mosaic import g_transform

    rng = replicate_rng(seed)
    values = G.dist.values
    boot = []
    for b in range(2 * refits):
        if len(boot) >= refits:
            break
        res = rng.choice(values, size=len(values), replace=True)
        try:
            gb = g_transform(res, tail="fitted", k=k)
            boot.append(ratios_of(gb))
        except (InsufficientSamples, OutOfRange):
            continue  # a resample may fail the monotone-tail screen
    if len(boot) < max(refits // 2, 5):
        raise InsufficientSamples("too few successful tail refits")
    boot = np.array(boot)
    ci_low = np.quantile(boot, 0.025, axis=0)
    ci_high = np.quantile(boot, 0.975, axis=0)
    final_err = abs(ratios[-1] - target) / target
    diffs = np.diff(ratios)
    sign = 1.0 if diffs.sum() >= 0 else -1.0
    widths = (ci_high - ci_low)[1:]
    monotone = bool(np.all(sign * diffs >= -widths))
    return AsymptoteReport(n_grid, ratios, ci_low, ci_high, target,
                           float(final_err), monotone)


def build_size_corpus(params, count, seed_offset=0, batch=None):
    """Volumes of `count` directly sampled typical cells (the fit corpus
    for the size transform)."""
    harvest = sample_palm_cells(params, count, seed_offset=seed_offset)
    return np.array([rec.volume for rec in harvest.records])
