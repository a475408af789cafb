"""Integral geometry of hyperplanes hitting balls, and Monte Carlo checks.

Scalar quadratures
------------------
* directional_hit_integral: normalized measure of directions u such that the
  hyperplane at distance r from z with normal u meets B(w, s),
* pair_hit_measure: invariant measure (at unit intensity) of hyperplanes
  meeting two disjoint balls, with the d = 3 closed form 2 r s / |w - z|,
* L_of_a and the fixed point delta_star of delta = 1 - L(1/(2+delta)),
  solved by bisection to residual <= 1e-12.

Monte Carlo identities
----------------------
* bp_verify: two-sided check of the polar simplex reparametrization of
  integrals over (d+1)-tuples of hyperplanes (both sides estimate the same
  reference functional; they must agree within combined error),
* decay_check_le1: exponential-decay rates of two pair-integral families
  (max-inradius above R; inradii in (aR, R] at center distance <= D),
* e_term_estimate: the three coupling error terms of the extreme-value
  approximation, estimated by importance sampling (d = 2).

All direction integrals use the substitution x = sin(theta) to remove the
endpoint singularity of (1-x^2)^((d-3)/2) at d = 2.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (
    ConfigInvalid,
    InsufficientSamples,
    NoRoot,
    PreconditionViolated,
    QuadratureNotConverged,
)
from .geometry import (
    cofactor_batch,
    delta_batch,
    positively_spans_batch,
    simplex_inball_batch,
    unit_sphere_area,
)
from .process import replicate_rng, uniform_sphere

# Mean of simplex_volume * positive-spanning indicator over independent
# uniform direction triples on the circle. Exact value 3/(4 pi); it equals
# the d = 2 cell intensity gamma^(2) = gamma^2/pi through the tuple-integral
# representation with prefactor (2 gamma)^d / (d+1).
DELTA_SPAN_MEAN_2D = 3.0 / (4.0 * math.pi)


def _sphere_ratio(d):
    """omega_{d-1} / omega_d, the constant of all direction integrals."""
    return unit_sphere_area(d - 1) / unit_sphere_area(d)


def cap_integral(lo, hi, d):
    """integral of (1-x^2)^((d-3)/2) dx over [lo, hi] clipped to [-1, 1]."""
    lo = max(float(lo), -1.0)
    hi = min(float(hi), 1.0)
    if lo >= hi:
        return 0.0
    if d == 3:
        return hi - lo
    if d == 2:
        return math.asin(hi) - math.asin(lo)
    val, err = integrate.quad(lambda th: math.cos(th) ** (d - 2),
                              math.asin(lo), math.asin(hi),
                              epsabs=1e-14, epsrel=1e-13, limit=200)
    if err > 1e-12 * max(abs(val), 1.0):
        raise QuadratureNotConverged("direction quadrature error too large")
    return val


def directional_total_mass(d):
    """Normalized direction measure over the full angle range; equals 1.

    Evaluates (omega_{d-1}/omega_d) * cap_integral(-1, 1, d). Serves as the
    closed-loop check that the direction-integral normalization is exact.
    """
    return _sphere_ratio(d) * cap_integral(-1.0, 1.0, d)


def directional_hit_integral(z, r, w, s):
    """Measure of unit normals whose hyperplane at distance r from z hits B(w, s).

    The hyperplane is {x : <u, x> = <z, u> + r}. Returns the normalized
    spherical measure of the set of u for which it meets the closed ball
    B(w, s). Exact formula: (omega_{d-1}/omega_d) times the cap integral
    between (r - s)/|w - z| and (r + s)/|w - z|, clipped to [-1, 1].
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    d = z.shape[0]
    D = float(np.linalg.norm(w - z))
    if r < 0 or s < 0:
        raise ConfigInvalid("radii must be nonnegative")
    if D == 0.0:
        return 1.0 if r <= s else 0.0
    return _sphere_ratio(d) * cap_integral((r - s) / D, (r + s) / D, d)


def pair_hit_measure(z, r, w, s):
    """Invariant measure of hyperplanes meeting both B(z, r) and B(w, s).

    Requires disjoint balls: r + s <= |w - z| (PreconditionViolated
    otherwise). Computed as 2 * integral over t in [0, s] of the directional
    hit integral of a hyperplane at distance t from w against B(z, r).
    """
    z = np.asarray(z, dtype=float)
    w = np.asarray(w, dtype=float)
    D = float(np.linalg.norm(w - z))
    if r + s > D:
        raise PreconditionViolated(f"balls must be disjoint: {r} + {s} > {D}")
    return _pair_hit_any(r, s, D, z.shape[0])


def pair_hit_closed_form_d3(z, r, w, s):
    """Closed form 2 r s / |w - z| of the d = 3 pair-hitting measure."""
    D = float(np.linalg.norm(np.asarray(w, dtype=float) - np.asarray(z, dtype=float)))
    if r + s > D:
        raise PreconditionViolated("balls must be disjoint")
    return 2.0 * r * s / D

def _pair_hit_any(r, s, D, d):
    """Pair-hitting measure valid for overlapping balls as well (scalar)."""
    if D == 0.0:
        return 2.0 * min(r, s)
    r, s = max(r, s), min(r, s)
    ratio = _sphere_ratio(d)

    def w_of_t(t):
        return ratio * cap_integral((t - r) / D, (t + r) / D, d)

    breaks = sorted({0.0, min(abs(D - r), s), min(D + r, s), s})
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        val, err = integrate.quad(w_of_t, a, b, epsabs=1e-13, epsrel=1e-12,
                                  limit=200)
        if err > 1e-9 * max(abs(val), 1.0):
            raise QuadratureNotConverged("pair-hit quadrature error too large")
        total += val
    return 2.0 * total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def pair_hit_batch(r1, r2, D, d):
    """Vectorized pair-hitting measure, overlap allowed (d = 2 or 3).

    Piecewise Gauss-Legendre in t with exact inner integrals; the pieces are
    split at the clipping breakpoints so each integrand piece is smooth.
    """
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    D = np.asarray(D, dtype=float)
    r = np.maximum(r1, r2)
    s = np.minimum(r1, r2)
    Dsafe = np.where(D > 0, D, 1.0)
    ratio = _sphere_ratio(d)

    c1 = np.clip(np.abs(D - r), 0.0, s)
    c2 = np.clip(D + r, 0.0, s)
    total = np.zeros(np.broadcast(r1, r2, D).shape)
    for a, b in ((np.zeros_like(s), c1), (c1, c2), (c2, s)):
        half = 0.5 * (b - a)
        mid = 0.5 * (a + b)
        t = mid[..., None] + half[..., None] * _GL_NODES
        lo = np.clip((t - r[..., None]) / Dsafe[..., None], -1.0, 1.0)
        hi = np.clip((t + r[..., None]) / Dsafe[..., None], -1.0, 1.0)
        if d == 2:
            inner = np.arcsin(hi) - np.arcsin(lo)
        elif d == 3:
            inner = hi - lo
        else:
            raise ConfigInvalid("pair_hit_batch supports d in {2, 3}")
        total += ratio * half * (inner * _GL_WEIGHTS).sum(axis=-1)
    out = 2.0 * total
    return np.where(D > 0, out, 2.0 * s)


def union_hit_batch(r1, r2, D, d):
    """Invariant measure of hyperplanes meeting at least one of two balls."""
    return 2.0 * np.asarray(r1) + 2.0 * np.asarray(r2) - pair_hit_batch(r1, r2, D, d)


def L_of_a(a, d):
    """The directional overlap bound L(a) for a in (0, 1].

    L(a) = (omega_{d-1}/omega_d) * cap integral over [-1/(1+a), 1]. Strictly
    decreasing in a with L(0+) = 1; L(1) = 2/3 for d = 2 and 3/4 for d = 3.
    """
    if not 0.0 < a <= 1.0:
        raise ConfigInvalid("a must lie in (0, 1]")
    return _sphere_ratio(d) * cap_integral(-1.0 / (1.0 + a), 1.0, d)


@dataclass(frozen=True)
class FixedPointResult:
    dimension: int
    value: float
    residual: float
    iterations: int


def delta_star(d, residual_tol=1e-12, max_iter=200):
    """Fixed point of delta = 1 - L(1/(2+delta)) on (0, 1), by bisection.

    The fixed point is the decay-rate exponent separating the two regimes of
    the pair-decay integrals. Equivalent form used here:
    rhs(delta) = (omega_{d-1}/omega_d) * cap integral over
    [(2+delta)/(3+delta), 1], strictly decreasing, so rhs(delta) - delta has
    exactly one root. Residual of the returned value is <= residual_tol.

    For d = 3 the root is (sqrt(11) - 3)/2 in closed form; for every d the
    root lies strictly between 0 and 1/d.
    """
    ratio = _sphere_ratio(d)

    def f(x):
        return ratio * cap_integral((2.0 + x) / (3.0 + x), 1.0, d) - x

    lo, hi = 1e-12, 1.0 - 1e-12
    flo, fhi = f(lo), f(hi)
    if not (flo > 0 > fhi):
        raise NoRoot(f"no sign change on bracket for d={d}")
    it = 0
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if abs(fm) <= residual_tol * 0.5 or (hi - lo) < 1e-16:
            return FixedPointResult(d, mid, abs(fm), it)
        if fm > 0:
            lo = mid
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    res = abs(f(mid))
    if res > residual_tol:
        raise QuadratureNotConverged(
            f"bisection residual {res:.2e} above {residual_tol}")
    return FixedPointResult(d, mid, res, it)


# ---------------------------------------------------------------------------
# Two-sided reparametrization check
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BPCheck:
    dimension: int
    ell: int
    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    reference: float
    samples: int

    @property
    def z_score(self):
        return abs(self.lhs - self.rhs) / math.hypot(self.lhs_se, self.rhs_se)


def _sample_tuple_planes(n_tuples, m, center, R0, d, rng):
    """iid hyperplanes from the invariant measure restricted to hitting B."""
    u = uniform_sphere(d, n_tuples * m, rng).reshape(n_tuples, m, d)
    tau = rng.uniform(0.0, R0, size=(n_tuples, m))
    t = np.einsum("nmd,d->nm", u, center) + tau
    return u, t


def bp_verify(d, ell, samples=10 ** 6, seed=0, r_max=1.0, batch=200_000):
    """Two-sided Monte Carlo check of the tuple-integral reparametrization.

    Both sides estimate the integral, over (d+1)-tuples of hyperplanes under
    the product invariant measure, of the indicator that the tuple's inball
    has center in [0, 1]^d and radius at most r_max.

    Left side: tuples of independent hyperplanes hitting a covering ball,
    with the inball computed per tuple. Right side: the polar
    reparametrization at level ell: ell hyperplanes carry the flat, the
    remaining directions and the radius are drawn directly, and the center
    is integrated over the flat; the density is the direction-simplex volume
    over the parallelepiped volume of the first ell directions, restricted
    to positively spanning tuples, with prefactor 2^(d+1) d!.

    For d = 2 the exact value is 16 * 3/(4 pi) = 12/pi, independent of ell.

    Returns a BPCheck; raises InsufficientSamples below 1000 samples.
    """
    if samples < 1000:
        raise InsufficientSamples("bp_verify needs at least 1000 samples")
    if ell < 1 or ell > d:
        raise ConfigInvalid("ell must be in 1..d")
    rng = replicate_rng(seed)
    m = d + 1
    box_lo = np.zeros(d)
    box_hi = np.ones(d)
    center = 0.5 * np.ones(d)
    Rbox = 0.5 * math.sqrt(d)
    R0 = Rbox + r_max
    pref = 2.0 ** (d + 1) * math.factorial(d)

    # Left side: direct tuples.
    lhs_vals = np.empty(samples)
    done = 0
    while done < samples:
        nb = min(batch, samples - done)
        u, t = _sample_tuple_planes(nb, m, center, R0, d, rng)
        z, r, _, ok = simplex_inball_batch(u, t)
        good = ok & (r <= r_max)
        inside = np.zeros(nb, dtype=bool)
        inside[good] = np.all((z[good] >= box_lo) & (z[good] <= box_hi), axis=1)
        lhs_vals[done:done + nb] = np.where(good & inside, (2.0 * R0) ** m, 0.0)
        done += nb

    # Right side: flat parametrization.
    rhs_vals = np.empty(samples)
    done = 0
    while done < samples:
        nb = min(batch, samples - done)
        u, t = _sample_tuple_planes(nb, ell, center, R0, d, rng)
        signs = rng.choice([-1.0, 1.0], size=(nb, ell))
        su = signs[:, :, None] * u
        r = rng.uniform(0.0, r_max, size=nb)
        ufree = uniform_sphere(d, nb * (m - ell), rng).reshape(nb, m - ell, d)
        dirs = np.concatenate([su, ufree], axis=1)

        w = np.full(nb, (2.0 * R0) ** ell * r_max * pref)
        if ell == d:
            # The flat is a point; counting measure, weight 1.
            shifted = t - r[:, None] * signs
            dets = np.linalg.det(u)
            solvable = np.abs(dets) > 1e-12
            uu = u.copy()
            uu[~solvable] = np.eye(d)
            z = np.linalg.solve(uu, shifted[:, :, None])[:, :, 0]
            w[~solvable] = 0.0
            nabla = np.abs(dets)
        elif ell == 1:
            # Single hyperplane shifted toward -s*u by r: the flat is
            # {x : <u_1, x> = t_1 - r * s_1}, a line (d = 2) or plane (d = 3).
            # Parametrize by an orthonormal null basis and integrate the
            # center over a patch around the box center's projection; the
            # patch halfwidth Rbox covers the flat's box intersection.
            tau = t[:, 0] - r * signs[:, 0]
            n1 = u[:, 0, :]
            base = n1 * tau[:, None]
            if d == 2:
                qs = [np.column_stack([-n1[:, 1], n1[:, 0]])]
            else:
                ref = np.where(np.abs(n1[:, :1]) < 0.9,
                               np.tile([1.0, 0.0, 0.0], (nb, 1)),
                               np.tile([0.0, 1.0, 0.0], (nb, 1)))
                q1 = np.cross(n1, ref)
                q1 /= np.linalg.norm(q1, axis=1)[:, None]
                qs = [q1, np.cross(n1, q1)]
            z = base.copy()
            for q in qs:
                yc = np.einsum("nd,nd->n", q, center[None, :] - base)
                y = yc + (2 * rng.random(nb) - 1.0) * Rbox
                z += y[:, None] * q
                w *= 2.0 * Rbox
            nabla = np.ones(nb)
        else:
            raise ConfigInvalid("flat sampling implemented for ell = d or 1")

        spans = positively_spans_batch(dirs)
        delta = delta_batch(dirs)
        inside = np.all((z >= box_lo) & (z <= box_hi), axis=1)
        val = np.where(spans & inside, w * delta / np.maximum(nabla, 1e-300), 0.0)
        rhs_vals[done:done + nb] = val
        done += nb

    lhs = float(lhs_vals.mean())
    rhs = float(rhs_vals.mean())
    lhs_se = float(lhs_vals.std(ddof=1) / math.sqrt(samples))
    rhs_se = float(rhs_vals.std(ddof=1) / math.sqrt(samples))
    ref = pref * DELTA_SPAN_MEAN_2D * r_max if d == 2 else float("nan")
    return BPCheck(d, ell, lhs, lhs_se, rhs, rhs_se, ref, samples)


# ---------------------------------------------------------------------------
# Exponential decay of the pair integrals
# ---------------------------------------------------------------------------

@dataclass
class DecayCheck:
    variant: str
    R_grid: np.ndarray
    values: np.ndarray
    ses: np.ndarray
    slope: float
    slope_se: float
    target: float

    @property
    def slope_error(self):
        return abs(self.slope - self.target)

    @property
    def excess(self):
        # Signed gap; the bound only constrains this from above, since the
        # integral may decay strictly faster than the guaranteed rate.
        return self.slope - self.target


def _fit_log_slope(R, vals, contributions=None, n_boot=200, rng=None):
    """OLS slope of log(vals) on R, with bootstrap se over raw contributions."""
    logs = np.log(vals)
    slope = np.polyfit(R, logs, 1)[0]
    if contributions is None:
        return float(slope), float("nan")
    n = contributions.shape[0]
    slopes = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, n, size=n)
        means = contributions[idx].mean(axis=0)
        if np.any(means <= 0):
            means = np.maximum(means, 1e-300)
        slopes[b] = np.polyfit(R, np.log(means), 1)[0]
    return float(slope), float(slopes.std(ddof=1))


def decay_check_le1(variant, R_grid=None, samples=200_000, gamma=1.0,
                    window_side=1.0, a=1.0 / 3.0, D=None, seed=0, d=2):
    """Monte Carlo decay rate of the two pair-integral families (d = 2).

    variant "a": integral over pairs of tuples with both centers in a
    window of side window_side and max inradius above R, weighted by the
    void probability of the union of the two inballs. The rate target is
    -2 gamma.

    variant "b": first center in the window, centers at distance at most D,
    disjoint inballs with radii in (aR, R]. The rate target is
    -2 gamma a (2 - L(a)). D defaults to 2 a max(R_grid) + 2/gamma so the
    distance constraint stays satisfiable over the whole grid.

    Both targets are guaranteed-rate bounds: the integrals must decay at
    least this fast, so the meaningful check is slope <= target + tol.
    Variant a is tight (the integral behaves like R e^{-2 gamma R}), while
    variant b decays strictly faster than its target. With disjoint inballs
    the union hit measure is at least (4 - mu(both, touching, equal)) a R
    per unit radius, which exceeds 2 a (2 - L(a)) at every a in (0, 1), so
    a two-sided match is not achievable by any estimator of this integral.

    Importance sampling with shifted-exponential radial proposals; common
    random numbers across the R grid. Returns a DecayCheck with the fitted
    log-slope, its bootstrap standard error, and the target rate.
    """
    if d != 2:
        raise ConfigInvalid("decay check implemented for d = 2")
    if variant not in ("a", "b"):
        raise ConfigInvalid("variant must be 'a' or 'b'")
    rng = replicate_rng(seed)
    lamW = window_side ** 2
    K = (2.0 ** (d + 1) * math.factorial(d) * DELTA_SPAN_MEAN_2D) ** 2

    if R_grid is None:
        R_grid = np.linspace(8.0, 16.0, 5) if variant == "a" else \
            np.linspace(9.0, 15.0, 4)
    R_grid = np.asarray(R_grid, dtype=float)
    if len(R_grid) < 2:
        raise InsufficientSamples("slope regression needs at least two R values")
    if D is None:
        D = 2.0 * a * float(R_grid.max()) + 2.0 / gamma

    z1 = rng.uniform(0.0, window_side, size=(samples, 2))
    contrib = np.empty((samples, len(R_grid)))

    if variant == "a":
        # Symmetrize to r2 <= r1 (factor 2): r1 = R + Exp(2 gamma) cancels
        # e^{-2 gamma r1}, r2 uniform on [0, r1] leaves the bounded weight
        # r1 * e^{-gamma (2 r2 - mu_cap)} <= r1, so all moments are finite.
        z2 = rng.uniform(0.0, window_side, size=(samples, 2))
        Dz = np.linalg.norm(z2 - z1, axis=1)
        e1 = rng.exponential(1.0 / (2.0 * gamma), size=samples)
        v2 = rng.random(samples)
        for j, R in enumerate(R_grid):
            r1 = R + e1
            r2 = v2 * r1
            mu_cap = pair_hit_batch(r1, r2, Dz, d)
            w = (math.exp(-2.0 * gamma * R) / (2.0 * gamma)) * r1 \
                * np.exp(-gamma * (2.0 * r2 - mu_cap))
            contrib[:, j] = 2.0 * K * lamW ** 2 * w
    else:
        # z2 uniform in the disk of radius D around z1.
        ang = rng.uniform(0.0, 2.0 * math.pi, size=samples)
        rad = D * np.sqrt(rng.random(samples))
        z2 = z1 + np.column_stack([rad * np.cos(ang), rad * np.sin(ang)])
        Dz = rad
        diskarea = math.pi * D ** 2
        v1 = rng.random(samples)
        v2 = rng.random(samples)
        for j, R in enumerate(R_grid):
            width = R - a * R
            # Truncated shifted exponential on (aR, R]: cancels the e^{-2 gamma r}
            # factor exactly.
            zconst = (1.0 - math.exp(-2.0 * gamma * width)) / (2.0 * gamma)
            r1 = a * R - np.log1p(-v1 * (1.0 - math.exp(-2.0 * gamma * width))) \
                / (2.0 * gamma)
            r2 = a * R - np.log1p(-v2 * (1.0 - math.exp(-2.0 * gamma * width))) \
                / (2.0 * gamma)
            keep = (r1 + r2 <= Dz)
            mu_cap = np.where(keep, pair_hit_batch(r1, r2, Dz, d), 0.0)
            w = np.where(
                keep,
                math.exp(-4.0 * gamma * a * R) * zconst ** 2
                * np.exp(gamma * mu_cap),
                0.0)
            contrib[:, j] = K * lamW * diskarea * w

    vals = contrib.mean(axis=0)
    ses = contrib.std(axis=0, ddof=1) / math.sqrt(samples)
    if np.any(vals <= 0) or np.any(ses / np.maximum(vals, 1e-300) > 0.3):
        raise InsufficientSamples("decay values too noisy for a slope fit")
    boot_rng = replicate_rng(seed, 1)
    slope, slope_se = _fit_log_slope(R_grid, vals, contrib, rng=boot_rng)
    if variant == "a":
        target = -2.0 * gamma
    else:
        target = -2.0 * gamma * a * (2.0 - L_of_a(a, d))
    return DecayCheck(variant, R_grid, vals, ses, slope, slope_se, target)


# ---------------------------------------------------------------------------
# Coupling error terms of the extreme-value approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ETermEstimate:
    term: str
    n: float
    c: float
    estimate: float
    se: float
    samples: int


def _draw_weighted_tuple(nb, Wn_lo, Wn_hi, v, gamma, d, rng):
    """Tuple draw for the error-term integrals: center, radius, directions.

    Center uniform in the scaled window, radius v + Exp(2 gamma) so the
    e^{-2 gamma r} factor reduces to the constant exp(-2 gamma v)/(2 gamma),
    directions uniform with the simplex-volume density applied as a weight.
    """
    z = rng.uniform(Wn_lo, Wn_hi, size=(nb, d))
    r = v + rng.exponential(1.0 / (2.0 * gamma), size=nb)
    u = uniform_sphere(d, nb * (d + 1), rng).reshape(nb, d + 1, d)
    delta = delta_batch(u) * positively_spans_batch(u)
    return z, r, u, delta


def e_term_estimate(term, n, c=0.0, samples=200_000, gamma=1.0,
                    window_side=1.0, seed=0, max_radius_range=None):
    """Importance-sampled coupling error terms of the scaled exceedance process.

    term is one of "E2", "E5", "E6" (d = 2):

    * E2: pairs of tuples, both inball centers in the scaled window and both
      radii above the mark threshold, where some hyperplane of one tuple
      meets the other tuple's inball.
    * E5: as E2 but weighted by the probability that an independent process
      hyperplane meets both inballs, times the void probability of the
      union, restricted to disjoint inballs.
    * E6: pairs of tuples sharing a nonempty proper subset of hyperplanes,
      same exceedance and void weights; the shared-subtuple integrals are
      parametrized by the polar decomposition at level |I|, reduced by
      exchangeability to one canonical subset per size.

    Estimates are diagnostics: nonnegative, decreasing in n. Returns an
    ETermEstimate with a standard error.

    max_radius_range, when given as (lo, hi), keeps only configurations with
    max inradius in [lo, hi); the two pieces of a threshold split can then be
    estimated separately under the same sampler.
    """
    d = 2
    if term not in ("E2", "E5", "E6"):
        raise ConfigInvalid("term must be E2, E5 or E6")
    if samples < 1000:
        raise InsufficientSamples("need at least 1000 samples")
    rng = replicate_rng(seed)
    m = d + 1
    v = (c + math.log(n)) / (2.0 * gamma)
    side = n ** (1.0 / d) * window_side
    Wn_lo = np.zeros(d)
    Wn_hi = side * np.ones(d)
    lamWn = side ** d
    pref_bp = 2.0 ** (d + 1) * math.factorial(d)
    unit = lamWn * math.exp(-2.0 * gamma * v) / (2.0 * gamma)

    if term in ("E2", "E5"):
        z1, r1, u1, del1 = _draw_weighted_tuple(samples, Wn_lo, Wn_hi, v, gamma, d, rng)
        z2, r2, u2, del2 = _draw_weighted_tuple(samples, Wn_lo, Wn_hi, v, gamma, d, rng)
        Dz = np.linalg.norm(z2 - z1, axis=1)
        const = (2.0 * gamma ** (2 * d + 2) / math.factorial(m) ** 2) \
            * (pref_bp * unit) ** 2
        if term == "E2":
            # Hyperplane i of tuple 1: {x: <u_i, x> = <z1, u_i> + r1}; it meets
            # the other inball iff |<u_i, z2 - z1> - r1| <= r2, and vice versa.
            g12 = np.abs(np.einsum("nmd,nd->nm", u1, z2 - z1) - r1[:, None])
            g21 = np.abs(np.einsum("nmd,nd->nm", u2, z1 - z2) - r2[:, None])
            hit = (g12 <= r2[:, None]).any(axis=1) | (g21 <= r1[:, None]).any(axis=1)
            vals = const * del1 * del2 * hit
        else:
            mu_cap = pair_hit_batch(r1, r2, Dz, d)
            disjoint = r1 + r2 <= Dz
            vals = const * del1 * del2 * disjoint \
                * (1.0 - np.exp(-gamma * mu_cap)) * np.exp(gamma * mu_cap)
    else:
        z1, r1, u1, del1 = _draw_weighted_tuple(samples, Wn_lo, Wn_hi, v, gamma, d, rng)
        t1 = np.einsum("nmd,nd->nm", u1, z1) + r1[:, None]
        center = 0.5 * (Wn_lo + Wn_hi)
        Rc = 0.5 * side * math.sqrt(d)
        vals = np.zeros(samples)
        r2 = v + rng.exponential(1.0 / (2.0 * gamma), size=samples)
        for msh in (1, 2):
            signs = rng.choice([-1.0, 1.0], size=(samples, msh))
            shared_u = signs[:, :, None] * u1[:, :msh, :]
            ufree = uniform_sphere(d, samples * (m - msh), rng).reshape(
                samples, m - msh, d)
            dirs2 = np.concatenate([shared_u, ufree], axis=1)
            del2 = delta_batch(dirs2) * positively_spans_batch(dirs2)
            if msh == 1:
                # Flat: line {x : <u, x> = t - r2 s}; chord of the window
                # circumball, uniform point on it.
                tau = t1[:, 0] - r2 * signs[:, 0]
                n1 = u1[:, 0, :]
                q = np.column_stack([-n1[:, 1], n1[:, 0]])
                base = n1 * tau[:, None]
                h = np.einsum("nd,nd->n", n1, center[None, :]) - tau
                half = np.sqrt(np.maximum(Rc ** 2 - h ** 2, 0.0))
                yc = np.einsum("nd,nd->n", q, center[None, :] - base)
                y = yc + (2.0 * rng.random(samples) - 1.0) * half
                z2 = base + y[:, None] * q
                flat_w = 2.0 * half
                nabla = np.ones(samples)
            else:
                shifted = t1[:, :2] - r2[:, None] * signs
                A = u1[:, :2, :]
                dets = np.linalg.det(A)
                okA = np.abs(dets) > 1e-12
                Asafe = A.copy()
                Asafe[~okA] = np.eye(2)
                z2 = np.linalg.solve(Asafe, shifted[:, :, None])[:, :, 0]
                flat_w = okA.astype(float)
                nabla = np.abs(dets)
            in_w = np.all((z2 >= Wn_lo) & (z2 <= Wn_hi), axis=1)
            Dz = np.linalg.norm(z2 - z1, axis=1)
            disjoint = r1 + r2 <= Dz
            mu_cap = pair_hit_batch(r1, r2, Dz, d)
            inner = pref_bp * (math.exp(-2.0 * gamma * v) / (2.0 * gamma)) \
                * flat_w * del2 / np.maximum(nabla, 1e-300) \
                * in_w * disjoint * np.exp(gamma * mu_cap)
            class_const = (2.0 * gamma ** (d + 1) / math.factorial(m)) \
                * math.comb(m, msh) * gamma ** msh / math.factorial(m - msh)
            vals += class_const * (pref_bp * unit) * del1 * inner
    if max_radius_range is not None:
        lo, hi = max_radius_range
        rmax = np.maximum(r1, r2)
        vals = vals * ((rmax >= lo) & (rmax < hi))
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples))
    return ETermEstimate(term, float(n), float(c), est, se, samples)
