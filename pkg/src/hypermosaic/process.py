"""Stationary isotropic Poisson hyperplane process.

A realization restricted to a ball B(c, R) consists of N ~ Poisson(2 gamma R)
hyperplanes, each drawn as H = {x : <u, x> = <c, u> + t} with u uniform on the
full unit sphere and t uniform on [0, R]. Under the invariant measure the mass
of hyperplanes hitting a convex body K is gamma * mean_width(K); for a ball
this is 2 gamma radius, independent of the dimension.

Randomness is counter based: replicate i of an experiment with master seed s
uses a Philox stream keyed by SeedSequence(s, spawn_key=(i,)), so any
replicate can be regenerated in isolation.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigInvalid
from .geometry import Ball, phi_mean_width


@dataclass(frozen=True)
class ProcessParams:
    """Intensity gamma, ambient dimension, and master seed."""

    gamma: float
    dimension: int
    seed: int = 0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigInvalid("gamma must be positive")
        if self.dimension < 2:
            raise ConfigInvalid("dimension must be >= 2")


def replicate_rng(seed, replicate=None):
    """Philox generator for one replicate of a seeded experiment.

    With replicate None the root stream is returned; otherwise stream i is
    independent of and reproducible without the others.
    """
    if replicate is None:
        seq = np.random.SeedSequence(seed)
    else:
        seq = np.random.SeedSequence(seed, spawn_key=(int(replicate),))
    return np.random.Generator(np.random.Philox(seq))


def uniform_sphere(d, size, rng):
    """Uniform unit vectors in R^d, shape (size, d)."""
    x = rng.normal(size=(size, d))
    n = np.linalg.norm(x, axis=1, keepdims=True)
    # Resample the (probability zero) degenerate rows rather than dividing by 0.
    bad = n[:, 0] < 1e-12
    while bad.any():
        x[bad] = rng.normal(size=(int(bad.sum()), d))
        n = np.linalg.norm(x, axis=1, keepdims=True)
        bad = n[:, 0] < 1e-12
    return x / n


@dataclass(eq=False)
class Realization:
    """Hyperplanes of one sampled realization inside a ball region.

    ``normals`` has unit rows; hyperplane i is {x : <normals[i], x> =
    offsets[i]}. ``region`` is the ball the sample law was restricted to:
    every hyperplane of the (infinite) process hitting the region is present.
    """

    normals: np.ndarray
    offsets: np.ndarray
    region: Ball
    gamma: float
    seed_info: dict = field(default_factory=dict)

    def __len__(self):
        return self.normals.shape[0]

    @property
    def dimension(self):
        return self.region.dimension

    def distances(self, z):
        """Unsigned distances from point z to every hyperplane."""
        return np.abs(self.normals @ np.asarray(z, dtype=float) - self.offsets)

    def hits_ball(self, ball, tol=0.0):
        """Boolean mask of hyperplanes meeting the closed ball."""
        return self.distances(ball.center) <= ball.radius + tol

    def subset(self, mask):
        return Realization(self.normals[mask], self.offsets[mask],
                           self.region, self.gamma, dict(self.seed_info))


def mu_hit(ball):
    """Invariant-measure mass (at gamma = 1) of hyperplanes hitting a ball."""
    return 2.0 * ball.radius


def sample(params, region, replicate=None, rng=None):
    """Sample the process restricted to hyperplanes hitting a ball region.

    Parameters
    ----------
    params : ProcessParams
    region : Ball
    replicate : int, optional
        Stream index under params.seed; None uses the root stream.
    rng : numpy Generator, optional
        Overrides the seed-derived stream (used by composed samplers).

    Returns
    -------
    Realization
    """
    if region.dimension != params.dimension:
        raise ConfigInvalid("region dimension does not match params")
    if rng is None:
        rng = replicate_rng(params.seed, replicate)
    n = rng.poisson(2.0 * params.gamma * region.radius)
    u = uniform_sphere(params.dimension, n, rng)
    t = rng.uniform(0.0, region.radius, size=n)
    offsets = u @ region.center + t
    return Realization(u, offsets, region, params.gamma,
                       {"seed": params.seed, "replicate": replicate, "count": int(n)})


def count_hits(realization, ball):
    """Number of hyperplanes of the realization meeting a closed ball."""
    return int(realization.hits_ball(ball).sum())


def hit_count_law(K, gamma):
    """Mean of the Poisson law of the number of hyperplanes hitting K."""
    return gamma * phi_mean_width(K)


def save_csv(realization, path):
    """Write hyperplanes as RFC 4180 CSV with a JSON sidecar.

    Columns are u_1, ..., u_d, r with 17 significant digits (lossless float64
    round trip). The sidecar <path>.json stores gamma, dimension, region, and
    seed information.
    """
    d = realization.dimension
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"u_{i + 1}" for i in range(d)] + ["r"])
        for row, off in zip(realization.normals, realization.offsets):
            w.writerow([f"{v:.17g}" for v in row] + [f"{off:.17g}"])
    sidecar = {
        "gamma": realization.gamma,
        "dimension": d,
        "region_center": [float(v) for v in realization.region.center],
        "region_radius": realization.region.radius,
        "count": len(realization),
        "seed_info": realization.seed_info,
    }
    with open(str(path) + ".json", "w") as fh:
        json.dump(sidecar, fh, indent=2)


def load_csv(path):
    """Read a realization written by save_csv (sidecar required)."""
    with open(str(path) + ".json") as fh:
        meta = json.load(fh)
    d = int(meta["dimension"])
    normals, offsets = [], []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != [f"u_{i + 1}" for i in range(d)] + ["r"]:
            raise ConfigInvalid(f"unexpected CSV header {header!r}")
        for row in rd:
            vals = [float(v) for v in row]
            normals.append(vals[:d])
            offsets.append(vals[d])
    region = Ball(np.array(meta["region_center"]), meta["region_radius"])
    return Realization(np.array(normals).reshape(-1, d), np.array(offsets),
                       region, float(meta["gamma"]), meta.get("seed_info", {}))
