"""Sampling law, hitting counts, and persistence of the hyperplane process."""

import math

import numpy as np
import pytest
from scipy import stats

from hypermosaic import (
    Ball,
    Box,
    ProcessParams,
    box_polytope,
    replicate_rng,
    sample,
    uniform_sphere,
)
from hypermosaic.errors import ConfigInvalid
from hypermosaic.process import count_hits, hit_count_law, load_csv, mu_hit, save_csv


class TestParamsAndStreams:
    def test_gamma_must_be_positive(self):
        with pytest.raises(ConfigInvalid):
            ProcessParams(0.0, 2)
        with pytest.raises(ConfigInvalid):
            ProcessParams(-1.0, 2)

    def test_dimension_floor(self):
        with pytest.raises(ConfigInvalid):
            ProcessParams(1.0, 1)

    def test_replicate_streams_reproducible_in_isolation(self):
        a = replicate_rng(123, 7).normal(size=4)
        b = replicate_rng(123, 7).normal(size=4)
        c = replicate_rng(123, 8).normal(size=4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_uniform_sphere_unit_norm(self):
        for d in (2, 3, 6):
            u = uniform_sphere(d, 500, replicate_rng(5))
            assert np.abs(np.linalg.norm(u, axis=1) - 1.0).max() <= 1e-12


class TestMuHit:
    def test_ball_mass_is_twice_radius(self):
        assert mu_hit(Ball(np.array([4.0, -1.0]), 2.5)) == 5.0
        assert mu_hit(Ball(np.zeros(2), 0.0)) == 0.0

    def test_mass_matches_sampled_counts(self):
        # gamma * mu_hit(B) is the mean hit count of an interior ball.
        params = ProcessParams(1.5, 2, seed=42)
        region = Ball(np.zeros(2), 6.0)
        target = Ball(np.array([1.0, -2.0]), 1.25)
        counts = np.array([
            count_hits(sample(params, region, replicate=i), target)
            for i in range(10_000)])
        mean = params.gamma * mu_hit(target)
        assert abs(counts.mean() - mean) <= 3.0 * math.sqrt(mean / len(counts))


class TestSampleLaw:
    def test_count_mean_and_variance(self):
        # N ~ Poisson(2 gamma R): mean and variance 6 at gamma=1, R=3.
        params = ProcessParams(1.0, 2, seed=7)
        region = Ball(np.zeros(2), 3.0)
        counts = np.array([len(sample(params, region, replicate=i))
                           for i in range(30_000)])
        n = len(counts)
        assert abs(counts.mean() - 6.0) <= 3.0 * math.sqrt(6.0 / n)
        # Var of the sample variance of Poisson(lam): (lam + 2 lam^2) ~ moments.
        var_se = math.sqrt((6.0 + 2.0 * 36.0) / n)
        assert abs(counts.var(ddof=1) - 6.0) <= 3.0 * var_se

    def test_offsets_uniform_on_region_radius(self):
        params = ProcessParams(1.0, 2, seed=11)
        center = np.array([2.0, 5.0])
        region = Ball(center, 3.0)
        ts = []
        for i in range(20_000):
            real = sample(params, region, replicate=i)
            ts.extend(real.offsets - real.normals @ center)
            if len(ts) >= 100_000:
                break
        ts = np.asarray(ts[:100_000])
        assert ts.min() >= 0.0 and ts.max() <= 3.0
        p = stats.kstest(ts / 3.0, "uniform").pvalue
        assert p > 0.01

    def test_directions_centered(self):
        params = ProcessParams(1.0, 2, seed=13)
        region = Ball(np.zeros(2), 3.0)
        us = np.vstack([sample(params, region, replicate=i).normals
                        for i in range(20_000)])
        se = math.sqrt(0.5 / len(us))  # E[u_j^2] = 1/2 on the circle
        assert np.abs(us.mean(axis=0)).max() <= 3.0 * se

    def test_deterministic_given_seed(self):
        params = ProcessParams(2.0, 2, seed=99)
        region = Ball(np.array([1.0, 1.0]), 4.0)
        a = sample(params, region, replicate=3)
        b = sample(params, region, replicate=3)
        assert np.array_equal(a.normals, b.normals)
        assert np.array_equal(a.offsets, b.offsets)

    def test_region_dimension_checked(self):
        with pytest.raises(ConfigInvalid):
            sample(ProcessParams(1.0, 3), Ball(np.zeros(2), 1.0))


class TestHitCountLaw:
    def test_ball_value(self):
        assert hit_count_law(Ball(np.array([3.0, 0.0]), 1.0), 2.0) == pytest.approx(4.0)

    def test_unit_square_value(self):
        square = box_polytope(Box(np.zeros(2), np.ones(2)))
        assert hit_count_law(square, 1.0) == pytest.approx(4.0 / math.pi, rel=1e-8)

    def test_off_center_ball_poisson(self):
        # Counts hitting an interior ball: Poisson(2 gamma r) mean and Fano.
        params = ProcessParams(1.0, 2, seed=21)
        region = Ball(np.zeros(2), 8.0)
        target = Ball(np.array([-3.0, 2.0]), 0.75)
        lam = hit_count_law(target, params.gamma)
        counts = np.array([
            count_hits(sample(params, region, replicate=i), target)
            for i in range(10_000)])
        n = len(counts)
        assert abs(counts.mean() - lam) <= 3.0 * math.sqrt(lam / n)
        fano = counts.var(ddof=1) / counts.mean()
        # Fano factor of Poisson is 1; se ~ sqrt(2/n) at these lam.
        assert abs(fano - 1.0) <= 3.0 * math.sqrt(2.0 / n)


class TestProcessInvariants:
    def test_disjoint_direction_sectors_independent(self):
        params = ProcessParams(1.0, 2, seed=31)
        region = Ball(np.zeros(2), 5.0)
        n = 4000
        c1 = np.empty(n)
        c2 = np.empty(n)
        for i in range(n):
            real = sample(params, region, replicate=i)
            ang = np.mod(np.arctan2(real.normals[:, 1], real.normals[:, 0]),
                         2.0 * math.pi)
            c1[i] = np.sum(ang < math.pi / 4.0)
            c2[i] = np.sum((ang >= math.pi / 2.0) & (ang < 3.0 * math.pi / 4.0))
        r = np.corrcoef(c1, c2)[0, 1]
        assert abs(r) <= 3.0 / math.sqrt(n)

    def test_superposition_means_add(self):
        region = Ball(np.zeros(2), 4.0)
        g1, g2 = 0.7, 1.8
        tot = 0
        n = 8000
        for i in range(n):
            tot += len(sample(ProcessParams(g1, 2, seed=41), region, replicate=i))
            tot += len(sample(ProcessParams(g2, 2, seed=43), region, replicate=i))
        lam = 2.0 * (g1 + g2) * region.radius
        assert abs(tot / n - lam) <= 3.0 * math.sqrt(lam / n)


class TestPersistence:
    def test_csv_round_trip_bit_exact(self, tmp_path):
        params = ProcessParams(1.3, 2, seed=5)
        real = sample(params, Ball(np.array([0.5, -2.0]), 7.0), replicate=2)
        path = tmp_path / "real.csv"
        save_csv(real, path)
        back = load_csv(path)
        assert np.array_equal(back.normals, real.normals)
        assert np.array_equal(back.offsets, real.offsets)
        assert back.gamma == real.gamma
        assert back.region.radius == real.region.radius
        assert np.array_equal(back.region.center, real.region.center)

    def test_header_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        (tmp_path / "bad.csv.json").write_text(
            '{"dimension": 2, "gamma": 1.0, "region_center": [0, 0], '
            '"region_radius": 1.0}')
        with pytest.raises(ConfigInvalid):
            load_csv(path)
