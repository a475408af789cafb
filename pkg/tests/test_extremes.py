"""Scaled exceedance processes, their Poisson limit diagnostics, and the
shape concentration experiment."""

import math

import numpy as np
import pytest
from scipy import stats

from hypermosaic import Box, ProcessParams
from hypermosaic.errors import InsufficientSamples, OutOfRange
from hypermosaic.extremes import (
    CountLaw,
    build_xi_n,
    build_zeta_n,
    count_tv,
    g_inverse_asymptote_check,
    isoperimetric_check,
    kendall_experiment,
    multibin_poisson_test,
    run_ensemble,
    xi_expected_count,
    zeta_expected_count,
)
from hypermosaic.geometry import SizeFunctional
from hypermosaic.mosaic import (
    EmpiricalDistribution,
    g_transform,
    gamma_d_estimate,
    sample_palm_cells,
)

GAMMA2 = 1.0 / math.pi  # cell intensity at d=2, gamma=1
WINDOW = Box(np.zeros(2), np.ones(2))


def _zeta_ensemble(n, c, reps, seed, gamma=1.0):
    params = ProcessParams(gamma, 2, seed=seed)
    return run_ensemble(lambda i: build_zeta_n(params, n, WINDOW, c,
                                               replicate=i), reps)


class TestZetaProcess:
    def test_count_mean_matches_intensity(self):
        ens = _zeta_ensemble(math.e ** 4, 0.0, 600, seed=201)
        lam = zeta_expected_count(GAMMA2, WINDOW, 0.0)
        se = ens.counts.std(ddof=1) / math.sqrt(len(ens.counts))
        assert abs(ens.counts.mean() - lam) <= 3.0 * se
        assert ens.certified_fraction >= 0.9

    def test_count_mean_independent_of_n(self):
        a = _zeta_ensemble(math.e ** 4, 0.0, 500, seed=203)
        b = _zeta_ensemble(math.e ** 5, 0.0, 500, seed=205)
        se = math.hypot(a.counts.std(ddof=1), b.counts.std(ddof=1)) \
            / math.sqrt(500)
        assert abs(a.counts.mean() - b.counts.mean()) <= 3.0 * se

    def test_large_c_empties_process(self):
        params = ProcessParams(1.0, 2, seed=207)
        proc = build_zeta_n(params, math.e ** 4, WINDOW, 40.0, replicate=0)
        assert len(proc.points) == 0

    def test_fano_and_mark_law(self):
        # Needs n large: at small n the threshold cells are comparable to
        # the window and repel each other, leaving the counts visibly
        # underdispersed. The count mean is exact at any n; only the higher
        # moments require the limit.
        ens = _zeta_ensemble(math.e ** 6, 0.0, 600, seed=209)
        counts = ens.counts
        n = len(counts)
        fano = counts.var(ddof=1) / counts.mean()
        assert abs(fano - 1.0) <= 3.0 * math.sqrt(2.0 / n)
        # Marks above the floor are Exp(1): the e^{-y} intensity profile.
        marks = ens.pooled_marks()
        assert marks.min() > 0.0
        assert stats.kstest(marks, "expon").pvalue > 0.01

    def test_locations_inside_window(self):
        ens = _zeta_ensemble(math.e ** 4, 0.0, 50, seed=211)
        for proc in ens.processes:
            for pt in proc.points:
                assert np.all(pt.location >= 0.0) and np.all(pt.location <= 1.0)


class TestXiProcess:
    def test_count_and_marks(self, corpus300k):
        G = g_transform(corpus300k, k=2.0)
        size = SizeFunctional.volume(2)
        params = ProcessParams(1.0, 2, seed=213)
        c = 2.0
        ens = run_ensemble(
            lambda i: build_xi_n(params, math.e ** 6, WINDOW, c, size, G,
                                 replicate=i), 200)
        lam = xi_expected_count(GAMMA2, WINDOW, c)
        se = ens.counts.std(ddof=1) / math.sqrt(len(ens.counts))
        assert abs(ens.counts.mean() - lam) <= 3.0 * se
        marks = ens.pooled_marks()
        assert marks.min() > c
        assert ens.certified_fraction >= 0.9

    def test_small_fit_rejected(self, corpus300k):
        # Rank-thinned subsample: same shape, a tenth of the cells.
        small = EmpiricalDistribution(corpus300k.values[::10])
        G = g_transform(small, k=2.0)
        params = ProcessParams(1.0, 2, seed=215)
        size = SizeFunctional.volume(2)
        with pytest.raises(InsufficientSamples):
            build_xi_n(params, math.e ** 4, WINDOW, 2.0, size, G, replicate=0)
        # The escape hatch for smoke runs.
        build_xi_n(params, math.e ** 4, WINDOW, 2.0, size, G, replicate=0,
                   enforce_fit_size=False)


class TestCountTV:
    def test_identical_laws_near_zero(self):
        rng = np.random.default_rng(2)
        rep = count_tv(rng.poisson(1.0, size=2000), CountLaw(1.0), seed=1)
        assert rep.ci_low <= 0.0 <= rep.ci_high

    def test_poisson_1_vs_2_recovered(self):
        # Exact distance from pmf summation: 0.32975...
        exact = 0.3297530326721544
        rng = np.random.default_rng(3)
        rep = count_tv(rng.poisson(2.0, size=10_000), CountLaw(1.0), seed=1)
        assert rep.ci_low <= exact <= rep.ci_high
        assert abs(rep.tv_debiased - exact) <= 0.03

    def test_too_few_replicates(self):
        with pytest.raises(InsufficientSamples):
            count_tv(np.zeros(100, dtype=int), CountLaw(1.0))


class TestMultibin:
    def test_zeta_bins_match_intensity(self):
        ens = _zeta_ensemble(math.e ** 4, 0.0, 800, seed=217)
        rep = multibin_poisson_test(ens, GAMMA2, space_splits=2,
                                    mark_edges=[0.0, 1.0, math.inf])
        assert rep.max_abs_mean_z <= 3.0
        assert rep.max_abs_cov_z <= 3.0

    def test_single_bin_reduces_to_count_mean(self):
        ens = _zeta_ensemble(math.e ** 4, 0.0, 600, seed=219)
        rep = multibin_poisson_test(ens, GAMMA2, space_splits=1,
                                    mark_edges=[0.0, math.inf])
        lam = zeta_expected_count(GAMMA2, WINDOW, 0.0)
        assert rep.expected[0] == pytest.approx(lam, rel=1e-12)
        assert abs(rep.means[0] - ens.counts.mean()) <= 1e-12
        assert rep.max_abs_mean_z <= 3.0

    def test_xi_mark_bins_balance(self, corpus300k):
        # 1/c - 1/(2c) = 1/(2c): the two mark bins have equal mass.
        G = g_transform(corpus300k, k=2.0)
        size = SizeFunctional.volume(2)
        params = ProcessParams(1.0, 2, seed=221)
        c = 2.0
        ens = run_ensemble(
            lambda i: build_xi_n(params, math.e ** 6, WINDOW, c, size, G,
                                 replicate=i), 600)
        rep = multibin_poisson_test(ens, GAMMA2, space_splits=1,
                                    mark_edges=[c, 2.0 * c, math.inf])
        assert rep.expected[0] == pytest.approx(rep.expected[1], rel=1e-12)
        assert rep.max_abs_mean_z <= 3.0


class TestKendall:
    def test_shape_concentrates(self):
        params = ProcessParams(1.0, 2, seed=223)
        rep = kendall_experiment(params, u_quantiles=(0.5, 0.95),
                                 samples=2500, seed_offset=11)
        z = (rep.mean_theta[0] - rep.mean_theta[1]) \
            / math.hypot(rep.se_theta[0], rep.se_theta[1])
        assert z > 3.0
        assert rep.strictly_decreasing_3sigma

    def test_low_threshold_is_unconditional(self):
        params = ProcessParams(1.0, 2, seed=227)
        rep = kendall_experiment(params, u_quantiles=(1e-9, 0.8),
                                 samples=1200, seed_offset=13)
        assert rep.n_conditional[0] >= 0.99 * 1200

    def test_roundness_probability_decreasing(self):
        params = ProcessParams(1.0, 2, seed=229)
        rep = kendall_experiment(params, u_quantiles=(0.3, 0.7, 0.95),
                                 samples=2500, seed_offset=17, theta_ref=0.3)
        p = rep.p_theta_above
        se = np.sqrt(p * (1.0 - p) / np.maximum(rep.n_conditional, 1))
        for k in range(len(p) - 1):
            assert p[k + 1] <= p[k] + 3.0 * math.hypot(se[k], se[k + 1])


class TestIsoperimetry:
    def test_no_violations_on_sampled_cells(self):
        params = ProcessParams(1.0, 2, seed=231)
        harvest = sample_palm_cells(params, 300, seed_offset=19)
        rep = isoperimetric_check(harvest.records, SizeFunctional.volume(2))
        assert rep.checked == 300
        assert rep.violations == 0


class TestAsymptote:
    def test_ratio_trend_and_final_error(self, corpus300k):
        # Slow asymptote: the guaranteed limit is approached from below;
        # at 3e5 cells the extrapolated fit lands within 20 percent.
        G = g_transform(corpus300k, k=2.0)
        rep = g_inverse_asymptote_check(G, 1.0,
                                        size=SizeFunctional.volume(2), seed=7)
        assert rep.target == pytest.approx(2.0 / math.sqrt(math.pi) * 1.0)
        assert rep.final_relative_error <= 0.20
        assert rep.monotone_within_ci
        assert np.all(rep.ratios <= rep.target)  # approach is one-sided

    def test_unfitted_tail_out_of_range(self, corpus300k):
        G = g_transform(corpus300k, tail=None)
        with pytest.raises(OutOfRange):
            g_inverse_asymptote_check(G, 1.0, size=SizeFunctional.volume(2),
                                      n_grid=np.array([1e7, 1e9]))


class TestGammaDCrossValidation:
    def test_estimate_matches_exact_d2(self):
        # At d=2 the intensity has the closed form gamma^2/pi.
        val, se = gamma_d_estimate(2, 1.0, mc_samples=200_000, seed=233)
        assert abs(val - GAMMA2) <= 3.0 * se
