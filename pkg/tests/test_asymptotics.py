import math

import numpy as np
import pytest
from scipy import stats

from circgof import GofError
from circgof.asymptotics import (AsymptoticKind, WeightedChiSqLaw, asymptotic_null, calibrate_epsilon,
                                 circulant_eigenvalues, circulant_eigenvalues_direct, kernel_bruteforce,
                                 kernel_exact, kernel_limit_R, kernel_limit_W, psi_weights, rn2_eigen_roots,
                                 weighted_chisq_law)
from circgof.statistics import harmonic


def nystrom_lambdas(eps, k, nodes=400):
    """Eigenvalues of the weighted Brownian-bridge covariance operator on [eps, 1-eps].

    Gauss-Legendre quadrature in the log-odds variable; the weight is 1/(t(1-t))^2.
    """
    L = math.log((1 - eps) / eps)
    x, w = np.polynomial.legendre.leggauss(nodes)
    x, w = x * L, w * L
    t = 1 / (1 + np.exp(-x))
    a = np.sqrt(w * t * (1 - t) / (t * (1 - t)) ** 2)
    m = a[:, None] * (np.minimum.outer(t, t) - np.outer(t, t)) * a[None, :]
    return 1 / np.sort(np.linalg.eigvalsh(m))[::-1][:k]


class TestEigenRoots:
    def test_first_cos_root_by_grid_scan(self):
        eps = 1 / 22
        s = rn2_eigen_roots(eps, 1)
        L = s.log_ratio
        # residual of tan(omega L) = 1/(2 omega) scanned on a fine grid inside (0, pi/(2L))
        grid = np.linspace(1e-6, math.pi / (2 * L) - 1e-9, 2_000_001)
        r = np.tan(grid * L) - 1 / (2 * grid)
        k = np.flatnonzero(np.sign(r[:-1]) != np.sign(r[1:]))[0]
        assert abs(s.omegas[0] - grid[k]) < 2 * (grid[1] - grid[0])
        assert s.branch[0] == "cos"

    @pytest.mark.parametrize("eps", [1 / 22, 1 / 202, 0.2])
    def test_equations_hold(self, eps):
        s = rn2_eigen_roots(eps, 40)
        L = s.log_ratio
        assert np.allclose(s.lambdas, s.omegas**2 + 0.25, rtol=0, atol=1e-12)
        th = s.omegas * L
        cos_k, sin_k = s.branch == "cos", s.branch == "sin"
        assert np.allclose(np.tan(th[cos_k]), 1 / (2 * s.omegas[cos_k]), rtol=1e-8)
        assert np.allclose(np.tan(th[sin_k]), -2 * s.omegas[sin_k], rtol=1e-8)
        assert np.all(np.diff(s.lambdas) > 0)
        assert np.all(np.diff(s.omegas) < math.pi / L + math.pi / (2 * L))

    def test_against_nystrom(self):
        eps = 1 / 22
        assert np.allclose(rn2_eigen_roots(eps, 6).lambdas, nystrom_lambdas(eps, 6), rtol=1e-3)

    def test_weight_sum_bounds(self):
        eps = 1 / 202
        s = rn2_eigen_roots(eps, 10_000)
        total = np.sum(1 / s.lambdas)
        assert abs(total - 2 * s.log_ratio) < 0.05 * 2 * s.log_ratio

    @pytest.mark.parametrize("eps,K,code", [(0.0, 3, "bad_epsilon"), (0.5, 3, "bad_epsilon"),
                                            (0.1, 0, "empty_spectrum")])
    def test_errors(self, eps, K, code):
        with pytest.raises(GofError) as e:
            rn2_eigen_roots(eps, K)
        assert e.value.code == code

    def test_calibration_round_trip(self):
        target = rn2_eigen_roots(0.013, 1).lambdas[0]
        assert math.isclose(calibrate_epsilon(target), 0.013, rel_tol=1e-8)


class TestKernels:
    @pytest.mark.parametrize("family", ["W", "R"])
    def test_exact_matches_bruteforce(self, family):
        dense = kernel_bruteforce(6, family)
        assert np.allclose(kernel_exact(6, family).dense(), dense, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("n", [1, 2, 7, 10, 31, 64])
    def test_fft_matches_direct_and_dense(self, n):
        for k in (kernel_exact(n, "W"), kernel_exact(n, "R"), kernel_limit_W(n), kernel_limit_R(n)):
            fft = circulant_eigenvalues(k)
            assert np.allclose(fft, circulant_eigenvalues_direct(k), rtol=0, atol=1e-9 * abs(fft).max())
            assert np.allclose(np.sort(fft), np.linalg.eigvalsh(k.dense()), rtol=0, atol=1e-9 * abs(fft).max())

    @pytest.mark.parametrize("n", [5, 20, 100])
    def test_trace_identities(self, n):
        kw, kr = kernel_exact(n, "W"), kernel_exact(n, "R")
        assert math.isclose(kw.trace, n, rel_tol=1e-10)
        assert math.isclose(kr.trace, 2 * (n + 1) * harmonic(n), rel_tol=1e-10)
        phi = circulant_eigenvalues(kw)
        assert abs(phi[0]) < 1e-8 * kw.trace
        assert abs(phi[0] - kw.first_row.sum()) < 1e-12

    def test_limit_rows(self):
        n = 9
        assert math.isclose(kernel_limit_W(n).trace, 1.0, rel_tol=1e-14)
        assert math.isclose(kernel_limit_R(n).trace, 1.0, rel_tol=1e-14)
        printed = kernel_limit_R(n, diagonal="printed")
        assert math.isclose(2 * harmonic(n) * (n + 1) * printed.first_row[0], 1.0, rel_tol=1e-14)
        with pytest.raises(GofError, match="bad_selector"):
            kernel_limit_R(n, diagonal="other")

    def test_limit_row_tracks_exact_kernel(self):
        # off the diagonal the continuum row is the exact row divided by n
        n = 400
        ex = kernel_exact(n, "W").first_row / n
        lim = kernel_limit_W(n).first_row
        assert np.max(np.abs(ex[1:] - lim[1:])) < 0.02 * lim[0]

    def test_bad_psi(self):
        with pytest.raises(GofError, match="bad_psi"):
            kernel_exact(3, [1.0, -1.0, 1.0])
        with pytest.raises(GofError, match="bad_selector"):
            psi_weights(3, "Q")


class TestWeightedChiSq:
    def test_single_weight_is_scaled_chi2(self):
        law = WeightedChiSqLaw(np.array([2.0]))
        x = np.array([0.5, 2.0, 6.0])
        p, se = law.cdf(x, reps=200_000, seed=1)
        assert np.all(np.abs(p - stats.chi2.cdf(x / 2, 1)) < 4 * se + 1e-12)

    def test_equal_weights_quantile(self):
        law = WeightedChiSqLaw(np.full(5, 0.3))
        q, se = law.quantile(np.array([0.1, 0.5, 0.9]), reps=200_000, seed=2)
        exact = 0.3 * stats.chi2.ppf([0.1, 0.5, 0.9], 5)
        assert np.all(np.abs(q - exact) < 4 * se)

    def test_moments(self):
        w = np.array([0.5, 0.25, 0.125])
        law = WeightedChiSqLaw(w)
        x = law.sample(400_000, seed=3)
        assert abs(x.mean() - law.mean) < 4 * math.sqrt(law.variance / x.size)
        assert math.isclose(law.variance, 2 * np.sum(w**2))

    def test_sampling_is_deterministic(self):
        law = WeightedChiSqLaw(np.array([1.0, 0.5]))
        assert np.array_equal(law.sample(5000, seed=9), law.sample(5000, seed=9))

    def test_clipping(self):
        law = WeightedChiSqLaw(np.array([1.0, -1e-14, 0.5]))
        assert law.clipped == 1 and law.weights.tolist() == [1.0, 0.5, 0.0]
        with pytest.raises(GofError, match="negative_weights"):
            WeightedChiSqLaw(np.array([1.0, -0.1]))
        with pytest.raises(GofError, match="empty_spectrum"):
            WeightedChiSqLaw(np.array([]))

    def test_truncation(self):
        law = weighted_chisq_law(rn2_eigen_roots(0.1, 20), truncation=5, scale=2.0)
        assert law.weights.size == 5
        with pytest.raises(GofError, match="empty_spectrum"):
            weighted_chisq_law(np.ones(3), truncation=0)


class TestAsymptoticNull:
    def test_r2_defaults(self):
        law = asymptotic_null("r2", 10)
        lam = rn2_eigen_roots(1 / 22, 10).lambdas
        assert np.allclose(law.weights, np.sort(0.5 / harmonic(10) / lam)[::-1])

    @pytest.mark.parametrize("n", [10, 50])
    def test_pooled_means(self, n):
        assert math.isclose(asymptotic_null("w2_avg", n).mean, 1.0, rel_tol=1e-10)
        assert math.isclose(asymptotic_null("r2_avg", n).mean, (n + 1) / n, rel_tol=1e-10)
        assert math.isclose(asymptotic_null("w2_avg", n, kernel="limit").mean, 1.0, rel_tol=1e-10)

    def test_selectors(self):
        assert AsymptoticKind.parse("R2_AVG") is AsymptoticKind.R2_AVG
        with pytest.raises(GofError, match="bad_selector"):
            asymptotic_null("ks", 10)
        with pytest.raises(GofError, match="bad_selector"):
            asymptotic_null("w2_avg", 10, kernel="other")
        with pytest.raises(GofError, match="bad_n"):
            asymptotic_null("r2", 0)
