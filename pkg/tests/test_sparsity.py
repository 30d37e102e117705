import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectraladapt.core import HMINUS1, SpectralVector, from_moduli
from spectraladapt.sparsity import (AlgebraicClassParams, ExponentialClassParams,
                                    InsufficientDataError, algebraic_quasinorm,
                                    best_n_error, class_norm_from_errors,
                                    exponential_norm, fit_class,
                                    genuine_rate_fit, min_dofs, tail_errors,
                                    unit_ball_measure)


def geometric_vec(eta, n_max):
    return from_moduli([math.exp(-eta * n) for n in range(1, n_max + 1)])


class TestBestNError:
    def test_drop_the_smaller(self):
        v = from_moduli([4.0, 3.0])
        assert best_n_error(v, 1) == pytest.approx(3.0, rel=1e-15)

    def test_past_support_is_zero(self):
        v = from_moduli([1.0, 0.5])
        assert best_n_error(v, 2) == 0.0
        assert best_n_error(v, 7) == 0.0

    def test_zero_terms_is_full_norm(self):
        v = from_moduli([1.0, 2.0, 2.0])
        assert best_n_error(v, 0) == v.norm()

    def test_geometric_tail_closed_form(self):
        # oracle: truncated geometric sum for v*_n = e^{-n}
        n_max = 60
        v = geometric_vec(1.0, n_max)
        for n in (0, 1, 5, 20):
            expected = math.sqrt(
                math.exp(-2.0 * (n + 1)) * (1 - math.exp(-2.0 * (n_max - n)))
                / (1 - math.exp(-2.0)))
            assert best_n_error(v, n) == pytest.approx(expected, rel=1e-8)

    def test_monotone_nonincreasing(self):
        v = from_moduli(np.random.default_rng(0).uniform(0.1, 2.0, 25))
        errs = [best_n_error(v, n) for n in range(26)]
        assert all(b <= a + 1e-15 for a, b in zip(errs, errs[1:]))

    def test_parseval_split(self):
        v = from_moduli(np.random.default_rng(1).uniform(0.1, 2.0, 30))
        m = v.moduli()
        for n in (0, 3, 17, 30):
            head = float(np.sum(m[:n] ** 2))
            assert best_n_error(v, n) ** 2 + head == pytest.approx(
                v.norm() ** 2, rel=1e-12)


class TestAlgebraicQuasinorm:
    def test_exact_law_gives_one(self):
        p = AlgebraicClassParams(s=1.0, d=1)
        v = from_moduli([n ** (-p.inv_tau) for n in range(1, 200)])
        assert algebraic_quasinorm(v, p) == pytest.approx(1.0, rel=1e-12)

    def test_gap_vector_with_s_half(self):
        # 1/tau = 1 at s = d/2: weights n * (1/n)
        p = AlgebraicClassParams(s=0.5, d=1)
        v = SpectralVector({(6 * (n - 1),): 1.0 / n for n in range(1, 300)},
                           1, HMINUS1)
        assert algebraic_quasinorm(v, p) == pytest.approx(1.0, rel=1e-13)

    def test_band_image_quasinorm(self):
        from spectraladapt.lab import band_apply
        q = 1
        v = SpectralVector({(6 * (n - 1),): 1.0 / n for n in range(1, 300)},
                           1, HMINUS1)
        image = band_apply(v, q)
        p = AlgebraicClassParams(s=0.5, d=1)
        assert algebraic_quasinorm(image, p) == pytest.approx(2 * q + 1,
                                                              rel=1e-13)


class TestExponentialNorm:
    def test_matched_rate_is_one(self):
        # d=1, t=1, omega=2: weight exp(eta n / 2) cancels e^{-(eta/2) n}
        eta = 1.3
        p = ExponentialClassParams(eta=eta, t=1.0, d=1)
        v = from_moduli([math.exp(-eta / 2.0 * n) for n in range(1, 120)])
        assert exponential_norm(v, p) == pytest.approx(1.0, rel=1e-9)

    def test_single_entry(self):
        p = ExponentialClassParams(eta=0.8, t=1.0, d=2)
        m = 0.37
        v = SpectralVector({(0, 0): m}, 2, HMINUS1)
        expected = m * math.exp(0.8 * p.omega ** (-p.tau))
        assert exponential_norm(v, p) == pytest.approx(expected, rel=1e-12)

    def test_interleaved_sum_diverges(self):
        eta = 1.0
        p = ExponentialClassParams(eta=2 * eta, t=1.0, d=1)
        sups = []
        for n_pairs in (10, 20, 40, 60):
            mods = np.repeat(np.exp(-eta * np.arange(1, n_pairs + 1)), 2)
            sups.append(exponential_norm(from_moduli(mods), p))
        assert all(b > a for a, b in zip(sups, sups[1:]))
        assert sups[-1] > 1e20  # grows like e^{eta j}

    def test_euclidean_ball_measure(self):
        assert unit_ball_measure(1) == pytest.approx(2.0)
        assert unit_ball_measure(2) == pytest.approx(math.pi)
        assert unit_ball_measure(3) == pytest.approx(4.0 * math.pi / 3.0)
        assert unit_ball_measure(2, "max") == 4.0


class TestScalingHomogeneity:
    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=20),
           st.floats(1e-3, 1e3))
    def test_both_quasinorms_absolutely_homogeneous(self, mods, c):
        v = from_moduli(mods)
        pa = AlgebraicClassParams(s=0.8, d=1)
        pe = ExponentialClassParams(eta=0.5, t=1.0, d=1)
        assert algebraic_quasinorm(c * v, pa) == pytest.approx(
            c * algebraic_quasinorm(v, pa), rel=1e-10)
        assert exponential_norm(c * v, pe) == pytest.approx(
            c * exponential_norm(v, pe), rel=1e-10)


class TestMinDofs:
    def test_algebraic_formula(self):
        p = AlgebraicClassParams(s=1.0, d=1)
        assert min_dofs(1.0, 0.1, p) == 11

    def test_exponential_formula(self):
        p = ExponentialClassParams(eta=1.0, t=1.0, d=1)
        assert min_dofs(1.0, math.exp(-5.0), p) == 11

    def test_eps_equal_norm(self):
        p = ExponentialClassParams(eta=1.0, t=1.0, d=1)
        assert min_dofs(1.0, 1.0, p) == 1

    def test_eps_above_norm_needs_nothing(self):
        p = ExponentialClassParams(eta=1.0, t=1.0, d=1)
        assert min_dofs(1.0, 1.5, p) == 0

    def test_domain_errors(self):
        p = AlgebraicClassParams(s=1.0, d=1)
        with pytest.raises(ValueError):
            min_dofs(0.0, 0.1, p)
        with pytest.raises(ValueError):
            min_dofs(1.0, -0.1, p)

    def test_consistency_with_best_n_error(self):
        # sequence built so that E_N = norm * phi(N) exactly
        for params in (AlgebraicClassParams(s=1.2, d=1),
                       ExponentialClassParams(eta=0.9, t=1.0, d=1)):
            norm = 2.0
            phis = np.array([params.phi(n) for n in range(400)])
            mods = norm * np.sqrt(phis[:-1] ** 2 - phis[1:] ** 2)
            v = from_moduli(mods)
            for eps in (0.5, 0.1, 0.01):
                n_eps = min_dofs(norm, eps, params)
                assert best_n_error(v, n_eps) <= eps * (1 + 1e-12)


class TestQuasiTriangle:
    def test_split_bound_on_constructed_pair(self):
        d, t = 1, 1.0
        eta1, eta2 = 1.0, 0.5
        p1 = ExponentialClassParams(eta=eta1, t=t, d=d)
        p2 = ExponentialClassParams(eta=eta2, t=t, d=d)
        u1 = SpectralVector({(2 * n,): p1.phi(n) for n in range(1, 150)},
                            1, HMINUS1)
        u2 = SpectralVector({(2 * n + 1,): p2.phi(n) for n in range(1, 150)},
                            1, HMINUS1)
        w = u1 + u2
        norm1 = class_norm_from_errors(u1, p1)
        norm2 = class_norm_from_errors(u2, p2)
        tau = t / d
        share = eta1 ** (-1 / tau) / (eta1 ** (-1 / tau) + eta2 ** (-1 / tau))
        for n in (6, 12, 30, 60):
            n1 = int(math.floor(n * share))
            n2 = n - n1
            bound = norm1 * p1.phi(n1) + norm2 * p2.phi(n2)
            assert best_n_error(w, n) <= bound * (1 + 1e-12)


class TestFitClass:
    def test_algebraic_synthetic(self):
        v = from_moduli([n ** (-2.0) for n in range(1, 400)])
        fit = fit_class(v, "algebraic", d=1)
        assert fit.params.s == pytest.approx(1.5, rel=0.02)
        assert fit.r2 > 0.999

    def test_exponential_synthetic(self):
        v = from_moduli([math.exp(-n) for n in range(1, 120)])
        fit = fit_class(v, "exponential", d=1)
        assert fit.params.t == pytest.approx(1.0, rel=0.05)
        assert fit.params.eta == pytest.approx(2.0, rel=0.05)

    def test_needs_eight_entries(self):
        with pytest.raises(InsufficientDataError):
            fit_class(from_moduli([1.0] * 7), "algebraic")

    def test_summary_format(self):
        v = from_moduli([n ** (-2.0) for n in range(1, 100)])
        line = fit_class(v, "algebraic").summary()
        for token in ("kind=", "params=", "quasinorm=", "r2=", "window="):
            assert token in line

    def test_genuine_rate_fit(self):
        rate, r2 = genuine_rate_fit(from_moduli(
            [math.exp(-0.4 * n) for n in range(1, 80)]))
        assert rate == pytest.approx(0.4, rel=1e-6)
        assert r2 > 0.999999


def test_tail_errors_matches_pointwise():
    v = from_moduli(np.random.default_rng(3).uniform(0.1, 1.0, 40))
    tails = tail_errors(v)
    for n in range(41):
        assert tails[n] == pytest.approx(best_n_error(v, n), rel=1e-12,
                                         abs=1e-300)
