import math

import pytest

from spectraladapt.algorithms import (CSV_HEADER, AlgorithmConfig, Problem,
                                      check_cardinality_bounds,
                                      predicted_contraction, run)
from spectraladapt.core import H1, HMINUS1, SpectralVector, ball_indices
from spectraladapt.galerkin import energy_norm, estimator, residual, solve
from spectraladapt.operators import CoefficientSpectrum, apply_operator, make_operator
from spectraladapt.sparsity import fit_class

ROOT2PI = math.sqrt(2.0 * math.pi)


def mild_op(spread=0.1):
    nu = CoefficientSpectrum({(0,): ROOT2PI, (1,): spread * ROOT2PI,
                              (-1,): spread * ROOT2PI}, 1)
    return make_operator(nu, CoefficientSpectrum.constant(1.0, 1),
                         oversample=256)


def identity_problem():
    op = make_operator(CoefficientSpectrum.constant(1.0, 1),
                       CoefficientSpectrum.constant(1.0, 1))
    f = SpectralVector({(k,): float(10 - k) for k in range(10)}, 1, HMINUS1)
    u = SpectralVector(dict(f.entries), 1, H1)
    return Problem(op, f, exact=u, label="identity")


def exp_problem(eta=0.6, n_modes=40, spread=0.1):
    """Manufactured 1D problem with exponentially decaying solution."""
    op = mild_op(spread)
    u = SpectralVector({(k,): math.exp(-eta * abs(k))
                        for k in range(-n_modes, n_modes + 1)}, 1, H1)
    f = apply_operator(op, u)
    return Problem(op, f, exact=u, label="exp1d")


def algebraic_problem(s=1.0, n_modes=2000, spread=0.1):
    op = mild_op(spread)
    inv_tau = s + 0.5
    entries = {}
    for n in range(1, n_modes + 1):
        k = (n // 2) if n % 2 else -(n // 2)
        entries[(k,)] = n ** (-inv_tau)
    u = SpectralVector(entries, 1, H1)
    f = apply_operator(op, u)
    return Problem(op, f, exact=u, label="alg1d")


def two_dim_problem():
    nu = CoefficientSpectrum({(0, 0): 2 * math.pi,
                              (1, 0): 0.15 * 2 * math.pi,
                              (-1, 0): 0.15 * 2 * math.pi}, 2)
    sigma = CoefficientSpectrum({(0, 0): 2 * math.pi,
                                 (0, 1): 0.15 * 2 * math.pi,
                                 (0, -1): 0.15 * 2 * math.pi}, 2)
    op = make_operator(nu, sigma, oversample=128)
    u = SpectralVector({(i, j): math.exp(-0.8 * (i * i + j * j))
                        for i in range(-3, 4) for j in range(-3, 4)}, 2, H1)
    f = apply_operator(op, u)
    return Problem(op, f, exact=u, label="mild2d")


class TestConfig:
    def test_variant_names_normalized(self):
        cfg = AlgorithmConfig(variant="f-adfour", theta=0.5, gamma=0.1)
        assert cfg.variant == "f_adfour"

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            AlgorithmConfig(variant="bisection")

    def test_gamma_must_sit_below_theta(self):
        with pytest.raises(ValueError):
            AlgorithmConfig(variant="f_adfour", theta=0.3, gamma=0.3)
        with pytest.raises(ValueError):
            AlgorithmConfig(variant="f_adfour", theta=0.3)

    def test_theta_domain(self):
        with pytest.raises(ValueError):
            AlgorithmConfig(theta=1.0)

    def test_coarsening_with_small_theta_warns(self):
        problem = exp_problem(n_modes=10)
        with pytest.warns(UserWarning):
            run(problem, AlgorithmConfig(variant="c_adfour", theta=0.3,
                                         tol=1e-3, max_outer=2))


class TestPredictedContraction:
    def test_formulas(self):
        a, b = 0.8, 1.2
        cfg = AlgorithmConfig(variant="adfour", theta=0.6)
        assert predicted_contraction(cfg, a, b) == pytest.approx(
            math.sqrt(1 - (a / b) * 0.36))
        cfg = AlgorithmConfig(variant="f_adfour", theta=0.6, gamma=0.2)
        th = (0.6 - 0.2) / 1.2
        assert predicted_contraction(cfg, a, b) == pytest.approx(
            math.sqrt(1 - (a / b) * th * th))
        cfg = AlgorithmConfig(variant="a_adfour", theta=0.6)
        assert predicted_contraction(cfg, a, b) == pytest.approx(
            math.sqrt((b / a)) * math.sqrt(1 - 0.36), rel=1e-12)
        cfg = AlgorithmConfig(variant="pc_adfour", theta=0.6)
        assert predicted_contraction(cfg, a, b) == pytest.approx(
            3 * (b / a) * math.sqrt(1 - 0.36))


class TestAdfour:
    def test_identity_converges_in_two_iterations(self):
        trace = run(identity_problem(),
                    AlgorithmConfig(variant="adfour", theta=0.99, tol=1e-12,
                                    max_outer=10))
        assert trace.termination == "tolerance reached"
        assert len(trace.rows) - 1 <= 2

    def test_rows_match_schema(self):
        trace = run(exp_problem(n_modes=15),
                    AlgorithmConfig(theta=0.8, tol=1e-5, max_outer=30))
        csv = trace.to_csv().splitlines()
        assert csv[0] == CSV_HEADER
        assert len(csv) == len(trace.rows) + 1
        first = csv[1].split(",")
        assert first[0] == "0" and first[1] == "0"

    def test_residuals_strictly_decreasing(self):
        trace = run(exp_problem(),
                    AlgorithmConfig(theta=0.6, tol=1e-6, max_outer=60))
        res = [r.residual_norm for r in trace.rows]
        assert all(b < a for a, b in zip(res, res[1:]))

    def test_monotone_nesting_and_counts(self):
        problem = exp_problem()
        trace = run(problem, AlgorithmConfig(theta=0.5, tol=1e-5,
                                             max_outer=60))
        cards = trace.cards()
        assert all(b >= a for a, b in zip(cards, cards[1:]))
        marks = [r.marked for r in trace.rows[1:]]
        assert all(cards[i + 1] - cards[i] == marks[i]
                   for i in range(len(marks)))

    def test_contraction_bound_iterationwise(self):
        problem = exp_problem()
        for theta in (0.3, 0.6, 0.9):
            cfg = AlgorithmConfig(theta=theta, tol=1e-4 * problem.data.norm(),
                                  max_outer=25)
            trace = run(problem, cfg)
            assert not trace.flagged
            for ratio in trace.energy_ratios():
                assert ratio <= trace.predicted_rho * (1 + 1e-6)

    def test_termination_iteration_bound(self):
        problem = exp_problem()
        tol = 1e-5 * problem.data.norm()
        cfg = AlgorithmConfig(theta=0.9, tol=tol, max_outer=200)
        trace = run(problem, cfg)
        assert trace.termination == "tolerance reached"
        cap = math.ceil(math.log(problem.data.norm() / tol)
                        / math.log(1 / trace.predicted_rho)) + 1
        assert len(trace.rows) - 1 <= cap


class TestFeasibleVariant:
    def test_contraction_with_effective_theta(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="f_adfour", theta=0.6, gamma=0.2,
                              tol=1e-4 * problem.data.norm(), max_outer=30)
        trace = run(problem, cfg)
        for ratio in trace.energy_ratios():
            assert ratio <= trace.predicted_rho * (1 + 1e-6)

    def test_gamma_bound_recorded_small(self):
        # polynomial data certifies loosely at every rung
        problem = exp_problem(n_modes=20)
        cfg = AlgorithmConfig(variant="f_adfour", theta=0.6, gamma=0.15,
                              tol=1e-4 * problem.data.norm(), max_outer=20)
        trace = run(problem, cfg)
        assert trace.termination in ("tolerance reached",
                                     "converged within data accuracy")


class TestAggressiveVariant:
    def test_enrichment_radius_derived_and_logged(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="a_adfour", theta=0.9,
                              tol=1e-4 * problem.data.norm(), max_outer=20)
        trace = run(problem, cfg)
        assert trace.enrichment_radius is not None
        assert trace.enrichment_radius >= 0
        assert any("enrichment radius" in n for n in trace.notes)

    def test_contraction_bound(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="a_adfour", theta=0.9,
                              tol=1e-4 * problem.data.norm(), max_outer=20)
        trace = run(problem, cfg)
        for ratio in trace.energy_ratios():
            assert ratio <= trace.predicted_rho * (1 + 1e-6)

    def test_override_radius(self):
        problem = exp_problem(n_modes=15)
        cfg = AlgorithmConfig(variant="a_adfour", theta=0.7,
                              enrichment_radius=2, tol=1e-3, max_outer=10)
        trace = run(problem, cfg)
        assert trace.enrichment_radius == 2


class TestCoarseningVariants:
    def test_c_adfour_inner_count_bound(self):
        problem = exp_problem()
        theta = 0.98
        cfg = AlgorithmConfig(variant="c_adfour", theta=theta,
                              tol=1e-4 * problem.data.norm(), max_outer=15)
        trace = run(problem, cfg)
        a, b = problem.operator.alpha_star, problem.operator.alpha_upper
        rho_inner = math.sqrt(1 - (a / b) * theta * theta)
        cap = 1 + math.log((a / b) * (1 - theta * theta)) / (2 * math.log(rho_inner))
        for row in trace.rows[1:]:
            assert row.inner_iters <= cap

    def test_c_adfour_contracts_with_large_theta(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="c_adfour", theta=0.98,
                              tol=1e-4 * problem.data.norm(), max_outer=15)
        trace = run(problem, cfg)
        assert trace.predicted_rho < 1
        assert trace.termination == "tolerance reached"
        for ratio in trace.energy_ratios():
            assert ratio <= trace.predicted_rho * (1 + 1e-6)

    def test_c_adfour_coarsen_eps_matches_listing(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="c_adfour", theta=0.98,
                              tol=1e-3 * problem.data.norm(), max_outer=8)
        trace = run(problem, cfg)
        # eps_n = |r_inner| / sqrt(alpha_*) and the recorded residual shows
        # the post-coarsening re-solve; eps must be positive and shrinking
        eps = [r.coarsen_eps for r in trace.rows[1:]]
        assert all(e > 0 for e in eps)
        assert all(b < a for a, b in zip(eps, eps[1:]))

    def test_pc_adfour_runs_and_bounds(self):
        problem = exp_problem()
        cfg = AlgorithmConfig(variant="pc_adfour", theta=0.98,
                              tol=1e-4 * problem.data.norm(), max_outer=15)
        trace = run(problem, cfg)
        assert trace.predicted_rho < 1
        for ratio in trace.energy_ratios():
            assert ratio <= trace.predicted_rho * (1 + 1e-6)
        assert all(r.peak_card >= r.card_lambda for r in trace.rows)

    def test_coarsened_sets_stay_lean(self):
        # coarsening keeps the active set near the best-N support size
        problem = exp_problem(eta=0.8)
        cfg = AlgorithmConfig(variant="c_adfour", theta=0.98,
                              tol=1e-4 * problem.data.norm(), max_outer=12)
        trace = run(problem, cfg)
        plain = run(problem, AlgorithmConfig(theta=0.98,
                                             tol=1e-4 * problem.data.norm(),
                                             max_outer=40))
        assert trace.rows[-1].card_lambda <= plain.rows[-1].card_lambda + 5


class TestTwoDimensional:
    def test_adfour_contracts_in_2d(self):
        problem = two_dim_problem()
        cfg = AlgorithmConfig(theta=0.6, tol=1e-4 * problem.data.norm(),
                              max_outer=15)
        trace = run(problem, cfg)
        for ratio in trace.energy_ratios():
            assert ratio <= trace.predicted_rho * (1 + 1e-6)
        assert trace.rows[-1].residual_norm < trace.rows[0].residual_norm


class TestDorflerPropertyCrossCheck:
    def test_energy_reduction_implies_bulk(self):
        # theta below sqrt(alpha_*/alpha^*); mu_theta = 1-(alpha^*/alpha_*)th^2
        problem = exp_problem()
        op = problem.operator
        theta = 0.5
        mu_theta = 1 - (op.alpha_upper / op.alpha_star) * theta * theta
        assert mu_theta > 0
        u = problem.exact
        pairs = [(ball_indices(1, 3), ball_indices(1, 8)),
                 (ball_indices(1, 5), ball_indices(1, 12)),
                 (ball_indices(1, 2), ball_indices(1, 20))]
        for lam, lam_star in pairs:
            sa = solve(op, problem.data, lam)
            sb = solve(op, problem.data, lam_star)
            ea = energy_norm(op, u - sa.coefficients)
            eb = energy_norm(op, u - sb.coefficients)
            if eb * eb <= mu_theta * ea * ea:
                r = residual(op, problem.data, sa)
                assert estimator(r, lam_star) >= theta * estimator(r) * (1 - 1e-9)


class TestCardinalityDiagnostics:
    def test_algebraic_constant_stays_bounded(self):
        problem = algebraic_problem(s=1.0)
        cfg = AlgorithmConfig(theta=0.5, tol=0.0, max_outer=15)
        trace = run(problem, cfg)
        fit = fit_class(problem.exact, "algebraic", d=1)
        report = check_cardinality_bounds(trace, fit,
                                          problem.operator.alpha_star,
                                          problem.operator.alpha_upper)
        assert report.kind == "algebraic"
        assert not report.growth_flag
        assert report.max_implied / report.min_implied < 2.0

    def test_exponential_log_constant(self):
        problem = exp_problem(eta=0.8)
        cfg = AlgorithmConfig(variant="c_adfour", theta=0.98,
                              tol=1e-4 * problem.data.norm(), max_outer=12)
        trace = run(problem, cfg)
        fit = fit_class(problem.exact, "exponential", d=1)
        report = check_cardinality_bounds(trace, fit,
                                          problem.operator.alpha_star,
                                          problem.operator.alpha_upper)
        assert report.implied_log_c is not None
        assert report.implied_log_c <= 5.0

    def test_single_iteration_trace(self):
        problem = exp_problem(n_modes=10)
        trace = run(problem, AlgorithmConfig(theta=0.9, tol=0.0, max_outer=1))
        fit = fit_class(problem.exact, "exponential", d=1)
        report = check_cardinality_bounds(trace, fit, 0.8, 1.2)
        assert len(report.rows) == 1

    def test_summary_text(self):
        problem = exp_problem(n_modes=12)
        trace = run(problem, AlgorithmConfig(theta=0.7, tol=0.0, max_outer=3))
        fit = fit_class(problem.exact, "exponential", d=1)
        text = str(check_cardinality_bounds(trace, fit, 0.8, 1.2))
        assert "cardinality check" in text
