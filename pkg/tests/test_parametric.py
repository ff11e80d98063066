"""Bivariate ordered-probit MLE: likelihood, reparameterization, fitting,
and standard errors.

The expected average log likelihood at the generating parameters is
cross-checked against a quadrature oracle: sum of p*log(p) over cells,
integrated over the covariate law on a fine grid.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticemodels.distributions import bivariate_normal_cdf
from latticemodels.lattice import Dataset, cell_probability
from latticemodels.parametric import (
    FitOptions,
    ParamVector,
    fit,
    log_likelihood,
    loglik_gradient,
    per_obs_loglik,
    standard_errors,
    transform,
    untransform,
)
from latticemodels.simulation import builtin_dgp_spec, generate, replication_seed

DESIGN1 = builtin_dgp_spec("param-design-1")
TRUTH1 = ParamVector(DESIGN1.model.beta, DESIGN1.lattice.thresholds, DESIGN1.errors.rho)


def design1_data(n, seed):
    return generate(DESIGN1, n, seed=replication_seed(seed, 0))


class TestTransform:
    def test_gap_coordinates(self):
        theta = ParamVector(((2.0, -3.0), (3.0,)), ((-1.5, 0.6, 4.0), (-2.5, 2.0)), 0.25)
        vec = transform(theta)
        d1 = vec[3:6]
        assert d1[0] == -1.5
        assert d1[1] == pytest.approx(math.sqrt(2.1))
        assert d1[2] == pytest.approx(math.sqrt(3.4))
        assert vec[-1] == pytest.approx(math.atanh(0.25))

    def test_zero_rho_maps_to_zero(self):
        theta = ParamVector(((1.0,), (1.0,)), ((0.0,), (0.0,)), 0.0)
        assert transform(theta)[-1] == 0.0

    def test_round_trip_known_theta(self):
        theta = ParamVector(((2.0, -3.0), (3.0,)), ((-1.5, 0.6, 4.0), (-2.5, 2.0)), 0.25)
        back = untransform(transform(theta), theta)
        for a, b in zip(transform(theta), transform(back)):
            assert a == pytest.approx(b, abs=1e-12)

    @given(st.lists(st.floats(-3, 3), min_size=8, max_size=8))
    @settings(max_examples=100)
    def test_any_vector_untransforms_to_valid_theta(self, raw):
        # layout for ((1,1),(4,3)): b1, b2, t1_first, gap, gap, t2_first, gap, rho
        shape = ((1, 1), (4, 3))
        vec = np.asarray(raw)
        for i in (3, 4, 6):
            vec[i] = 0.05 + abs(vec[i])
        theta = untransform(vec, shape)
        for t in theta.thresholds:
            assert all(b > a for a, b in zip(t, t[1:]))
        assert -1 < theta.rho < 1
        again = untransform(transform(theta), shape)
        assert np.allclose(transform(theta), transform(again), atol=1e-10)

    def test_round_trip_random_thetas(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            beta = (tuple(rng.normal(size=2)), tuple(rng.normal(size=3)))
            thresholds = (
                tuple(np.sort(rng.uniform(-3, 3, 5))),
                tuple(np.sort(rng.uniform(-3, 3, 2))),
            )
            theta = ParamVector(beta, thresholds, rng.uniform(-0.95, 0.95))
            back = untransform(transform(theta), theta.shape())
            assert np.max(np.abs(back.pack_original() - theta.pack_original())) <= 1e-10


class TestLogLikelihood:
    def test_independence_factorizes_single_obs(self):
        theta = ParamVector(((1.0,), (1.0,)), ((0.0,), (0.5,)), 0.0)
        data = Dataset(
            np.array([[1, 2]]),
            (np.array([[0.3]]), np.array([[-0.1]])),
            (("x",), ("w",)),
        )
        ll = log_likelihood(data, theta)
        from latticemodels.distributions import std_normal_cdf

        p1 = std_normal_cdf(0.0 - 0.3)
        p2 = 1.0 - std_normal_cdf(0.5 + 0.1)
        assert ll == pytest.approx(math.log(p1 * p2), abs=1e-12)

    def test_average_convention(self):
        data1 = design1_data(400, seed=1)
        doubled = Dataset(
            np.vstack([data1.outcomes, data1.outcomes]),
            tuple(np.vstack([c, c]) for c in data1.covariates),
            data1.names,
        )
        assert log_likelihood(doubled, TRUTH1) == pytest.approx(
            log_likelihood(data1, TRUTH1), abs=1e-12
        )

    def test_permutation_invariance(self):
        data = design1_data(300, seed=2)
        perm = np.random.default_rng(0).permutation(data.n)
        shuffled = Dataset(
            data.outcomes[perm],
            tuple(c[perm] for c in data.covariates),
            data.names,
        )
        assert log_likelihood(shuffled, TRUTH1) == pytest.approx(
            log_likelihood(data, TRUTH1), abs=1e-12
        )

    def test_expected_loglik_quadrature_oracle(self):
        # E[log l] = integral over x ~ U[-4,4] of sum_cells p(x) log p(x)
        xs = np.linspace(-4, 4, 2001)
        F = lambda a, b: bivariate_normal_cdf(a, b, 0.33)
        vals = np.empty(xs.size)
        for i, x in enumerate(xs):
            xrow = (np.array([x]), np.array([x]))
            vals[i] = sum(
                p * math.log(p)
                for cell in ((1, 1), (1, 2), (2, 1), (2, 2))
                for p in [cell_probability(cell, xrow, DESIGN1.lattice, DESIGN1.model, F)]
                if p > 0
            )
        expected = np.trapezoid(vals, xs) / 8.0
        data = design1_data(10**5, seed=33)
        assert log_likelihood(data, TRUTH1) == pytest.approx(expected, abs=2e-3)

    def test_zero_mass_cell_is_reported(self):
        theta = ParamVector(((40.0,), (1.0,)), ((0.0,), (0.0,)), 0.0)
        data = Dataset(
            np.array([[1, 1]]),
            (np.array([[5.0]]), np.array([[0.0]])),
            (("x",), ("w",)),
        )
        with pytest.raises(ValueError, match="observation"):
            log_likelihood(data, theta)


class TestGradient:
    def test_finite_difference_agreement(self):
        data = design1_data(500, seed=4)
        rng = np.random.default_rng(9)
        shape = TRUTH1.shape()
        center = transform(TRUTH1)
        for _ in range(20):
            vec = center + rng.uniform(-0.3, 0.3, center.size)
            g_fast = loglik_gradient(data, vec, shape, step=1e-6)
            g_slow = np.empty_like(g_fast)
            h = 1e-5
            for i in range(vec.size):
                up, dn = vec.copy(), vec.copy()
                up[i] += h
                dn[i] -= h
                g_slow[i] = (
                    log_likelihood(data, untransform(up, shape))
                    - log_likelihood(data, untransform(dn, shape))
                ) / (2 * h)
            denom = max(np.max(np.abs(g_slow)), 1e-8)
            assert np.max(np.abs(g_fast - g_slow)) / denom <= 1e-4


class TestFit:
    def test_single_replication_recovers_truth(self):
        data = design1_data(1000, seed=5)
        result = fit(data, options=FitOptions(se_kind=None))
        assert result.converged
        sds = np.array([0.35, 0.23, 0.16, 0.15, 0.14])
        truths = np.array([3.0, 2.5, 1.0, 1.25, 0.33])
        est = result.estimate.pack_original()
        assert np.all(np.abs(est - truths) <= 4 * sds)

    def test_loglik_improves_on_init(self):
        data = design1_data(800, seed=6)
        result = fit(data, options=FitOptions(se_kind=None))
        assert result.loglik >= log_likelihood(data, result.init) - 1e-12

    def test_null_correlation_recovered(self):
        spec0 = builtin_dgp_spec("param-design-1")
        spec0 = type(spec0)(
            spec0.lattice,
            spec0.model,
            spec0.covariates,
            type(spec0.errors)("gaussian", rho=0.0),
            spec0.seed,
        )
        data = generate(spec0, 3000, seed=replication_seed(7, 0))
        result = fit(data)
        rho_hat = result.estimate.rho
        rho_se = result.se_table()[-1][2]
        assert abs(rho_hat) <= 4 * rho_se

    def test_degenerate_data_rejected(self):
        data = design1_data(200, seed=8)
        capped = Dataset(
            np.minimum(data.outcomes, np.array([1, 2])),
            data.covariates,
            data.names,
        )
        with pytest.raises(ValueError, match="degenerate"):
            fit(capped, m_counts=(2, 2))

    def test_predicted_masses_sum_to_one(self):
        data = design1_data(300, seed=9)
        result = fit(data, options=FitOptions(se_kind=None))
        ll = per_obs_loglik(data, result.estimate)
        assert np.all(np.isfinite(ll))
        theta = result.estimate
        F = lambda a, b: bivariate_normal_cdf(a, b, theta.rho)
        x = (data.covariates[0][0], data.covariates[1][0])
        total = sum(
            cell_probability((j1, j2), x, theta.lattice(), theta.model(), F)
            for j1 in (1, 2)
            for j2 in (1, 2)
        )
        assert total == pytest.approx(1.0, abs=1e-9)


class TestStandardErrors:
    def test_positive_and_sqrt_n_rate(self):
        # binary 2x2 spec: every observation is informative, so the
        # estimated information concentrates fast and the rate is sharp
        from latticemodels.distributions import Law
        from latticemodels.lattice import IndexModel, LatticeSpec
        from latticemodels.simulation import CovariateSpec, DgpSpec, ErrorLaw

        spec = DgpSpec(
            LatticeSpec(((0.0,), (0.0,))),
            IndexModel(((1.0,), (1.0,))),
            (CovariateSpec("x", Law.uniform(-1.0, 1.0), (1, 2)),),
            ErrorLaw("gaussian", rho=0.4),
        )
        truth = ParamVector(spec.model.beta, spec.lattice.thresholds, spec.errors.rho)
        big = generate(spec, 4000, seed=replication_seed(10, 0))
        half = Dataset(
            big.outcomes[:2000], tuple(c[:2000] for c in big.covariates), big.names
        )
        se_big, _ = standard_errors(big, truth)
        se_half, _ = standard_errors(half, truth)
        assert np.all(se_half > 0) and np.all(se_big > 0)
        ratio = se_big / se_half
        assert np.all(np.abs(ratio - 1 / math.sqrt(2)) <= 0.15 / math.sqrt(2))

    def test_design1_beta_se_scale(self):
        data = design1_data(1000, seed=12)
        result = fit(data)
        se_beta1 = result.se_table()[0][2]
        assert 0.35 / 1.5 <= se_beta1 <= 0.35 * 1.5

    def test_outer_product_close_to_sandwich(self):
        data = design1_data(10**4, seed=13)
        theta = fit(data, options=FitOptions(se_kind=None)).estimate
        se_op, _ = standard_errors(data, theta, kind="outer-product")
        se_sw, _ = standard_errors(data, theta, kind="sandwich")
        assert np.all(np.abs(se_op / se_sw - 1.0) <= 0.2)

    def test_boundary_theta_rejected(self):
        data = design1_data(200, seed=14)
        bad = ParamVector(TRUTH1.beta, TRUTH1.thresholds, 1 - 1e-12)
        with pytest.raises(ValueError):
            standard_errors(data, bad)
