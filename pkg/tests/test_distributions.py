"""Probability kernels: frozen high-precision oracles plus shape invariants.

The bivariate CDF is cross-checked against two independent routes: frozen
mpmath (30 digit) values of the conditioning integral, and a live
scipy.integrate.quad evaluation of the same integral. The production code
uses the arcsin-substituted correlation integral, so agreement is a real
dual-route check.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from latticemodels.distributions import (
    Correlation,
    Law,
    bivariate_normal_cdf,
    sample,
    std_normal_cdf,
    std_normal_quantile,
)

# mpmath mp.dps=30 values of int_{-inf}^{a} pdf(e) * Phi((b - rho e)/sqrt(1-rho^2)) de
_PHI2_ORACLE = (
    (0.0, 0.0, 0.0, 0.25),
    (0.0, 0.0, 0.6, 0.35241638234956672),
    (1.0, -0.5, 0.3, 0.28313842024448095),
    (-1.0, -0.8, 0.6, 0.087531962653316093),
    (2.0, 1.5, -0.7, 0.91044287040798786),
    (-2.5, 2.5, 0.95, 0.0062096653257761352),
    (0.5, 0.5, -0.95, 0.38295208420439835),
    (3.0, -3.0, 0.5, 0.0013498979601550727),
    (-0.3, 1.2, -0.25, 0.31883626290712353),
    (1.96, 1.96, 0.8, 0.96097412829917072),
)


def phi2_quad(a, b, rho):
    """Conditioning-integral form of the bivariate normal CDF via quad."""
    if rho == 0.0:
        return std_normal_cdf(a) * std_normal_cdf(b)
    s = math.sqrt(1.0 - rho * rho)

    def integrand(e):
        return math.exp(-0.5 * e * e) / math.sqrt(2 * math.pi) * std_normal_cdf(
            (b - rho * e) / s
        )

    lo = max(-8.5, a - 17.0)
    value, _ = integrate.quad(integrand, lo, min(a, 8.5), epsabs=1e-12, limit=200)
    return value


class TestStdNormalCdf:
    def test_symmetry_point(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_limits(self):
        assert std_normal_cdf(math.inf) == 1.0
        assert std_normal_cdf(-math.inf) == 0.0

    def test_frozen_values(self):
        assert std_normal_cdf(1.96) == pytest.approx(0.97500210485177957, abs=1e-12)
        assert std_normal_cdf(-0.5) == pytest.approx(0.3085375387259869, abs=1e-12)
        assert std_normal_cdf(3.1) == pytest.approx(0.99903239678678164, abs=1e-12)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            std_normal_cdf(float("nan"))

    def test_vector_shape(self):
        out = std_normal_cdf(np.array([-1.0, 0.0, 1.0]))
        assert out.shape == (3,)
        assert np.all((out >= 0) & (out <= 1))


class TestStdNormalQuantile:
    def test_median(self):
        assert std_normal_quantile(0.5) == pytest.approx(0.0, abs=1e-12)

    def test_frozen_inverse(self):
        assert std_normal_quantile(0.97500210485177957) == pytest.approx(1.96, abs=1e-6)

    def test_domain_errors(self):
        for p in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                std_normal_quantile(p)

    @given(st.floats(min_value=-6.0, max_value=6.0))
    def test_round_trip(self, x):
        assert std_normal_quantile(std_normal_cdf(x)) == pytest.approx(x, abs=1e-8)

    @given(st.floats(min_value=1e-10, max_value=1 - 1e-10))
    def test_forward_round_trip(self, p):
        assert std_normal_cdf(std_normal_quantile(p)) == pytest.approx(p, abs=1e-10)


class TestCorrelation:
    def test_bounds_enforced(self):
        Correlation(0.999)
        for bad in (1.0, -1.0, 1.5, math.inf, math.nan):
            with pytest.raises(ValueError):
                Correlation(bad)


class TestBivariateNormalCdf:
    @pytest.mark.parametrize("a,b,rho,expected", _PHI2_ORACLE)
    def test_frozen_oracle(self, a, b, rho, expected):
        assert bivariate_normal_cdf(a, b, rho) == pytest.approx(expected, abs=1e-10)

    def test_quad_oracle_random_points(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            a, b = rng.uniform(-4, 4, 2)
            rho = rng.uniform(-0.99, 0.99)
            assert bivariate_normal_cdf(a, b, rho) == pytest.approx(
                phi2_quad(a, b, rho), abs=1e-8
            )

    def test_arcsin_identity_at_origin(self):
        for rho in (-0.95, -0.6, -0.2, 0.0, 0.33, 0.6, 0.925, 0.99):
            closed = 0.25 + math.asin(rho) / (2 * math.pi)
            assert bivariate_normal_cdf(0.0, 0.0, rho) == pytest.approx(
                closed, abs=1e-10
            )

    def test_infinity_marginalization(self):
        for b in (-1.3, 0.0, 2.2):
            assert bivariate_normal_cdf(math.inf, b, 0.7) == pytest.approx(
                std_normal_cdf(b), abs=1e-14
            )
            assert bivariate_normal_cdf(b, math.inf, 0.7) == pytest.approx(
                std_normal_cdf(b), abs=1e-14
            )
        assert bivariate_normal_cdf(-math.inf, 1.0, 0.5) == 0.0
        assert bivariate_normal_cdf(1.0, -math.inf, 0.5) == 0.0
        assert bivariate_normal_cdf(math.inf, math.inf, 0.5) == 1.0

    def test_zero_rho_factorizes(self):
        grid = np.linspace(-5, 5, 21)
        a, b = np.meshgrid(grid, grid)
        joint = bivariate_normal_cdf(a, b, 0.0)
        product = std_normal_cdf(a) * std_normal_cdf(b)
        assert np.max(np.abs(joint - product)) <= 1e-12

    @pytest.mark.parametrize("rho", [-0.95, -0.5, 0.0, 0.5, 0.95])
    def test_monotone_in_each_argument(self, rho):
        grid = np.linspace(-4, 4, 41)
        a, b = np.meshgrid(grid, grid, indexing="ij")
        f = bivariate_normal_cdf(a, b, rho)
        assert np.all(np.diff(f, axis=0) >= -1e-12)
        assert np.all(np.diff(f, axis=1) >= -1e-12)

    @pytest.mark.parametrize("rho", [-0.97, -0.4, 0.3, 0.8, 0.96])
    def test_rectangle_inequality(self, rho):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a1, b1 = rng.uniform(-4, 3, 2)
            a2 = a1 + rng.uniform(0.01, 2)
            b2 = b1 + rng.uniform(0.01, 2)
            mass = (
                bivariate_normal_cdf(a2, b2, rho)
                - bivariate_normal_cdf(a1, b2, rho)
                - bivariate_normal_cdf(a2, b1, rho)
                + bivariate_normal_cdf(a1, b1, rho)
            )
            assert mass >= -1e-12

    @given(
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-5, max_value=5),
        st.floats(min_value=-0.99, max_value=0.99),
    )
    @settings(max_examples=80)
    def test_symmetry_in_arguments(self, a, b, rho):
        assert bivariate_normal_cdf(a, b, rho) == pytest.approx(
            bivariate_normal_cdf(b, a, rho), abs=1e-13
        )

    def test_nan_and_bad_rho_rejected(self):
        with pytest.raises(ValueError):
            bivariate_normal_cdf(float("nan"), 0.0, 0.5)
        with pytest.raises(ValueError):
            bivariate_normal_cdf(0.0, 0.0, 1.0)


class TestSample:
    def test_uniform_lln(self):
        x = sample(Law.uniform(-0.5, 0.5), 10**6, seed=1)
        assert abs(x.mean()) <= 0.002

    def test_choice_frequencies(self):
        values = (-2.5, -1.5, -0.5, 0.5)
        x = sample(Law.choice(values), 10**5, seed=2)
        for v in values:
            assert np.mean(x == v) == pytest.approx(0.25, abs=0.01)

    def test_determinism(self):
        a = sample(Law.laplace(0, 1), 1000, seed=3)
        b = sample(Law.laplace(0, 1), 1000, seed=3)
        assert np.array_equal(a, b)

    def test_unknown_law_rejected(self):
        with pytest.raises(ValueError):
            Law("cauchy", (0, 1))

    def test_seed_sensitivity(self):
        a = sample(Law.normal(), 100, seed=1)
        b = sample(Law.normal(), 100, seed=2)
        assert not np.array_equal(a, b)


class TestLawCdf:
    @pytest.mark.parametrize(
        "law",
        [
            Law.uniform(-2, 2),
            Law.normal(0.5, 1.5),
            Law.laplace(0, 1),
            Law.student_t(7),
            Law.logistic(3, 2),
            Law.choice((-2.5, -1.5, -0.5, 0.5)),
        ],
        ids=lambda law: law.kind,
    )
    def test_matches_empirical(self, law):
        x = sample(law, 10**5, seed=11)
        for q in (-1.0, 0.0, 0.8, 2.5):
            assert law.cdf(q) == pytest.approx(np.mean(x <= q), abs=0.01)

    def test_monotone_and_bounded(self):
        grid = np.linspace(-30, 30, 301)
        for law in (Law.laplace(0, 1), Law.logistic(3, 2), Law.student_t(7)):
            vals = law.cdf(grid)
            assert np.all(np.diff(vals) >= 0)
            assert vals[0] >= 0 and vals[-1] <= 1

    def test_degenerate_step(self):
        law = Law.normal(1.0, 0.0)
        assert law.cdf(0.99) == 0.0
        assert law.cdf(1.0) == 1.0
        assert law.is_degenerate()
