"""Structural layer: categorization, implied rectangles, cell probabilities,
and the CSV/JSON round trips.

The reference cell mass at thresholds {-1,1} x {-0.8,0.8}, x=0, rho=0.6 is
pinned two ways: a frozen mpmath (30 digit) value and a live 10^7-draw
Monte Carlo integration.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticemodels.distributions import bivariate_normal_cdf, std_normal_cdf
from latticemodels.lattice import (
    Dataset,
    IndexModel,
    LatticeSpec,
    Rectangle,
    categorize,
    cell_probability,
    dump_json,
    implied_rectangle,
    load_json,
    read_csv,
    rectangle_bounds,
    write_csv,
)

SPEC = LatticeSpec(((-1.0, 1.0), (-0.8, 0.8)))
MODEL = IndexModel(((0.8,), (-0.5,)))


def all_cells(spec):
    m1, m2 = spec.category_counts
    return [(j1, j2) for j1 in range(1, m1 + 1) for j2 in range(1, m2 + 1)]


class TestLatticeSpec:
    def test_counts_and_extension(self):
        assert SPEC.dims == 2
        assert SPEC.category_counts == (3, 3)
        ext = SPEC.extended(1)
        assert ext[0] == -math.inf and ext[-1] == math.inf
        assert list(ext[1:-1]) == [-1.0, 1.0]

    def test_rejects_bad_thresholds(self):
        with pytest.raises(ValueError):
            LatticeSpec(((1.0, -1.0), (-0.8, 0.8)))
        with pytest.raises(ValueError):
            LatticeSpec(((0.0, 0.0),))
        with pytest.raises(ValueError):
            LatticeSpec(((-math.inf, 0.0),))

    def test_single_category_dimension_allowed(self):
        spec = LatticeSpec(((), (-0.5,)))
        assert spec.category_counts == (1, 2)

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "spec.json"
        dump_json(SPEC.to_dict(), path)
        assert LatticeSpec.from_dict(load_json(path)) == SPEC
        dump_json(MODEL.to_dict(), path)
        assert IndexModel.from_dict(load_json(path)) == MODEL


class TestCategorize:
    def test_interior_point(self):
        assert categorize(np.array([0.5, -1.2]), SPEC) == (2, 1)

    def test_tie_goes_to_lower_category(self):
        assert categorize(np.array([-1.0, 0.0]), SPEC) == (1, 2)

    def test_top_cell_via_sentinel(self):
        assert categorize(np.array([10.0, 10.0]), SPEC) == (3, 3)

    def test_batch_shape(self):
        pts = np.array([[0.5, -1.2], [-1.0, 0.0], [10.0, 10.0]])
        cells = categorize(pts, SPEC)
        assert cells.tolist() == [[2, 1], [1, 2], [3, 3]]

    @given(st.floats(-20, 20), st.floats(-20, 20))
    @settings(max_examples=60)
    def test_always_in_bounds(self, u, v):
        j1, j2 = categorize(np.array([u, v]), SPEC)
        assert 1 <= j1 <= 3 and 1 <= j2 <= 3


class TestImpliedRectangle:
    def test_zero_index_corner_cell(self):
        rect = implied_rectangle((1, 1), (np.zeros(1), np.zeros(1)), SPEC, MODEL)
        assert rect.lower == (-math.inf, -math.inf)
        assert rect.upper == (-1.0, -0.8)

    def test_index_shift(self):
        rect = implied_rectangle((2, 1), (np.array([1.0]), np.zeros(1)), SPEC, MODEL)
        assert rect.lower[0] == pytest.approx(-1.8)
        assert rect.upper[0] == pytest.approx(0.2)

    def test_round_trip_with_categorize(self):
        rng = np.random.default_rng(5)
        n = 10**4
        x = (rng.uniform(-2, 2, (n, 1)), rng.uniform(-2, 2, (n, 1)))
        eps = rng.standard_normal((n, 2))
        latent = np.column_stack(
            [x[0] @ MODEL.beta[0] + eps[:, 0], x[1] @ MODEL.beta[1] + eps[:, 1]]
        )
        cells = categorize(latent, SPEC)
        lower, upper = rectangle_bounds(cells, x, SPEC, MODEL)
        assert np.all((lower < eps) & (eps <= upper))

    def test_half_open_membership(self):
        rect = Rectangle((-1.0, -1.0), (1.0, 1.0))
        assert rect.contains((1.0, 0.0))
        assert not rect.contains((-1.0, 0.0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            implied_rectangle((1, 1, 1), (np.zeros(1), np.zeros(1)), SPEC, MODEL)


class TestCellProbability:
    def test_independence_factorizes(self):
        x = (np.array([0.3]), np.array([-0.2]))
        F = lambda a, b: std_normal_cdf(a) * std_normal_cdf(b)
        for cell in all_cells(SPEC):
            rect = implied_rectangle(cell, x, SPEC, MODEL)
            marginal = 1.0
            for d in range(2):
                hi = std_normal_cdf(rect.upper[d])
                lo = 0.0 if rect.lower[d] == -math.inf else std_normal_cdf(rect.lower[d])
                marginal *= hi - lo
            assert cell_probability(cell, x, SPEC, MODEL, F) == pytest.approx(
                marginal, abs=1e-12
            )

    def test_single_cell_space_has_mass_one(self):
        spec = LatticeSpec(((), ()))
        model = IndexModel(((1.0,), (1.0,)))
        x = (np.array([0.7]), np.array([-0.7]))
        F = lambda a, b: bivariate_normal_cdf(a, b, 0.4)
        assert cell_probability((1, 1), x, spec, model, F) == pytest.approx(1.0)

    def test_corner_cell_equals_phi2(self):
        x = (np.zeros(1), np.zeros(1))
        F = lambda a, b: bivariate_normal_cdf(a, b, 0.6)
        p = cell_probability((1, 1), x, SPEC, MODEL, F)
        assert p == pytest.approx(bivariate_normal_cdf(-1.0, -0.8, 0.6), abs=1e-12)
        # frozen mpmath(30 dps) value of the conditioning integral
        assert p == pytest.approx(0.087531962653316093, abs=1e-10)

    def test_corner_cell_against_monte_carlo(self):
        rng = np.random.default_rng(123)
        rho = 0.6
        hits = 0
        n = 10**7
        for _ in range(10):
            z = rng.standard_normal((n // 10, 2))
            e1 = z[:, 0]
            e2 = rho * z[:, 0] + math.sqrt(1 - rho**2) * z[:, 1]
            hits += int(np.count_nonzero((e1 <= -1.0) & (e2 <= -0.8)))
        x = (np.zeros(1), np.zeros(1))
        F = lambda a, b: bivariate_normal_cdf(a, b, rho)
        p = cell_probability((1, 1), x, SPEC, MODEL, F)
        assert p == pytest.approx(hits / n, abs=3e-4)

    def test_partition_sums_to_one_random_parameterizations(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            m1, m2 = rng.integers(2, 6, 2)
            t1 = np.sort(rng.uniform(-3, 3, m1 - 1))
            t2 = np.sort(rng.uniform(-3, 3, m2 - 1))
            if np.any(np.diff(t1) <= 1e-9) or np.any(np.diff(t2) <= 1e-9):
                continue
            spec = LatticeSpec((tuple(t1), tuple(t2)))
            k1, k2 = rng.integers(1, 4, 2)
            model = IndexModel(
                (tuple(rng.uniform(-2, 2, k1)), tuple(rng.uniform(-2, 2, k2)))
            )
            x = (rng.uniform(-1, 1, k1), rng.uniform(-1, 1, k2))
            rho = rng.uniform(-0.9, 0.9)
            F = lambda a, b: bivariate_normal_cdf(a, b, rho)
            total = sum(
                cell_probability(c, x, spec, model, F) for c in all_cells(spec)
            )
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_marginal_coherence(self):
        x = (np.array([0.4]), np.array([0.1]))
        rho = 0.35
        F = lambda a, b: bivariate_normal_cdf(a, b, rho)
        for d, other in ((0, 1), (1, 0)):
            m_d = SPEC.category_counts[d]
            m_o = SPEC.category_counts[other]
            idx = float(np.dot(x[d], MODEL.beta[d]))
            for j in range(1, m_d):
                cum = 0.0
                for jd in range(1, j + 1):
                    for jo in range(1, m_o + 1):
                        cell = (jd, jo) if d == 0 else (jo, jd)
                        cum += cell_probability(cell, x, SPEC, MODEL, F)
                expected = std_normal_cdf(SPEC.thresholds[d][j - 1] - idx)
                assert cum == pytest.approx(expected, abs=1e-9)

    def test_bad_cdf_rejected(self):
        x = (np.zeros(1), np.zeros(1))
        with pytest.raises(ValueError):
            cell_probability((1, 1), x, SPEC, MODEL, lambda a, b: 1.7)


class TestDataset:
    def make(self, n=50, seed=0):
        rng = np.random.default_rng(seed)
        outcomes = rng.integers(1, 4, (n, 2))
        covs = (rng.normal(size=(n, 1)), rng.normal(size=(n, 2)))
        return Dataset(outcomes, covs, (("x",), ("w", "z")))

    def test_row_count_mismatch_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            Dataset(
                rng.integers(1, 3, (10, 2)),
                (rng.normal(size=(10, 1)), rng.normal(size=(9, 1))),
                (("x",), ("w",)),
            )

    def test_validate_against(self):
        data = self.make()
        data.validate_against(SPEC)
        small = LatticeSpec(((0.0,), (0.0,)))
        with pytest.raises(ValueError):
            data.validate_against(small)

    def test_missing_categories(self):
        outcomes = np.array([[1, 1], [1, 2], [1, 3]])
        covs = (np.zeros((3, 1)), np.zeros((3, 1)))
        data = Dataset(outcomes, covs, (("x",), ("w",)))
        missing = data.missing_categories(SPEC)
        assert (1, 2) in missing and (1, 3) in missing
        assert all(d != 2 for d, _ in missing)

    def test_csv_round_trip(self, tmp_path):
        data = self.make(n=40, seed=3)
        path = tmp_path / "data.csv"
        write_csv(data, path)
        back = read_csv(path)
        assert np.array_equal(back.outcomes, data.outcomes)
        for d in range(2):
            assert np.allclose(back.covariates[d], data.covariates[d])
        assert back.names == data.names

    def test_csv_write_is_deterministic(self, tmp_path):
        data = self.make(n=25, seed=4)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(data, p1)
        write_csv(data, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("u,v\n1,2\n")
        with pytest.raises(ValueError):
            read_csv(path)
