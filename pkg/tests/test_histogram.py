import numpy as np
import pytest

from lrhist.histogram import (
    HistogramDensity,
    bin_index,
    bin_indices_flat,
    empirical_l2_risk,
    evaluate,
    evaluate_at,
    histogram_from_data,
    l1_distance,
    l2_inner,
    refine,
    sample_histogram,
    u_inverse,
    u_map,
)
from lrhist.tensor import l1_norm


def random_histogram(rng, d, b):
    return HistogramDensity(d, b, rng.dirichlet(np.ones(b**d)).reshape((b,) * d))


def bin_centers(b, d):
    axes = [(np.arange(b) + 0.5) / b] * d
    grid = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grid])


def quadrature_l1(h1, h2):
    """Midpoint rule over the shared bin partition, exact for step functions."""
    centers = bin_centers(h1.b, h1.d)
    vals1 = np.array([evaluate(h1, x) for x in centers])
    vals2 = np.array([evaluate(h2, x) for x in centers])
    return float(np.abs(vals1 - vals2).sum() / h1.b**h1.d)


def quadrature_l2_inner(h1, h2):
    centers = bin_centers(h1.b, h1.d)
    vals1 = np.array([evaluate(h1, x) for x in centers])
    vals2 = np.array([evaluate(h2, x) for x in centers])
    return float((vals1 * vals2).sum() / h1.b**h1.d)


class TestBinIndex:
    def test_origin(self):
        assert bin_index(np.array([0.0, 0.0]), 2) == (0, 0)

    def test_top_edge_clamps_and_half_open(self):
        assert bin_index(np.array([1.0, 0.5]), 2) == (1, 1)

    def test_direct_floor(self):
        assert bin_index(np.array([0.49, 0.51]), 2) == (0, 1)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            bin_index(np.array([1.2, 0.0]), 2)
        with pytest.raises(ValueError):
            bin_index(np.array([np.nan]), 2)


class TestHistogramFromData:
    def test_single_point(self):
        h = histogram_from_data(np.array([[0.0, 0.0]]), 2)
        expected = np.zeros((2, 2))
        expected[0, 0] = 1.0
        assert np.array_equal(h.weights, expected)

    def test_all_in_one_bin(self):
        X = np.full((10, 2), 0.9)
        h = histogram_from_data(X, 2)
        assert h.weights[1, 1] == 1.0

    def test_direct_count(self):
        X = np.array([[0.1], [0.3], [0.6], [0.9]])
        h = histogram_from_data(X, 2)
        assert np.array_equal(h.weights, np.array([0.5, 0.5]))

    def test_empty_error(self):
        with pytest.raises(ValueError):
            histogram_from_data(np.empty((0, 2)), 2)

    def test_order_invariance(self):
        rng = np.random.default_rng(0)
        X = rng.random((100, 2))
        h1 = histogram_from_data(X, 3)
        h2 = histogram_from_data(X[::-1], 3)
        assert np.array_equal(h1.weights, h2.weights)


class TestEvaluate:
    def test_uniform(self):
        h = HistogramDensity(2, 2, np.full((2, 2), 0.25))
        assert evaluate(h, np.array([0.3, 0.7])) == 1.0

    def test_one_hot_scaling(self):
        w = np.zeros((2, 2))
        w[0, 1] = 1.0
        h = HistogramDensity(2, 2, w)
        assert evaluate(h, np.array([0.2, 0.8])) == 4.0
        assert evaluate(h, np.array([0.8, 0.2])) == 0.0

    def test_integrates_to_one(self):
        rng = np.random.default_rng(1)
        h = random_histogram(rng, 2, 4)
        vals = evaluate_at(h, bin_centers(4, 2))
        assert vals.sum() / 4**2 == pytest.approx(1.0, abs=1e-12)


class TestUOperator:
    def test_basis_correspondence(self):
        t = np.zeros((2, 2))
        t[1, 0] = 1.0
        h = u_map(t)
        assert evaluate(h, np.array([0.9, 0.1])) == 4.0

    def test_round_trip_bitwise(self):
        rng = np.random.default_rng(2)
        t = rng.dirichlet(np.ones(27)).reshape(3, 3, 3)
        back = u_inverse(u_map(t))
        assert np.array_equal(back, t)

    def test_isometry_against_quadrature(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            h1 = random_histogram(rng, 2, 4)
            h2 = random_histogram(rng, 2, 4)
            tensor_dist = l1_norm(u_inverse(h1) - u_inverse(h2))
            assert l1_distance(h1, h2) == pytest.approx(tensor_dist, abs=1e-15)
            assert l1_distance(h1, h2) == pytest.approx(
                quadrature_l1(h1, h2), abs=1e-9
            )

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            u_map(np.full((2, 3), 1.0 / 6))


class TestDistances:
    def test_self_distance(self):
        rng = np.random.default_rng(4)
        h = random_histogram(rng, 2, 3)
        assert l1_distance(h, h) == 0.0

    def test_disjoint_one_hots(self):
        w1 = np.zeros((2, 2))
        w2 = np.zeros((2, 2))
        w1[0, 0] = 1.0
        w2[1, 1] = 1.0
        assert l1_distance(
            HistogramDensity(2, 2, w1), HistogramDensity(2, 2, w2)
        ) == 2.0

    def test_grid_mismatch(self):
        rng = np.random.default_rng(5)
        with pytest.raises(ValueError):
            l1_distance(random_histogram(rng, 2, 3), random_histogram(rng, 2, 4))

    def test_l2_inner_uniform(self):
        h = HistogramDensity(2, 2, np.full((2, 2), 0.25))
        assert l2_inner(h, h) == 1.0

    def test_l2_inner_one_hot(self):
        w = np.zeros((3, 3))
        w[1, 1] = 1.0
        h = HistogramDensity(2, 3, w)
        assert l2_inner(h, h) == 9.0

    def test_l2_inner_quadrature(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            h1 = random_histogram(rng, 2, 4)
            h2 = random_histogram(rng, 2, 4)
            assert l2_inner(h1, h2) == pytest.approx(
                quadrature_l2_inner(h1, h2), abs=1e-9
            )


class TestEmpiricalRisk:
    def test_uniform_risk(self):
        h = HistogramDensity(2, 2, np.full((2, 2), 0.25))
        X = np.random.default_rng(7).random((50, 2))
        assert empirical_l2_risk(h, X) == pytest.approx(-1.0, abs=1e-12)

    def test_risk_on_own_sample(self):
        rng = np.random.default_rng(8)
        X = rng.random((200, 2))
        b = 3
        h = histogram_from_data(X, b)
        expected = -(b**2) * float((h.weights**2).sum())
        assert empirical_l2_risk(h, X) == pytest.approx(expected, abs=1e-10)

    def test_term_by_term_recomputation(self):
        rng = np.random.default_rng(9)
        centers = bin_centers(4, 2)
        for _ in range(10):
            h = random_histogram(rng, 2, 4)
            X = rng.random((100, 2))
            integral_sq = float((evaluate_at(h, centers) ** 2).sum() / 4**2)
            sample_mean = float(np.mean([evaluate(h, x) for x in X]))
            direct = integral_sq - 2.0 * sample_mean
            assert empirical_l2_risk(h, X) == pytest.approx(direct, abs=1e-10)

    def test_inner_product_identity(self):
        # <h_hat, H(X)> equals the sample mean of h_hat over X
        rng = np.random.default_rng(10)
        for _ in range(20):
            d = int(rng.integers(1, 4))
            b = int(rng.integers(2, 9))
            n = int(rng.integers(1, 500))
            h_hat = random_histogram(rng, d, b)
            X = rng.random((n, d))
            H = histogram_from_data(X, b)
            lhs = l2_inner(h_hat, H)
            rhs = float(evaluate_at(h_hat, X).mean())
            assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_argmin_equivalence(self):
        # minimizing empirical risk == minimizing squared distance to the
        # standard histogram, over any finite candidate set
        rng = np.random.default_rng(11)
        X = rng.random((150, 2))
        b = 3
        H = histogram_from_data(X, b)
        candidates = [random_histogram(rng, 2, b) for _ in range(10)]
        risks = [empirical_l2_risk(c, X) for c in candidates]
        dists = [
            float(((c.weights - H.weights) ** 2).sum()) for c in candidates
        ]
        assert int(np.argmin(risks)) == int(np.argmin(dists))

    def test_empty_sample(self):
        h = HistogramDensity(1, 2, np.array([0.5, 0.5]))
        with pytest.raises(ValueError):
            empirical_l2_risk(h, np.empty((0, 1)))


class TestSampling:
    def test_one_hot_support(self):
        w = np.zeros((2, 2))
        w[1, 0] = 1.0
        h = HistogramDensity(2, 2, w)
        X = sample_histogram(h, 500, seed=0)
        assert np.all((X[:, 0] >= 0.5) & (X[:, 0] < 1.0))
        assert np.all(X[:, 1] < 0.5)

    def test_uniform_frequencies(self):
        b, d, n = 2, 2, 50000
        h = HistogramDensity(d, b, np.full((b, b), 0.25))
        X = sample_histogram(h, n, seed=1)
        flat = bin_indices_flat(X, b, d)
        counts = np.bincount(flat, minlength=b**d)
        sigma = np.sqrt(n * 0.25 * 0.75)
        assert np.all(np.abs(counts - n * 0.25) < 4 * sigma)

    def test_monte_carlo_consistency(self):
        rng = np.random.default_rng(12)
        h = random_histogram(rng, 2, 4)
        X = sample_histogram(h, 100000, seed=2)
        h_hat = histogram_from_data(X, 4)
        assert l1_distance(h, h_hat) < 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(13)
        h = random_histogram(rng, 2, 3)
        assert np.array_equal(
            sample_histogram(h, 100, seed=5), sample_histogram(h, 100, seed=5)
        )


class TestRefine:
    def test_preserves_density_values(self):
        rng = np.random.default_rng(14)
        h = random_histogram(rng, 2, 2)
        fine = refine(h, 3)
        assert fine.b == 6
        pts = rng.random((50, 2))
        for x in pts:
            assert evaluate(fine, x) == pytest.approx(evaluate(h, x), abs=1e-12)

    def test_bad_factor(self):
        rng = np.random.default_rng(15)
        with pytest.raises(ValueError):
            refine(random_histogram(rng, 1, 2), 0)
