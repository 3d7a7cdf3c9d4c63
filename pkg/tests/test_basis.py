import numpy as np
import pytest
from scipy.integrate import quad

from dfgof.basis import legendre_shifted, make_basis, sample_on_points
from dfgof.errors import RankDeficiencyError


def gauss_unit_interval(deg=40):
    nodes, weights = np.polynomial.legendre.leggauss(deg)
    return (nodes + 1.0) / 2.0, weights / 2.0


class TestLegendreShifted:
    def test_first_three_closed_forms(self):
        t = np.linspace(0.0, 1.0, 11)
        assert np.allclose(legendre_shifted(1, t), np.ones_like(t))
        assert np.allclose(legendre_shifted(2, t), np.sqrt(3.0) * (2.0 * t - 1.0))
        assert np.allclose(legendre_shifted(3, t), np.sqrt(5.0) * (6.0 * t**2 - 6.0 * t + 1.0))

    def test_odd_symmetry_zero_at_half(self):
        assert legendre_shifted(2, 0.5) == pytest.approx(0.0, abs=1e-14)

    def test_matches_equispaced_centered_grid_form(self):
        # sqrt(1/n) * value at i/n approximates sqrt(12/n) (i/n - (n+1)/(2n))
        n = 400
        i = np.arange(1, n + 1)
        sampled = np.sqrt(1.0 / n) * legendre_shifted(2, i / n)
        reference = np.sqrt(12.0 / n) * (i / n - (n + 1) / (2 * n))
        assert np.abs(sampled - reference).max() < 3.0 / n

    def test_orthonormality_by_quadrature(self):
        t, w = gauss_unit_interval()
        for k in range(1, 13):
            for l in range(k, 13):
                inner = float(np.sum(w * legendre_shifted(k, t) * legendre_shifted(l, t)))
                assert inner == pytest.approx(1.0 if k == l else 0.0, abs=1e-10)

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            legendre_shifted(0, 0.5)
        with pytest.raises(ValueError):
            legendre_shifted(13, 0.5)

    def test_point_out_of_range(self):
        with pytest.raises(ValueError):
            legendre_shifted(2, 1.5)


class TestMakeBasis:
    def test_one_dimensional_pair_with_closed_cumulative(self):
        basis = make_basis(1, 2)
        t = np.linspace(0.0, 1.0, 21)
        assert np.allclose(basis.evaluate_one(0, t), 1.0)
        assert np.allclose(basis.evaluate_one(1, t), np.sqrt(3.0) * (2.0 * t - 1.0))
        assert np.allclose(basis.cumulative_one(1, t), -np.sqrt(3.0) * t * (1.0 - t), atol=1e-14)

    def test_two_dimensional_constant(self):
        basis = make_basis(2, 1)
        pts = np.array([[0.3, 0.7], [1.0, 1.0], [0.5, 0.2]])
        assert np.allclose(basis.evaluate_one(0, pts), 1.0)
        assert np.allclose(basis.cumulative_one(0, pts), pts[:, 0] * pts[:, 1])

    def test_two_dimensional_linear_factor_cumulative(self):
        # element with degree (1, 0): r(z) = sqrt(3)(2 z1 - 1), Q = sqrt(3)(x1^2 - x1) x2
        basis = make_basis(2, 3)
        assert basis.degrees == ((0, 0), (1, 0), (0, 1))
        pts = np.array([[0.4, 0.9], [0.8, 0.25]])
        expected = np.sqrt(3.0) * (pts[:, 0] ** 2 - pts[:, 0]) * pts[:, 1]
        assert np.allclose(basis.cumulative_one(1, pts), expected, atol=1e-14)

    def test_graded_lexicographic_enumeration(self):
        # monomial listing order: 1; x1, x2; x1^2, x1 x2, x2^2
        basis = make_basis(2, 6)
        assert basis.degrees == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    def test_tensor_orthonormality_by_quadrature(self):
        basis = make_basis(2, 5)
        t, w = gauss_unit_interval()
        xx, yy = np.meshgrid(t, t, indexing="ij")
        ww = np.outer(w, w).ravel()
        pts = np.column_stack([xx.ravel(), yy.ravel()])
        for k in range(5):
            for l in range(k, 5):
                inner = float(np.sum(ww * basis.evaluate_one(k, pts) * basis.evaluate_one(l, pts)))
                assert inner == pytest.approx(1.0 if k == l else 0.0, abs=1e-10)

    def test_cumulative_matches_adaptive_quadrature(self):
        rng = np.random.default_rng(8)
        basis = make_basis(1, 5)
        for k in range(5):
            for x in rng.uniform(0.0, 1.0, 10):
                expect, _ = quad(lambda s, k=k: basis.evaluate_one(k, np.array([s]))[0], 0.0, x)
                got = basis.cumulative_one(k, np.array([x]))[0]
                assert got == pytest.approx(expect, abs=1e-8)

    def test_cumulative_endpoint_values(self):
        for p, d in ((1, 6), (2, 6)):
            basis = make_basis(p, d)
            zero = np.zeros((1, p))
            one = np.ones((1, p))
            for k in range(d):
                assert basis.cumulative_one(k, zero)[0] == pytest.approx(0.0, abs=1e-14)
                if k >= 1:
                    assert basis.cumulative_one(k, one)[0] == pytest.approx(0.0, abs=1e-12)

    def test_partial_sums_converge_to_cumulative(self):
        # (1/n) sum_{i <= nt} r_k(i/n) -> Q_k(t) at rate O(1/n)
        basis = make_basis(1, 4)
        t0 = 0.6
        errs = []
        for n in (50, 100, 200, 400):
            i = np.arange(1, int(n * t0) + 1)
            err = 0.0
            for k in range(4):
                partial = basis.evaluate_one(k, i / n).sum() / n
                err = max(err, abs(partial - basis.cumulative_one(k, np.array([i[-1] / n]))[0]))
            errs.append(err)
        assert errs[-1] < errs[0]
        assert all(n * e < 2.0 for n, e in zip((50, 100, 200, 400), errs))

    def test_degree_cap(self):
        with pytest.raises(ValueError):
            make_basis(1, 13)


class TestSampleOnPoints:
    def test_constant_vector_on_grid(self):
        n = 9
        basis = make_basis(1, 1)
        out = sample_on_points(basis, np.arange(1, n + 1) / n)
        assert np.allclose(out.vectors[0], np.ones(n) / np.sqrt(n), atol=1e-14)

    def test_hand_gram_schmidt_three_points(self):
        basis = make_basis(1, 2)
        out = sample_on_points(basis, np.array([1 / 3, 2 / 3, 1.0]))
        expected = np.array([-1.0, 0.0, 1.0]) / np.sqrt(2.0)
        assert np.allclose(out.vectors[1], expected, atol=1e-12)

    def test_gram_matrix_is_identity(self):
        rng = np.random.default_rng(4)
        basis = make_basis(2, 4)
        out = sample_on_points(basis, rng.uniform(0.0, 1.0, size=(40, 2)))
        assert out.gram_defect() < 1e-10

    def test_identical_points_rank_deficiency(self):
        basis = make_basis(1, 2)
        with pytest.raises(RankDeficiencyError):
            sample_on_points(basis, np.array([0.5, 0.5]))

    def test_too_few_points(self):
        basis = make_basis(1, 3)
        with pytest.raises(ValueError):
            sample_on_points(basis, np.array([0.2, 0.8]))
