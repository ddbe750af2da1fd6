import numpy as np
import pytest

from pulsesync import network


def random_constant_row_sum(n, jtilde, seed):
    """Random matrix with exact common row sum (oracle-side constructor)."""
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(n, n))
    w += (jtilde - w.sum(axis=1))[:, None] / n
    return w


class TestConstructors:
    def test_all_to_all_two(self):
        c = network.make_all_to_all(2, 1.0)
        np.testing.assert_array_equal(c.weights, [[0.0, 1.0], [1.0, 0.0]])
        assert c.row_sum == 1.0

    def test_all_to_all_row_sums(self):
        assert network.make_all_to_all(3, 1.0).row_sum == 2.0
        assert network.make_all_to_all(4, -0.5).row_sum == -1.5

    def test_all_to_all_needs_two(self):
        with pytest.raises(ValueError):
            network.make_all_to_all(1, 1.0)

    def test_ring_row_sums(self):
        c = network.make_ring_laplacian(4, 1.0)
        np.testing.assert_allclose(c.weights.sum(axis=1), 0.0, atol=1e-15)
        assert c.row_sum == 0.0

    def test_ring_needs_three(self):
        with pytest.raises(ValueError):
            network.make_ring_laplacian(2, 1.0)

    @pytest.mark.parametrize("n,a", [(4, 1.0), (3, 2.0), (6, -0.7)])
    def test_ring_spectrum_circulant_oracle(self, n, a):
        # circulant eigenvalues: a * (2 cos(2 pi k / n) - 2)
        expected = sorted(a * (2 * np.cos(2 * np.pi * k / n) - 2) for k in range(n))
        c = network.make_ring_laplacian(n, a)
        got = sorted(np.linalg.eigvals(c.weights).real)
        np.testing.assert_allclose(got, expected, atol=1e-9)


class TestRowSumValidation:
    def test_common_sum(self):
        assert network.validate_row_sum([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(1.0)

    def test_mismatch_reports_worst_row(self):
        with pytest.raises(network.RowSumMismatch) as exc:
            network.validate_row_sum([[0.0, 1.0], [2.0, 0.0]])
        assert exc.value.row in (0, 1)
        assert exc.value.deviation == pytest.approx(0.5)

    def test_ring_is_zero(self):
        c = network.make_ring_laplacian(5, 1.0)
        assert network.validate_row_sum(c.weights) == pytest.approx(0.0, abs=1e-12)

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            network.validate_row_sum(np.ones((2, 3)))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            network.validate_row_sum([[0.0, np.nan], [1.0, 0.0]])


class TestSpectralDecomposition:
    def test_all_to_all_eigenvalues(self):
        dec = network.spectral_decompose(network.make_all_to_all(3, 1.0))
        np.testing.assert_allclose(sorted(dec.eigenvalues.real), [-1.0, -1.0, 2.0], atol=1e-10)
        assert abs(dec.eigenvalues[dec.perron_index] - 2.0) < 1e-10

    def test_two_osc_left_perron(self):
        dec = network.spectral_decompose(network.make_all_to_all(2, 1.0))
        np.testing.assert_allclose(dec.left_perron.real, [0.5, 0.5], atol=1e-12)
        np.testing.assert_allclose(dec.right[:, dec.perron_index].real, [1.0, 1.0], atol=0)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("n", [5, 12, 32])
    def test_random_matrix_residuals(self, n, seed):
        c = network.coupling_matrix(random_constant_row_sum(n, 1.3, seed))
        dec = network.spectral_decompose(c)
        j = c.weights.astype(complex)
        norm = np.linalg.norm(j)
        for i in range(n):
            lam, v, u = dec.eigenvalues[i], dec.right[:, i], dec.left[i]
            assert np.linalg.norm(j @ v - lam * v) <= 1e-10 * norm * np.linalg.norm(v)
            assert np.linalg.norm(u @ j - lam * u) <= 1e-10 * norm * np.linalg.norm(u)

    @pytest.mark.parametrize("n", [5, 12, 32])
    def test_biorthonormality(self, n):
        c = network.coupling_matrix(random_constant_row_sum(n, -0.4, n))
        dec = network.spectral_decompose(c)
        np.testing.assert_allclose(dec.left @ dec.right, np.eye(n), atol=1e-10)

    def test_reconstruction(self):
        c = network.coupling_matrix(random_constant_row_sum(8, 2.0, 3))
        dec = network.spectral_decompose(c)
        rebuilt = sum(
            dec.eigenvalues[i] * np.outer(dec.right[:, i], dec.left[i]) for i in range(8)
        )
        assert np.linalg.norm(rebuilt - c.weights) <= 1e-8 * np.linalg.norm(c.weights)

    def test_perron_exact_by_row_sum(self):
        c = network.coupling_matrix(random_constant_row_sum(6, 0.9, 5))
        ones = np.ones(6)
        resid = np.linalg.norm(c.weights @ ones - c.row_sum * ones)
        assert resid <= 1e-12 * (1.0 + abs(c.row_sum))

    def test_defective_matrix_rejected(self):
        # rows sum to 4 and the eigenvalue 4 is doubled with a rank-1 defect
        base = np.array([[3.0, 1.0], [-1.0, 5.0]])
        with pytest.raises(network.DefectiveMatrix):
            network.spectral_decompose(network.coupling_matrix(base))


class TestClassifyStability:
    @pytest.mark.parametrize("n", [2, 3, 4, 8])
    @pytest.mark.parametrize("a", [1.0, -1.0])
    def test_mean_field_rate(self, n, a):
        dec = network.spectral_decompose(network.make_all_to_all(n, a))
        report = network.classify_stability(dec)
        non_perron = [m for m in report if not m.is_perron]
        assert len(non_perron) == n - 1
        for m in non_perron:
            assert m.verdict == network.SYNCHRONIZING
            assert m.rate_sign == pytest.approx(-n * a * a, abs=1e-9)

    def test_ring_all_synchronizing(self):
        dec = network.spectral_decompose(network.make_ring_laplacian(4, 1.0))
        for m in network.classify_stability(dec):
            if not m.is_perron:
                assert m.verdict == network.SYNCHRONIZING
                assert m.rate_sign == pytest.approx(-abs(m.eigenvalue) ** 2, abs=1e-9)

    def test_zero_row_sum_imaginary_mode_unstable(self):
        # algebra check: lambda = i b with jtilde = 0 gives rate +b^2
        assert network.stability_rate(1j * 2.0, 0.0) == pytest.approx(4.0)

    def test_marginal_verdict(self):
        assert network.stability_rate(0.0, 0.0) == 0.0
        dec = network.spectral_decompose(network.make_ring_laplacian(4, 1.0))
        report = network.classify_stability(dec)
        assert report[dec.perron_index].verdict == "perron"

    def test_relabeling_invariance(self):
        w = random_constant_row_sum(6, 1.1, 11)
        rng = np.random.default_rng(0)
        perm = rng.permutation(6)
        p = np.eye(6)[perm]
        dec_a = network.spectral_decompose(network.coupling_matrix(w))
        dec_b = network.spectral_decompose(network.coupling_matrix(p @ w @ p.T))
        rates_a = sorted(m.rate_sign for m in network.classify_stability(dec_a))
        rates_b = sorted(m.rate_sign for m in network.classify_stability(dec_b))
        np.testing.assert_allclose(rates_a, rates_b, atol=1e-9)


class TestCsv:
    def test_round_trip(self, tmp_path):
        w = random_constant_row_sum(4, 0.5, 42)
        path = tmp_path / "coupling.csv"
        path.write_text(
            "\n".join(",".join(repr(v) for v in row) for row in w) + "\n"
        )
        c = network.coupling_from_csv(path)
        np.testing.assert_array_equal(c.weights, w)
        assert c.row_sum == pytest.approx(0.5)

    def test_rejects_bad_row_sums(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("0,1\n2,0\n")
        with pytest.raises(network.RowSumMismatch):
            network.coupling_from_csv(path)
