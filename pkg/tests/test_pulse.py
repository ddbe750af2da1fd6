import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pulsesync import pulse

XI, W = 1.01, 0.1


def sigma_oracle(theta, xi, w, terms=60):
    """Direct high-precision comb sum, independent of the production code."""
    mp.mp.dps = 40
    th = mp.mpf(theta)
    s = mp.mpf(0)
    for n in range(-terms, terms + 1):
        s += mp.e ** (-((th + n * mp.mpf(xi)) ** 2) / (2 * mp.mpf(w) ** 2))
    return float(s / mp.sqrt(2 * mp.pi * mp.mpf(w) ** 2))


def sigma_theta3_oracle(theta, xi, w):
    """Jacobi theta-function form of the same comb (Poisson summation)."""
    mp.mp.dps = 40
    xi, w, th = mp.mpf(xi), mp.mpf(w), mp.mpf(theta)
    q = mp.e ** (-2 * w**2 * mp.pi**2 / xi**2)
    return float(mp.jtheta(3, mp.pi * th / xi, q) / xi)


# frozen from the direct-sum oracle at 40 digits
SIGMA_AT_0 = 3.9894228040143268
SIGMA_AT_HALF = 2.3128238071595637e-05
SIGMA_PRIME_AT_W = -24.197072451914335


class TestGaussianComb:
    def test_peak_value(self, ref_pulse):
        assert pulse.sigma(0.0, ref_pulse) == pytest.approx(SIGMA_AT_0, rel=1e-14)
        # peak equals the single-Gaussian normalization, neighbors negligible
        assert SIGMA_AT_0 == pytest.approx(1.0 / math.sqrt(2 * math.pi * W**2), rel=1e-15)

    def test_half_period_value(self, ref_pulse):
        # two equidistant comb neighbors contribute equally at xi/2
        assert pulse.sigma(0.505, ref_pulse) == pytest.approx(SIGMA_AT_HALF, rel=1e-12)

    def test_matches_direct_sum_oracle(self, ref_pulse):
        for theta in (0.0, 0.1, 0.25, 0.505, 0.9, 3.77, -2.3):
            assert pulse.sigma(theta, ref_pulse) == pytest.approx(
                sigma_oracle(theta, XI, W), rel=1e-12
            )

    def test_matches_theta_function_oracle(self, ref_pulse):
        for theta in (0.0, 0.17, 0.505, 0.8):
            assert pulse.sigma(theta, ref_pulse) == pytest.approx(
                sigma_theta3_oracle(theta, XI, W), rel=1e-10
            )

    def test_array_evaluation(self, ref_pulse):
        thetas = np.array([0.0, 0.1, 0.505])
        vals = pulse.sigma(thetas, ref_pulse)
        assert vals.shape == (3,)
        assert vals[0] == pytest.approx(SIGMA_AT_0, rel=1e-14)

    def test_rejects_non_finite(self, ref_pulse):
        with pytest.raises(ValueError):
            pulse.sigma(float("nan"), ref_pulse)
        with pytest.raises(ValueError):
            pulse.sigma_prime(float("inf"), ref_pulse)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(min_value=-50.0, max_value=50.0),
           st.integers(min_value=0, max_value=40))
    def test_periodicity(self, theta, k, ref_pulse):
        base = pulse.sigma(theta, ref_pulse)
        shifted = pulse.sigma(theta + k * XI, ref_pulse)
        assert abs(shifted - base) <= 1e-12 * SIGMA_AT_0

    def test_periodicity_bulk(self, ref_pulse):
        rng = np.random.default_rng(7)
        thetas = rng.uniform(-100, 100, size=10_000)
        a = pulse.sigma(thetas, ref_pulse)
        b = pulse.sigma(thetas + XI, ref_pulse)
        assert np.max(np.abs(a - b)) <= 1e-12 * SIGMA_AT_0

    def test_unit_normalization_simpson(self, ref_pulse):
        # composite Simpson over one period
        n = 4096
        x = np.linspace(0.0, XI, 2 * n + 1)
        y = pulse.sigma(x, ref_pulse)
        h = XI / (2 * n)
        integral = (h / 3) * (y[0] + y[-1] + 4 * y[1:-1:2].sum() + 2 * y[2:-1:2].sum())
        assert integral == pytest.approx(1.0, abs=1e-10)

    def test_positive_everywhere(self, ref_pulse):
        thetas = np.linspace(-2 * XI, 2 * XI, 2001)
        assert np.all(pulse.sigma(thetas, ref_pulse) > 0.0)

    def test_fast_evaluator_matches(self, ref_pulse):
        fast = pulse.value_evaluator(ref_pulse)
        thetas = np.linspace(-3.3, 7.7, 512)
        np.testing.assert_allclose(fast(thetas), pulse.sigma(thetas, ref_pulse), rtol=0, atol=0)


class TestSigmaPrime:
    def test_zero_at_peak(self, ref_pulse):
        assert pulse.sigma_prime(0.0, ref_pulse) == pytest.approx(0.0, abs=1e-30)

    def test_value_at_width(self, ref_pulse):
        assert pulse.sigma_prime(0.1, ref_pulse) == pytest.approx(SIGMA_PRIME_AT_W, rel=1e-12)

    def test_antisymmetry(self, ref_pulse):
        for theta in (0.03, 0.1, 0.22):
            assert pulse.sigma_prime(-theta, ref_pulse) == pytest.approx(
                -pulse.sigma_prime(theta, ref_pulse), rel=1e-12
            )

    @settings(max_examples=150, deadline=None)
    @given(st.floats(min_value=-3.0, max_value=3.0))
    def test_matches_finite_difference(self, theta, ref_pulse):
        eps = 1e-6
        fd = (pulse.sigma(theta + eps, ref_pulse) - pulse.sigma(theta - eps, ref_pulse)) / (2 * eps)
        assert pulse.sigma_prime(theta, ref_pulse) == pytest.approx(fd, abs=1e-6 * (1 + abs(fd)))

    def test_fourth_order_fd_agreement(self, ref_pulse):
        # derivative matches the 4th-order central stencil to O(eps^4)
        theta, errs = 0.07, []
        for eps in (1e-3, 5e-4):
            stencil = (
                pulse.sigma(theta - 2 * eps, ref_pulse)
                - 8 * pulse.sigma(theta - eps, ref_pulse)
                + 8 * pulse.sigma(theta + eps, ref_pulse)
                - pulse.sigma(theta + 2 * eps, ref_pulse)
            ) / (12 * eps)
            errs.append(abs(stencil - pulse.sigma_prime(theta, ref_pulse)))
        assert errs[1] <= errs[0] / 8.0  # at least ~4th order shrinkage


class TestConstantPulse:
    def test_value_and_derivative(self):
        c = pulse.constant(0.75, xi=2.0)
        assert pulse.sigma(1.234, c) == 0.75
        assert pulse.sigma_prime(1.234, c) == 0.0
        arr = pulse.sigma(np.array([0.0, 5.0]), c)
        assert np.all(arr == 0.75)

    def test_zero_level_allowed(self):
        c = pulse.constant(0.0)
        assert pulse.sigma(0.3, c) == 0.0

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            pulse.constant(-0.1)


class TestValidation:
    def test_bad_params(self):
        with pytest.raises(ValueError):
            pulse.gaussian_comb(-1.0, 0.1)
        with pytest.raises(ValueError):
            pulse.gaussian_comb(1.0, 0.0)
        with pytest.raises(ValueError):
            pulse.PulseParams(xi=1.0, w=0.1, comb_range=0)

    def test_min_max_values(self, ref_pulse):
        assert ref_pulse.max_value() == pytest.approx(SIGMA_AT_0, rel=1e-14)
        assert ref_pulse.min_value() == pytest.approx(SIGMA_AT_HALF, rel=1e-12)
