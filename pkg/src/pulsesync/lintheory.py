"""Linearized synchronization theory for identical pulse-coupled phases.

Everything here is built from two period integrals over the mean-phase
rate R(theta) = omega + jtilde * sigma(theta):

* ``psi``: time for the mean phase to advance one pulse period,
* ``S``: the pulse-steepness integral of sigma'^2 / R,

which combine into the synchronization time  tau = psi / (2 jtilde^2 lag S)
for the two-oscillator case, and its per-mode generalization
tau_i = psi / (-Re[lambda (jtilde - lambda)] lag S) on networks.

All quadratures are adaptive composite Simpson with panel doubling; the
mean phase at a given time is recovered by bisecting its quadrature-defined
inverse.  Mode amplitudes are evaluated at leading order in the lag, where
the rate factor reduces to R itself; this keeps the two-oscillator and
normal-mode forms identical at n=2 and continuous across jtilde -> 0.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .network import MARGINAL_TOL, SpectralDecomposition, stability_rate
from .pulse import PulseFunction, sigma, sigma_prime

QUAD_RTOL = 1e-10
QUAD_MAX_DOUBLINGS = 24
QUAD_START_PANELS = 16
JTILDE_TINY = 1e-8
PHASE_BISECT_TOL = 1e-12


class QuadratureError(RuntimeError):
    """Panel doubling failed to converge (non-smooth integrand?)."""


class InfiniteSyncTime(ArithmeticError):
    """No finite synchronization time (zero lag, flat pulse, or zero coupling)."""


class NonDecayingMode(ArithmeticError):
    """Mode with Re[lambda*(jtilde - lambda)] >= 0 never synchronizes."""


@dataclass(frozen=True)
class TheoryParams:
    pulse: PulseFunction
    omega: float
    jtilde: float
    delta_t: float = 0.0

    def __post_init__(self):
        if np.ndim(self.omega) != 0:
            raise ValueError("theory requires a single shared eigenfrequency")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "jtilde", float(self.jtilde))
        object.__setattr__(self, "delta_t", float(self.delta_t))
        if not self.omega > 0.0:
            raise ValueError(f"eigenfrequency must be positive, got {self.omega}")
        if self.delta_t < 0.0:
            raise ValueError(f"lag must be >= 0, got {self.delta_t}")
        extreme = self.pulse.min_value() if self.jtilde >= 0.0 else self.pulse.max_value()
        if self.omega + self.jtilde * extreme <= 0.0:
            raise ValueError(
                "mean-phase rate omega + jtilde*sigma must stay positive over the period"
            )

    @property
    def xi(self) -> float:
        return self.pulse.xi


@dataclass(frozen=True)
class PeriodIntegrals:
    psi: float  # time per pulse period of the mean phase
    S: float    # decay integral of sigma'^2 / rate over one period


@dataclass(frozen=True)
class ModePrediction:
    lam: complex
    amplitude: complex
    decay_rate_sign: float  # Re[lambda*(jtilde - lambda)]
    tau: float              # per-mode sync time, inf if the mode does not decay


def rate(theta, params: TheoryParams):
    """Mean-phase rate R(theta) = omega + jtilde*sigma(theta)."""
    return params.omega + params.jtilde * sigma(theta, params.pulse)


def _simpson(f, a: float, b: float, panels: int) -> float:
    x = np.linspace(a, b, 2 * panels + 1)
    y = f(x)
    h = (b - a) / (2 * panels)
    return (h / 3.0) * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def adaptive_simpson(f, a: float, b: float, rtol: float = QUAD_RTOL) -> float:
    """Composite Simpson, doubling the panel count until the value settles."""
    if b == a:
        return 0.0
    if abs(b - a) < 64.0 * np.spacing(max(abs(a), abs(b))):
        # interval too narrow for the grid to resolve; midpoint rule is exact
        # to working precision here
        return float((b - a) * f(np.array([0.5 * (a + b)]))[0])
    panels = QUAD_START_PANELS
    prev = _simpson(f, a, b, panels)
    for _ in range(QUAD_MAX_DOUBLINGS):
        panels *= 2
        cur = _simpson(f, a, b, panels)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    raise QuadratureError(
        f"Simpson quadrature on [{a}, {b}] did not converge in {QUAD_MAX_DOUBLINGS} doublings"
    )


def _periodic_integral(f, a: float, b: float, xi: float, period_value: float | None = None) -> float:
    """Integral of a xi-periodic integrand, whole periods taken in one shot."""
    if b < a:
        return -_periodic_integral(f, b, a, xi, period_value)
    # snap counts within float noise of an integer so the remainder interval
    # never degenerates to a few ulps
    spans = (b - a) / xi
    k = int(np.floor(spans + 1e-12))
    rem = (b - a) - k * xi
    if rem < 1e-12 * xi:
        rem = 0.0
    total = 0.0
    if k > 0:
        if period_value is None:
            period_value = adaptive_simpson(f, a, a + xi)
        total += k * period_value
    if rem > 0.0:
        total += adaptive_simpson(f, a, a + rem)
    return total


@functools.lru_cache(maxsize=256)
def period_integrals(params: TheoryParams) -> PeriodIntegrals:
    """psi and S over one pulse period."""
    if params.pulse.kind == "constant":
        level = params.pulse.level
        return PeriodIntegrals(psi=params.xi / (params.omega + params.jtilde * level), S=0.0)
    xi = params.xi

    def inv_rate(x):
        return 1.0 / rate(x, params)

    def steepness(x):
        sp = sigma_prime(x, params.pulse)
        return sp * sp / rate(x, params)

    psi = adaptive_simpson(inv_rate, 0.0, xi)
    s_val = adaptive_simpson(steepness, 0.0, xi)
    return PeriodIntegrals(psi=psi, S=s_val)


def mean_phase_time(theta_bar: float, params: TheoryParams, theta_bar0: float = 0.0) -> float:
    """Time for the mean phase to move from theta_bar0 to theta_bar."""
    if theta_bar < theta_bar0:
        raise ValueError("theta_bar must be >= theta_bar0")

    def inv_rate(x):
        return 1.0 / rate(x, params)

    return _periodic_integral(inv_rate, theta_bar0, theta_bar, params.xi,
                              period_value=period_integrals(params).psi)


def mean_phase_at(t: float, params: TheoryParams, theta_bar0: float = 0.0) -> float:
    """Invert :func:`mean_phase_time` by bisection (monotone in t)."""
    if t < 0.0:
        raise ValueError(f"time must be >= 0, got {t}")
    if t == 0.0:
        return theta_bar0
    psi = period_integrals(params).psi
    k = int(np.floor(t / psi))
    rem = t - k * psi
    if rem >= psi:  # floating-point guard at exact period multiples
        k += 1
        rem -= psi
    if rem <= 0.0:
        return theta_bar0 + k * params.xi

    def inv_rate(x):
        return 1.0 / rate(x, params)

    lo, hi = 0.0, params.xi
    while hi - lo > PHASE_BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if adaptive_simpson(inv_rate, theta_bar0, theta_bar0 + mid) < rem:
            lo = mid
        else:
            hi = mid
    return theta_bar0 + k * params.xi + 0.5 * (lo + hi)


def sync_time_two(params: TheoryParams) -> float:
    """tau = psi / (2 jtilde^2 lag S) for the symmetric two-oscillator case."""
    if params.delta_t <= 0.0:
        raise InfiniteSyncTime("no synchronization without a positive lag")
    if params.jtilde == 0.0:
        raise InfiniteSyncTime("uncoupled oscillators never synchronize")
    pin = period_integrals(params)
    if pin.S <= 0.0:
        raise InfiniteSyncTime("flat pulse (S = 0) produces no decay")
    return pin.psi / (2.0 * params.jtilde**2 * params.delta_t * pin.S)


def _decay_integral(params: TheoryParams, theta_bar0: float, theta_bar: float,
                    zero_coupling: bool = False) -> float:
    xi = params.xi

    def steepness(x):
        sp = sigma_prime(x, params.pulse)
        denom = params.omega if zero_coupling else rate(x, params)
        return sp * sp / denom

    period_value = None
    if not zero_coupling:
        period_value = period_integrals(params).S
    return _periodic_integral(steepness, theta_bar0, theta_bar, xi, period_value=period_value)


def predict_phi(t: float, phi0: float, params: TheoryParams, theta_bar0: float = 0.0) -> float:
    """Linearized half phase difference of the symmetric two-oscillator system."""
    if t == 0.0:
        return phi0
    theta_bar = mean_phase_at(t, params, theta_bar0)
    decay = _decay_integral(params, theta_bar0, theta_bar)
    prefactor = rate(theta_bar0, params) / rate(theta_bar, params)
    return phi0 * prefactor * math.exp(-2.0 * params.delta_t * params.jtilde**2 * decay)


def predict_mode(t: float, mode: ModePrediction, params: TheoryParams,
                 theta_bar0: float = 0.0) -> complex:
    """Normal-mode amplitude at time t (leading order in the lag).

    The rate-ratio prefactor is raised to the complex power lambda/jtilde
    on the principal branch (the rate is strictly positive).  Below
    |jtilde| = 1e-8 the jtilde -> 0 limit of that power is used instead.
    """
    lam = complex(mode.lam)
    theta_bar = mean_phase_at(t, params, theta_bar0)
    if abs(params.jtilde) < JTILDE_TINY:
        dsig = sigma(theta_bar, params.pulse) - sigma(theta_bar0, params.pulse)
        prefactor = np.exp(lam * dsig / params.omega)
        decay = _decay_integral(params, theta_bar0, theta_bar, zero_coupling=True)
    else:
        log_ratio = math.log(rate(theta_bar, params) / rate(theta_bar0, params))
        prefactor = np.exp((lam / params.jtilde) * log_ratio)
        decay = _decay_integral(params, theta_bar0, theta_bar)
    expo = np.exp(lam * (params.jtilde - lam) * params.delta_t * decay)
    return complex(mode.amplitude * prefactor * expo)


def mode_sync_time(lam: complex, params: TheoryParams) -> float:
    """tau_i = psi / (-Re[lambda*(jtilde - lambda)] * lag * S)."""
    if params.delta_t <= 0.0:
        raise InfiniteSyncTime("no synchronization without a positive lag")
    decay_sign = stability_rate(complex(lam), params.jtilde)
    if decay_sign >= -MARGINAL_TOL:  # marginal modes (Perron included) never decay
        raise NonDecayingMode(
            f"mode lambda={lam} has Re[lambda*(jtilde-lambda)] = {decay_sign:.3e} >= 0"
        )
    pin = period_integrals(params)
    if pin.S <= 0.0:
        raise InfiniteSyncTime("flat pulse (S = 0) produces no decay")
    return pin.psi / (-decay_sign * params.delta_t * pin.S)


def mode_predictions(decomp: SpectralDecomposition, theta0, params: TheoryParams):
    """Per-mode amplitudes and sync times for the deviation of theta0 from its mean."""
    th0 = np.asarray(theta0, dtype=float)
    mean0 = decomp.left_perron @ th0
    phi0 = th0 - mean0.real * np.ones(decomp.n)
    amps = decomp.project(phi0)
    modes = []
    for i, lam in enumerate(decomp.eigenvalues):
        sign = stability_rate(complex(lam), params.jtilde)
        try:
            tau = mode_sync_time(lam, params)
        except (NonDecayingMode, InfiniteSyncTime):
            tau = math.inf
        modes.append(ModePrediction(
            lam=complex(lam), amplitude=complex(amps[i]),
            decay_rate_sign=sign, tau=tau,
        ))
    return modes
