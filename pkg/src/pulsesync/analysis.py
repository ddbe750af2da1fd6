"""Synchronization observables extracted from simulated trajectories.

The raw phase difference of a synchronizing pair is modulated by the
periodic rate factor, so every measurement here first averages over a
trailing window in which the mean phase advances exactly one pulse period.
Synchronization times come from a log-linear fit of that windowed envelope
inside a fixed relative band; strong synchronization means the difference
settles on an integer multiple of the pulse period.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .dde import Trajectory
from .network import spectral_decompose
from .pulse import sigma

UPPER_FRAC = 0.9
LOWER_FRAC = 0.01
MIN_FIT_POINTS = 10
STRONG_SYNC_TOL_FACTOR = 1e-3
TREND_SLACK_FACTOR = 1e-9


class NoDecay(RuntimeError):
    """The windowed series shows no usable exponential decay."""


class TrajectoryTooShort(ValueError):
    """Trajectory does not span enough mean-phase periods for the window."""


@dataclass(frozen=True)
class WindowSeries:
    """Trailing one-period means of a scalar series."""

    times: np.ndarray
    values: np.ndarray
    window_lengths: np.ndarray
    pair: Optional[Tuple[int, int]] = None


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    t_window: Tuple[float, float]
    rms_log_residual: float
    n_points: int


@dataclass(frozen=True)
class SyncReport:
    pair: Optional[Tuple[int, int]]
    tau_measured: Optional[float] = None
    mu: Optional[int] = None
    residual: Optional[float] = None
    synced: Optional[bool] = None
    fit: Optional[FitResult] = None


def perron_weights(traj: Trajectory) -> np.ndarray:
    """Left Perron vector of the coupling: the conserved mean-phase weights."""
    dec = spectral_decompose(traj.spec.coupling)
    w = dec.left_perron.real
    return w / w.sum()


def mean_phase_series(traj: Trajectory) -> np.ndarray:
    return traj.theta @ perron_weights(traj)


def trailing_window_mean(times: np.ndarray, values: np.ndarray,
                         mean_phase: np.ndarray, xi: float,
                         pair: Optional[Tuple[int, int]] = None) -> WindowSeries:
    """Mean of ``values`` over the trailing span in which mean_phase rose by xi."""
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    m = np.asarray(mean_phase, dtype=float)
    if len(t) < 3 or m[-1] - m[0] < xi:
        raise TrajectoryTooShort(
            f"mean phase advances only {m[-1] - m[0]:.4g} < one period {xi}"
        )
    first = int(np.searchsorted(m, m[0] + xi))
    idx = np.arange(first, len(t))

    target = m[idx] - xi
    j = np.clip(np.searchsorted(m, target, side="right") - 1, 0, len(t) - 2)
    frac = (target - m[j]) / (m[j + 1] - m[j])
    start = t[j] + frac * (t[j + 1] - t[j])
    v_start = v[j] + frac * (v[j + 1] - v[j])

    seg = np.diff(t) * 0.5 * (v[1:] + v[:-1])
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    partial = (t[j + 1] - start) * 0.5 * (v_start + v[j + 1])
    integral = cum[idx] - cum[j + 1] + partial
    lengths = t[idx] - start
    return WindowSeries(times=t[idx], values=integral / lengths,
                        window_lengths=lengths, pair=pair)


def windowed_phase_diff(traj: Trajectory, i: int, j: int) -> WindowSeries:
    """Window-averaged theta_i - theta_j along the trajectory."""
    d = traj.theta[:, i] - traj.theta[:, j]
    return trailing_window_mean(traj.t, d, mean_phase_series(traj),
                                traj.spec.pulse.xi, pair=(i, j))


def windowed_series_from_samples(times, values, window: float,
                                 pair: Optional[Tuple[int, int]] = None) -> WindowSeries:
    """Trailing fixed-length window means for externally generated series."""
    t = np.asarray(times, dtype=float)
    fake_mean = t.copy()  # uniform advance: window of one "period" == fixed length
    return trailing_window_mean(t, np.asarray(values, dtype=float), fake_mean,
                                window, pair=pair)


def measure_sync_time(series: WindowSeries, upper_frac: float = UPPER_FRAC,
                      lower_frac: float = LOWER_FRAC) -> SyncReport:
    """Fit log(value) vs t inside [lower, upper] x initial value; tau = -1/slope."""
    v = series.values
    t = series.times
    v0 = v[0]
    if not v0 > 0.0:
        raise NoDecay("windowed series must start positive")
    mask = (v >= lower_frac * v0) & (v <= upper_frac * v0) & (v > 0.0)
    if int(mask.sum()) < MIN_FIT_POINTS:
        raise NoDecay(
            f"only {int(mask.sum())} points inside the fit band (need {MIN_FIT_POINTS})"
        )
    ts, logs = t[mask], np.log(v[mask])
    slope, intercept = np.polyfit(ts, logs, 1)
    if slope >= 0.0:
        raise NoDecay(f"fitted slope {slope:.3e} is not a decay")
    resid = logs - (slope * ts + intercept)
    fit = FitResult(
        slope=float(slope), intercept=float(intercept),
        t_window=(float(ts[0]), float(ts[-1])),
        rms_log_residual=float(np.sqrt(np.mean(resid**2))),
        n_points=int(mask.sum()),
    )
    return SyncReport(pair=series.pair, tau_measured=float(-1.0 / slope), fit=fit)


def strong_sync_check(traj: Trajectory, tol: Optional[float] = None) -> List[SyncReport]:
    """Final-offset verdicts for every oscillator pair.

    A pair counts as synchronized when its final phase difference sits
    within ``tol`` of an integer multiple of the pulse period and the
    windowed residual has not grown over the last five windows.
    """
    xi = traj.spec.pulse.xi
    if tol is None:
        tol = STRONG_SYNC_TOL_FACTOR * xi
    mean = mean_phase_series(traj)
    reports = []
    for i in range(traj.n):
        for j in range(i + 1, traj.n):
            delta = float(traj.theta[-1, i] - traj.theta[-1, j])
            mu = int(round(delta / xi))
            residual = abs(delta - mu * xi)
            series = trailing_window_mean(traj.t, traj.theta[:, i] - traj.theta[:, j],
                                          mean, xi, pair=(i, j))
            trend_ok = _residual_trend_non_increasing(series, mu, xi)
            reports.append(SyncReport(
                pair=(i, j), mu=mu, residual=residual,
                synced=bool(residual < tol and trend_ok),
            ))
    return reports


def _residual_trend_non_increasing(series: WindowSeries, mu: int, xi: float) -> bool:
    psi_local = float(series.window_lengths[-1])
    t_end = series.times[-1]
    samples = [t_end - k * psi_local for k in range(4, -1, -1)]
    if samples[0] < series.times[0]:
        raise TrajectoryTooShort("final segment spans fewer than 5 windows")
    res = [abs(float(np.interp(s, series.times, series.values)) - mu * xi)
           for s in samples]
    slack = TREND_SLACK_FACTOR * xi + 1e-15
    return all(res[k + 1] <= res[k] + slack for k in range(4))


@dataclass(frozen=True)
class PeakPair:
    oscillator: int
    t_sigma_peak: float
    sigma_fwhm: float
    t_rate_peak: Optional[float]  # None when the rate series is flat
    offset: Optional[float]       # t_rate_peak - t_sigma_peak


@dataclass(frozen=True)
class MechanismSeries:
    """Received-pulse diagnostics: sigma(theta_i(t)) and the phase rates."""

    times: np.ndarray
    sigma_values: np.ndarray  # (k, 2)
    rates: np.ndarray         # (k, 2)
    peaks: List[PeakPair]


def _quadratic_peak(t: np.ndarray, y: np.ndarray, k: int) -> Tuple[float, float]:
    # parabola through the three samples around a discrete maximum
    if k == 0 or k == len(y) - 1:
        return float(t[k]), float(y[k])
    y0, y1, y2 = y[k - 1], y[k], y[k + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom == 0.0:
        return float(t[k]), float(y[k])
    shift = 0.5 * (y0 - y2) / denom
    h = t[k + 1] - t[k]
    return float(t[k] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift)


def _local_maxima(y: np.ndarray, threshold: float) -> np.ndarray:
    inner = (y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]) & (y[1:-1] > threshold)
    return np.flatnonzero(inner) + 1


def _fwhm(t: np.ndarray, y: np.ndarray, k: int, height: float) -> float:
    half = 0.5 * height
    left = k
    while left > 0 and y[left] > half:
        left -= 1
    right = k
    while right < len(y) - 1 and y[right] > half:
        right += 1
    if y[left] > half or y[right] > half:
        return math.nan  # peak truncated by the trajectory ends
    tl = np.interp(half, [y[left], y[left + 1]], [t[left], t[left + 1]])
    tr = np.interp(half, [y[right], y[right - 1]], [t[right], t[right - 1]])
    return float(tr - tl)


def mechanism_series(traj: Trajectory) -> MechanismSeries:
    """Per-oscillator pulse and rate series with peak alignment diagnostics."""
    if traj.n != 2:
        raise ValueError("mechanism diagnostics are defined for two oscillators")
    t = traj.t
    sig = np.column_stack([sigma(traj.theta[:, i], traj.spec.pulse) for i in range(2)])
    rates = traj.dtheta.copy()
    peaks: List[PeakPair] = []
    for i in range(2):
        y = sig[:, i]
        flat_rate = (rates[:, i].max() - rates[:, i].min()) <= 1e-12 * max(
            1.0, float(np.abs(rates[:, i]).max()))
        rate_peaks = None if flat_rate else _local_maxima(
            rates[:, i], rates[:, i].min() + 0.5 * (rates[:, i].max() - rates[:, i].min()))
        for k in _local_maxima(y, 0.5 * y.max()):
            t_pk, height = _quadratic_peak(t, y, k)
            width = _fwhm(t, y, k, height)
            if math.isnan(width):
                continue
            if rate_peaks is None or len(rate_peaks) == 0:
                peaks.append(PeakPair(i, t_pk, width, None, None))
                continue
            t_rates = [_quadratic_peak(t, rates[:, i], kr)[0] for kr in rate_peaks]
            nearest = min(t_rates, key=lambda x: abs(x - t_pk))
            peaks.append(PeakPair(i, t_pk, width, nearest, nearest - t_pk))
    return MechanismSeries(times=t, sigma_values=sig, rates=rates, peaks=peaks)


def mode_projection_series(traj: Trajectory):
    """Left-eigenvector projections of the deviation from the mean phase.

    Returns (times, projections, decomposition); row i of the projection
    matrix is mode i, and the Perron row carries the mean phase itself.
    """
    dec = spectral_decompose(traj.spec.coupling)
    proj = dec.left @ traj.theta.T
    mean = proj[dec.perron_index].real / dec.left_perron.real.sum()
    out = proj.copy()
    out[dec.perron_index] = mean
    return traj.t, out, dec


def export_series_csv(series: WindowSeries, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,value\n")
        for tk, vk in zip(series.times, series.values):
            fh.write(f"{repr(float(tk))},{repr(float(vk))}\n")


def export_mechanism_csv(mech: MechanismSeries, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("t,sigma_1,sigma_2,rate_1,rate_2\n")
        for k in range(len(mech.times)):
            fh.write(",".join([
                repr(float(mech.times[k])),
                repr(float(mech.sigma_values[k, 0])), repr(float(mech.sigma_values[k, 1])),
                repr(float(mech.rates[k, 0])), repr(float(mech.rates[k, 1])),
            ]) + "\n")


def sync_report_text(report: SyncReport) -> str:
    """Flat key=value block for one pair."""
    lines = []
    if report.pair is not None:
        lines.append(f"pair={report.pair[0]},{report.pair[1]}")
    if report.tau_measured is not None:
        lines.append(f"tau_measured={repr(report.tau_measured)}")
    if report.mu is not None:
        lines.append(f"mu={report.mu}")
    if report.residual is not None:
        lines.append(f"residual={repr(report.residual)}")
    if report.synced is not None:
        lines.append(f"synced={str(report.synced).lower()}")
    if report.fit is not None:
        lines.append(f"fit_slope={repr(report.fit.slope)}")
        lines.append(f"fit_intercept={repr(report.fit.intercept)}")
        lines.append(f"fit_t_lo={repr(report.fit.t_window[0])}")
        lines.append(f"fit_t_hi={repr(report.fit.t_window[1])}")
        lines.append(f"fit_rms_log_residual={repr(report.fit.rms_log_residual)}")
        lines.append(f"fit_points={report.fit.n_points}")
    return "\n".join(lines) + "\n"
