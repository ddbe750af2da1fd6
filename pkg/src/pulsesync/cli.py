"""Experiment harness: dispatch simulations and predictions, write CSV artifacts.

Usage:  pulsesync <experiment> [--config FILE] [--key value ...] --out DIR

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, dde, dirac, lintheory, network, pulse
from .config import (ConfigError, EXPERIMENTS, ExperimentConfig, manifest_text,
                     parse_config_file, parse_theta0, resolve)

NUMERICAL_ERRORS = (
    dde.StepTooLarge,
    dirac.EventFlood,
    lintheory.QuadratureError,
    lintheory.InfiniteSyncTime,
    lintheory.NonDecayingMode,
    analysis.NoDecay,
    analysis.TrajectoryTooShort,
    network.RowSumMismatch,
    network.DefectiveMatrix,
    np.linalg.LinAlgError,
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _build_pulse(cfg: ExperimentConfig) -> pulse.PulseFunction:
    if cfg["pulse_kind"] == "constant":
        return pulse.constant(cfg["pulse_level"], xi=cfg["xi"])
    return pulse.gaussian_comb(cfg["xi"], cfg["w"], cfg["comb_range"])


def _build_coupling(cfg: ExperimentConfig) -> network.CouplingMatrix:
    kind = cfg["coupling_kind"]
    if kind == "all_to_all":
        return network.make_all_to_all(cfg["n"], cfg["a"])
    if kind == "ring_laplacian":
        return network.make_ring_laplacian(cfg["n"], cfg["a"])
    return network.coupling_from_csv(cfg["coupling_csv"])


def _theta_bar0(cfg: ExperimentConfig) -> float:
    v = cfg["theta_bar0"]
    return 0.5 * cfg["xi"] if v < 0.0 else v


def _two_osc_params(cfg: ExperimentConfig, delta_t: float) -> lintheory.TheoryParams:
    return lintheory.TheoryParams(
        pulse=_build_pulse(cfg), omega=cfg["omega"], jtilde=cfg["a"], delta_t=delta_t,
    )


def _auto_t_end(params: lintheory.TheoryParams, decades: float = 1.3) -> float:
    pin = lintheory.period_integrals(params)
    try:
        tau = lintheory.sync_time_two(params)
    except lintheory.InfiniteSyncTime:
        return 50.0 * pin.psi
    return decades * math.log(10.0) * tau + 3.0 * pin.psi


def _run_two_osc(cfg: ExperimentConfig, delta_t: float, t_end: float, h: float):
    theta_bar0 = _theta_bar0(cfg)
    phi0 = cfg["phi0"]
    spec = dde.SystemSpec(
        pulse=_build_pulse(cfg), coupling=network.make_all_to_all(2, cfg["a"]),
        omega=cfg["omega"], delta_t=delta_t,
    )
    theta0 = np.array([theta_bar0 + phi0, theta_bar0 - phi0])
    return dde.integrate_rk4(spec, theta0, t_end=t_end, h_req=h if h > 0 else None)


# ---------------------------------------------------------------- experiments

def _exp_simulate(cfg: ExperimentConfig, out: Path):
    coupling = _build_coupling(cfg)
    spec = dde.SystemSpec(pulse=_build_pulse(cfg), coupling=coupling,
                          omega=cfg["omega"], delta_t=cfg["delta_t"])
    theta0 = parse_theta0(cfg.values, coupling.n, cfg["xi"])
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else 20.0 * cfg["xi"] / cfg["omega"]
    traj = dde.integrate_rk4(
        spec, theta0, dde.HistoryPolicy(cfg["history"]), t_end=t_end,
        h_req=cfg["h"] if cfg["h"] > 0 else None,
    )
    dde.export_trajectory_csv(traj, out / "trajectory.csv")
    tol = cfg["strong_tol"] if cfg["strong_tol"] > 0 else None
    try:
        reports = analysis.strong_sync_check(traj, tol=tol)
        text = "\n".join(analysis.sync_report_text(r) for r in reports)
        (out / "strong_sync.txt").write_text(text)
    except analysis.TrajectoryTooShort:
        pass  # short runs still produce the trajectory artifact
    return [out / "trajectory.csv"]


def _exp_dirac(cfg: ExperimentConfig, out: Path):
    theta0 = parse_theta0(cfg.values, cfg["n"], cfg["xi"])
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else 20.0
    traj = dirac.simulate_dirac(cfg["omega"], cfg["jump"], cfg["delta_t"], theta0, t_end)
    dirac.export_events_csv(traj, out / "events.csv")
    dirac.export_sampled_csv(traj, out / "trajectory.csv", h=cfg["sample_h"])
    return [out / "events.csv", out / "trajectory.csv"]


def _exp_predict(cfg: ExperimentConfig, out: Path):
    params = _two_osc_params(cfg, cfg["delta_t"])
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else _auto_t_end(params)
    theta_bar0 = _theta_bar0(cfg)
    times = np.linspace(0.0, t_end, cfg["points"])
    rows = [(float(t), lintheory.predict_phi(float(t), cfg["phi0"], params, theta_bar0))
            for t in times]
    _write_csv(out / "prediction.csv", "t,phi_linear", rows)
    return [out / "prediction.csv"]


def _exp_spectrum(cfg: ExperimentConfig, out: Path):
    coupling = _build_coupling(cfg)
    dec = network.spectral_decompose(coupling)
    report = network.classify_stability(dec)
    params = lintheory.TheoryParams(
        pulse=_build_pulse(cfg), omega=cfg["omega"], jtilde=coupling.row_sum,
        delta_t=cfg["delta_t"],
    )
    rows = []
    for mode in report:
        try:
            tau = lintheory.mode_sync_time(mode.eigenvalue, params)
        except (lintheory.NonDecayingMode, lintheory.InfiniteSyncTime):
            tau = math.inf
        rows.append((mode.index, float(mode.eigenvalue.real), float(mode.eigenvalue.imag),
                     float(mode.rate_sign), mode.verdict, tau))
    _write_csv(out / "spectrum.csv",
               "mode,lambda_re,lambda_im,decay_rate,verdict,tau", rows)
    return [out / "spectrum.csv"]


def _measure_tau_full(cfg: ExperimentConfig, delta_t: float):
    params = _two_osc_params(cfg, delta_t)
    tau_formula = lintheory.sync_time_two(params)
    t_end = 6.0 * tau_formula + 4.0 * lintheory.period_integrals(params).psi
    traj = _run_two_osc(cfg, delta_t, t_end, cfg["h"])
    series = analysis.windowed_phase_diff(traj, 0, 1)
    report = analysis.measure_sync_time(series, cfg["upper_frac"], cfg["lower_frac"])
    return report.tau_measured, tau_formula, params, t_end


def _measure_tau_linear(cfg: ExperimentConfig, params, t_end: float) -> float:
    pin = lintheory.period_integrals(params)
    theta_bar0 = _theta_bar0(cfg)
    times = np.arange(0.0, t_end, pin.psi / 64.0)
    vals = np.abs([lintheory.predict_phi(float(t), cfg["phi0"], params, theta_bar0)
                   for t in times])
    series = analysis.windowed_series_from_samples(times, vals, pin.psi)
    return analysis.measure_sync_time(series, cfg["upper_frac"], cfg["lower_frac"]).tau_measured


def _exp_sweep_delay(cfg: ExperimentConfig, out: Path, filename="sweep.csv"):
    grid = np.geomspace(cfg["sweep_min"], cfg["sweep_max"], cfg["sweep_points"])
    rows = []
    for delta_t in sorted(float(d) for d in grid):
        tau_full, tau_formula, params, t_end = _measure_tau_full(cfg, delta_t)
        tau_lin = _measure_tau_linear(cfg, params, t_end)
        rows.append((delta_t, tau_full, tau_lin, tau_formula))
    _write_csv(out / filename, "delta_t,tau_measured_full,tau_linear,tau_formula", rows)
    return [out / filename]


def _exp_fig1(cfg: ExperimentConfig, out: Path):
    theta0 = parse_theta0(cfg.values, 2, 1.0) if cfg["theta0"] else np.array([0.6, 0.3])
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else 20.0
    written = []
    for tag, lag in (("delay0", 0.0), ("delay05", 0.5)):
        traj = dirac.simulate_dirac(cfg["omega"], cfg["jump"], lag, theta0, t_end)
        t, theta, _ = traj.sample(cfg["sample_h"])
        rows = [(float(t[k]), float(theta[k, 0]), float(theta[k, 1]))
                for k in range(len(t))]
        path = out / f"fig1_{tag}.csv"
        _write_csv(path, "t,theta_1,theta_2", rows)
        written.append(path)
    return written


def _fig2_rows(cfg: ExperimentConfig, delta_t: float):
    params = _two_osc_params(cfg, delta_t)
    theta_bar0 = _theta_bar0(cfg)
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else _auto_t_end(params)
    traj = _run_two_osc(cfg, delta_t, t_end, cfg["h"])
    rows = []
    frac = cfg["xi"] / 16.0
    q = 0
    while True:
        t_q = lintheory.mean_phase_time(theta_bar0 + q * frac, params, theta_bar0)
        if t_q > traj.t_end:
            break
        th, _ = dde.history_eval(traj, t_q)
        phi_full = 0.5 * (th[0] - th[1])
        phi_lin = lintheory.predict_phi(t_q, cfg["phi0"], params, theta_bar0)
        rows.append((float(t_q), float(phi_full), float(phi_lin)))
        q += 1
    return rows


def _exp_fig2(cfg: ExperimentConfig, out: Path):
    _write_csv(out / "fig2.csv", "t,phi_full,phi_linear", _fig2_rows(cfg, cfg["delta_t"]))
    inset_cfg = ExperimentConfig(cfg.experiment, cfg.out_dir,
                                 {**cfg.values, "t_end": 0.0})
    _write_csv(out / "fig2_inset.csv", "t,phi_full,phi_linear",
               _fig2_rows(inset_cfg, cfg["inset_delta_t"]))
    return [out / "fig2.csv", out / "fig2_inset.csv"]


def _exp_fig3(cfg: ExperimentConfig, out: Path):
    return _exp_sweep_delay(cfg, out, filename="fig3.csv")


def _exp_mechanism(cfg: ExperimentConfig, out: Path):
    params = _two_osc_params(cfg, cfg["delta_t"])
    pin = lintheory.period_integrals(params)
    t_end = cfg["t_end"] if cfg["t_end"] > 0 else 5.0 * pin.psi
    traj = _run_two_osc(cfg, cfg["delta_t"], t_end, cfg["h"])
    mech = analysis.mechanism_series(traj)
    analysis.export_mechanism_csv(mech, out / "mechanism.csv")
    rows = [(pk.oscillator + 1, pk.t_sigma_peak, pk.sigma_fwhm,
             pk.t_rate_peak if pk.t_rate_peak is not None else math.nan,
             pk.offset if pk.offset is not None else math.nan)
            for pk in mech.peaks]
    _write_csv(out / "mechanism_peaks.csv",
               "oscillator,t_sigma_peak,sigma_fwhm,t_rate_peak,offset", rows)
    return [out / "mechanism.csv", out / "mechanism_peaks.csv"]


_RUNNERS = {
    "simulate": _exp_simulate,
    "dirac": _exp_dirac,
    "predict": _exp_predict,
    "spectrum": _exp_spectrum,
    "sweep-delay": _exp_sweep_delay,
    "fig1": _exp_fig1,
    "fig2": _exp_fig2,
    "fig3": _exp_fig3,
    "mechanism": _exp_mechanism,
}


def run(config: ExperimentConfig):
    """Execute one experiment; returns the list of files written."""
    out = config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.txt").write_text(manifest_text(config))
    written = _RUNNERS[config.experiment](config, out)
    return [out / "manifest.txt"] + list(written)


def _parse_overrides(tokens) -> dict:
    raw = {}
    k = 0
    while k < len(tokens):
        tok = tokens[k]
        if not tok.startswith("--") or k + 1 >= len(tokens):
            raise ConfigError(f"expected --key value pairs, got {tok!r}")
        raw[tok[2:]] = tokens[k + 1]
        k += 2
    return raw


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pulsesync",
        description="pulse-coupled oscillator experiments (CSV artifacts)",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--out", required=True, help="output directory")
    args, extra = parser.parse_known_args(argv)
    try:
        raw = parse_config_file(args.config) if args.config else {}
        raw.update(_parse_overrides(extra))
        config = resolve(args.experiment, args.out, raw)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        written = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure in {config.experiment}: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
