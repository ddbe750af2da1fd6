"""Delay integration of the coupled phase equations by the method of steps.

Each phase obeys  d(theta_i)/dt = omega_i + sum_j J_ij * sigma(theta_j(t - lag)).
For a positive lag the right-hand side depends only on already-computed
history, so a fourth-order step needs the delayed phases at the step
endpoints (grid nodes, exact) and at the half step (cubic Hermite from the
stored values and rates).  The step is chosen so the lag is an integer
multiple (>= 4) of it.  Zero lag falls back to classic RK4; a forward-Euler
variant is kept deliberately naive to expose the spurious synchronization
it produces at zero lag.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .network import CouplingMatrix
from .pulse import PulseFunction, sigma, value_evaluator

CONSTANT_RATE = "constant_rate"
FROZEN = "frozen"

HALVING_RTOL = 1e-8


class StepTooLarge(RuntimeError):
    """Step failed the monotonicity or step-halving verification."""


@dataclass(frozen=True)
class HistoryPolicy:
    """Pre-initial history: free rotation at the eigenfrequency, or frozen phases."""

    kind: str = CONSTANT_RATE

    def __post_init__(self):
        if self.kind not in (CONSTANT_RATE, FROZEN):
            raise ValueError(f"unknown history policy {self.kind!r}")


@dataclass(frozen=True)
class SystemSpec:
    pulse: PulseFunction
    coupling: CouplingMatrix
    omega: np.ndarray  # per-oscillator rates, shape (n,)
    delta_t: float

    def __post_init__(self):
        om = np.atleast_1d(np.asarray(self.omega, dtype=float))
        if om.size == 1:
            om = np.full(self.coupling.n, float(om[0]))
        if om.shape != (self.coupling.n,):
            raise ValueError(
                f"omega must be scalar or length {self.coupling.n}, got shape {om.shape}"
            )
        if not np.all(om > 0.0):
            raise ValueError("eigenfrequencies must be positive")
        if not (self.delta_t >= 0.0 and np.isfinite(self.delta_t)):
            raise ValueError(f"time lag must be >= 0, got {self.delta_t}")
        object.__setattr__(self, "omega", om)

    @property
    def n(self) -> int:
        return self.coupling.n

    @property
    def uniform_omega(self) -> bool:
        return bool(np.all(self.omega == self.omega[0]))


@dataclass
class Trajectory:
    """Uniform-grid states and rates, plus everything needed to continue the run."""

    spec: SystemSpec
    theta0: np.ndarray
    policy: HistoryPolicy
    h: float
    t: np.ndarray       # (k,)
    theta: np.ndarray   # (k, n)
    dtheta: np.ndarray  # (k, n)
    delay_steps: int    # lag / h (0 for an undelayed run)
    method: str = "rk4"

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def t_end(self) -> float:
        return float(self.t[-1])


def _rhs(spec: SystemSpec, delayed_theta: np.ndarray) -> np.ndarray:
    return spec.omega + spec.coupling.weights @ sigma(delayed_theta, spec.pulse)


def _history_value(spec, theta0, policy, t):
    if policy.kind == CONSTANT_RATE:
        return theta0 + spec.omega * t, spec.omega.copy()
    return theta0.copy(), np.zeros_like(theta0)


def default_step(spec: SystemSpec) -> float:
    """min(psi/200, lag/4): resolve both the pulse passage and the lag."""
    from . import lintheory  # deferred; lintheory does not import this module

    omega = float(np.mean(spec.omega))
    try:
        params = lintheory.TheoryParams(
            pulse=spec.pulse, omega=omega, jtilde=spec.coupling.row_sum,
            delta_t=spec.delta_t,
        )
        psi = lintheory.period_integrals(params).psi
    except (ValueError, lintheory.QuadratureError):
        psi = spec.pulse.xi / omega
    if spec.delta_t > 0.0:
        return min(psi / 200.0, spec.delta_t / 4.0)
    return psi / 200.0


def _resolve_step(spec: SystemSpec, h_req: Optional[float]):
    if h_req is None:
        h_req = default_step(spec)
    if not (h_req > 0.0):
        raise ValueError(f"step must be positive, got {h_req}")
    if spec.delta_t > 0.0:
        m = max(4, int(np.ceil(spec.delta_t / h_req - 1e-12)))
        return spec.delta_t / m, m
    return float(h_req), 0


def _hermite_half(ya, da, yb, db, h):
    # cubic Hermite evaluated at the interval midpoint
    return 0.5 * (ya + yb) + 0.125 * h * (da - db)


def _delayed_at(traj_theta, traj_dtheta, spec, theta0, policy, h, k):
    """Delayed phases at grid index k (may be negative -> history)."""
    if k < 0:
        return _history_value(spec, theta0, policy, k * h)[0]
    return traj_theta[k]


def _integrate_rk4_arrays(spec, theta0, policy, n_steps, h, m,
                          theta=None, dtheta=None, start=0):
    n = spec.n
    weights = spec.coupling.weights
    omega = spec.omega
    sig = value_evaluator(spec.pulse)

    def rhs(th):
        return omega + weights @ sig(th)

    if theta is None:
        theta = np.empty((n_steps + 1, n))
        dtheta = np.empty((n_steps + 1, n))
        theta[0] = theta0
        dtheta[0] = rhs(_delayed_at(theta, dtheta, spec, theta0, policy, h, -m)
                        if m > 0 else theta0)
    g_carry = None  # delayed path: stage at the step end is the next step's start
    for k in range(start, n_steps):
        if m > 0:
            # RHS depends on delayed state only: fourth order reduces to
            # Simpson over the known delayed-rate function
            if g_carry is None:
                g0 = rhs(_delayed_at(theta, dtheta, spec, theta0, policy, h, k - m))
            else:
                g0 = g_carry
            if k - m < 0:
                th_half, _ = _history_value(spec, theta0, policy, (k - m + 0.5) * h)
            else:
                th_half = _hermite_half(theta[k - m], dtheta[k - m],
                                        theta[k - m + 1], dtheta[k - m + 1], h)
            gh = rhs(th_half)
            g1 = rhs(_delayed_at(theta, dtheta, spec, theta0, policy, h, k - m + 1))
            theta[k + 1] = theta[k] + (h / 6.0) * (g0 + 4.0 * gh + g1)
            dtheta[k + 1] = g1
            g_carry = g1
        else:
            y = theta[k]
            k1 = dtheta[k]  # stored rate is exactly rhs(theta[k])
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
            theta[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            dtheta[k + 1] = rhs(theta[k + 1])
        if not np.all(theta[k + 1] > theta[k]):
            raise StepTooLarge(
                f"phase not monotone across step {k} (t={k * h:.6g}); reduce the step"
            )
    return theta, dtheta


def integrate_rk4(spec: SystemSpec, theta0, policy: HistoryPolicy | None = None,
                  t_end: float = 1.0, h_req: Optional[float] = None,
                  verify_halving: bool = False) -> Trajectory:
    """Integrate the delayed system on [0, t_end].

    The actual step divides the lag exactly (lag = m*h, m >= 4).  With
    ``verify_halving`` the run is repeated at half the step and the final
    states must agree to relative 1e-8, else StepTooLarge.
    """
    if policy is None:
        policy = HistoryPolicy()
    if not (t_end > 0.0):
        raise ValueError(f"t_end must be positive, got {t_end}")
    th0 = np.asarray(theta0, dtype=float)
    if th0.shape != (spec.n,):
        raise ValueError(f"theta0 must have shape ({spec.n},), got {th0.shape}")
    h, m = _resolve_step(spec, h_req)
    n_steps = max(1, int(np.ceil(t_end / h - 1e-9)))
    theta, dtheta = _integrate_rk4_arrays(spec, th0, policy, n_steps, h, m)
    traj = Trajectory(
        spec=spec, theta0=th0, policy=policy, h=h,
        t=np.arange(n_steps + 1) * h, theta=theta, dtheta=dtheta,
        delay_steps=m, method="rk4",
    )
    if verify_halving:
        fine = integrate_rk4(spec, theta0, policy, t_end=t_end, h_req=h / 2.0)
        ours = history_eval(traj, t_end)[0]
        ref = history_eval(fine, t_end)[0]
        err = np.max(np.abs(ours - ref) / np.maximum(1.0, np.abs(ref)))
        if err > HALVING_RTOL:
            raise StepTooLarge(
                f"halving the step changes the final state by {err:.3e} (> {HALVING_RTOL})"
            )
    return traj


def continue_rk4(traj: Trajectory, t_end: float) -> Trajectory:
    """Extend a finished run to a later time, reusing its history verbatim."""
    if traj.method != "rk4":
        raise ValueError("only RK4 trajectories can be continued")
    if t_end <= traj.t_end:
        return traj
    n_old = len(traj.t) - 1
    n_steps = max(n_old, int(np.ceil(t_end / traj.h - 1e-9)))
    theta = np.empty((n_steps + 1, traj.n))
    dtheta = np.empty((n_steps + 1, traj.n))
    theta[: n_old + 1] = traj.theta
    dtheta[: n_old + 1] = traj.dtheta
    theta, dtheta = _integrate_rk4_arrays(
        traj.spec, traj.theta0, traj.policy, n_steps, traj.h, traj.delay_steps,
        theta=theta, dtheta=dtheta, start=n_old,
    )
    return replace(
        traj, t=np.arange(n_steps + 1) * traj.h, theta=theta, dtheta=dtheta,
    )


def integrate_euler_forward(spec: SystemSpec, theta0, t_end: float, h: float) -> Trajectory:
    """Naive forward Euler at zero lag (exists to expose its artificial delay)."""
    if spec.delta_t != 0.0:
        raise ValueError("the forward-Euler variant is defined for zero lag only")
    if not (h > 0.0 and t_end > 0.0):
        raise ValueError("h and t_end must be positive")
    th0 = np.asarray(theta0, dtype=float)
    if th0.shape != (spec.n,):
        raise ValueError(f"theta0 must have shape ({spec.n},), got {th0.shape}")
    n_steps = max(1, int(np.ceil(t_end / h - 1e-9)))
    theta = np.empty((n_steps + 1, spec.n))
    dtheta = np.empty((n_steps + 1, spec.n))
    theta[0] = th0
    sig = value_evaluator(spec.pulse)
    weights, omega = spec.coupling.weights, spec.omega
    for k in range(n_steps):
        dtheta[k] = omega + weights @ sig(theta[k])
        theta[k + 1] = theta[k] + h * dtheta[k]
        if not np.all(theta[k + 1] > theta[k]):
            raise StepTooLarge(f"phase not monotone across Euler step {k}")
    dtheta[n_steps] = omega + weights @ sig(theta[n_steps])
    return Trajectory(
        spec=spec, theta0=th0, policy=HistoryPolicy(), h=float(h),
        t=np.arange(n_steps + 1) * float(h), theta=theta, dtheta=dtheta,
        delay_steps=0, method="euler",
    )


def history_eval(traj: Trajectory, t: float, i: Optional[int] = None):
    """Phase and rate at an arbitrary time.

    Exact at grid nodes, cubic Hermite in between, history policy for t < 0.
    Returns a pair of vectors, or scalars when an oscillator index is given.
    """
    spec = traj.spec
    if t > traj.t_end + 1e-12 * max(1.0, traj.t_end):
        raise ValueError(f"t={t} is beyond the computed grid end {traj.t_end}")
    if t < 0.0:
        th, dth = _history_value(spec, traj.theta0, traj.policy, t)
    else:
        pos = t / traj.h
        k = min(int(np.floor(pos)), len(traj.t) - 1)
        u = pos - k
        if u < 1e-14 or k == len(traj.t) - 1:
            th, dth = traj.theta[k].copy(), traj.dtheta[k].copy()
        else:
            h = traj.h
            ya, da = traj.theta[k], traj.dtheta[k]
            yb, db = traj.theta[k + 1], traj.dtheta[k + 1]
            h00 = (2 * u - 3) * u * u + 1
            h10 = ((u - 2) * u + 1) * u
            h01 = (3 - 2 * u) * u * u
            h11 = (u - 1) * u * u
            th = h00 * ya + h10 * h * da + h01 * yb + h11 * h * db
            dth = ((6 * u * u - 6 * u) * ya + (3 * u * u - 4 * u + 1) * h * da
                   + (6 * u - 6 * u * u) * yb + (3 * u * u - 2 * u) * h * db) / h
    if i is None:
        return th, dth
    return float(th[i]), float(dth[i])


def export_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV dump: t,theta_1..theta_n,dtheta_1..dtheta_n with round-trip decimals."""
    n = traj.n
    header = ",".join(
        ["t"] + [f"theta_{j + 1}" for j in range(n)] + [f"dtheta_{j + 1}" for j in range(n)]
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(len(traj.t)):
            row = [repr(float(traj.t[k]))]
            row += [repr(float(x)) for x in traj.theta[k]]
            row += [repr(float(x)) for x in traj.dtheta[k]]
            fh.write(",".join(row) + "\n")
