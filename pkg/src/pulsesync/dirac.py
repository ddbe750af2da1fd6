"""Event-driven simulation of oscillators exchanging Dirac pulses.

Phases grow linearly at the common rate and jump by a fixed amount when a
pulse arrives.  A pulse is emitted whenever a phase crosses an integer by
continuous motion; arrivals are applied after the transmission lag.  A jump
that carries a phase across an integer does NOT emit: that firing is
skipped, not deferred.  All arithmetic is piecewise linear, so phases can
be replayed exactly at arbitrary query times.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

SIMULTANEITY_EPS = 1e-12
DEFAULT_FLOOD_CAP = 10_000  # emissions per unit time


class EventFlood(RuntimeError):
    """Emission rate exceeded the configured cap (jump size too large)."""


@dataclass(frozen=True)
class PulseArrival:
    """One applied arrival: pulse sent by ``emitter`` lands on everyone else."""

    time: float            # arrival time (emission time + lag)
    emit_time: float
    emitter: int
    receivers: Tuple[int, ...]
    jump: float
    exact_hits: Tuple[int, ...] = ()  # receivers parked exactly on an integer


@dataclass
class EventTrajectory:
    omega: float
    jump: float
    delta_t: float
    n: int
    t_end: float
    theta0: np.ndarray
    # per-oscillator piecewise-linear segments: break times and phases just after
    break_times: List[List[float]] = field(default_factory=list)
    break_phases: List[List[float]] = field(default_factory=list)
    events: List[PulseArrival] = field(default_factory=list)
    emissions: List[Tuple[float, int]] = field(default_factory=list)
    pending: List[Tuple[float, int, int]] = field(default_factory=list)

    def phase_at(self, t: float, i: int) -> float:
        """Phase of oscillator i at time t (right-continuous at jumps)."""
        if t < 0.0 or t > self.t_end + SIMULTANEITY_EPS:
            raise ValueError(f"query time {t} outside [0, {self.t_end}]")
        times = self.break_times[i]
        k = np.searchsorted(times, t, side="right") - 1
        return self.break_phases[i][k] + self.omega * (t - times[k])

    def phases_at(self, t: float) -> np.ndarray:
        return np.array([self.phase_at(t, i) for i in range(self.n)])

    def sample(self, h: float):
        """Uniform-grid samples (t, theta, dtheta); the rate is the slope omega."""
        n_steps = max(1, int(np.ceil(self.t_end / h - 1e-9)))
        t = np.minimum(np.arange(n_steps + 1) * h, self.t_end)
        theta = np.array([self.phases_at(tk) for tk in t])
        dtheta = np.full_like(theta, self.omega)
        return t, theta, dtheta


def simulate_dirac(omega: float, jump: float, delta_t: float, theta0,
                   t_end: float, flood_cap: int = DEFAULT_FLOOD_CAP) -> EventTrajectory:
    """Run the all-to-all Dirac-pulse system exactly to ``t_end``."""
    if not (omega > 0.0):
        raise ValueError(f"rate omega must be positive, got {omega}")
    if jump < 0.0:
        raise ValueError(f"jump size must be >= 0, got {jump}")
    if delta_t < 0.0:
        raise ValueError(f"lag must be >= 0, got {delta_t}")
    th0 = np.asarray(theta0, dtype=float)
    n = th0.size
    if n < 2:
        raise ValueError("need at least two oscillators")

    traj = EventTrajectory(
        omega=omega, jump=jump, delta_t=delta_t, n=n, t_end=float(t_end),
        theta0=th0.copy(),
        break_times=[[0.0] for _ in range(n)],
        break_phases=[[float(x)] for x in th0],
    )

    phase = th0.astype(float).copy()
    last_t = np.zeros(n)  # time of each oscillator's latest break
    # next integer each oscillator will cross by continuous motion; a phase
    # sitting exactly on an integer counts as already past it
    target = np.floor(phase) + 1.0

    arrivals: list = []  # heap of (arrival_time, seq, emitter)
    seq = 0
    unit_bucket = -1
    bucket_count = 0

    def record_break(i: int, t: float, value: float):
        if traj.break_times[i][-1] == t:
            traj.break_phases[i][-1] = value
        else:
            traj.break_times[i].append(t)
            traj.break_phases[i].append(value)
        phase[i] = value
        last_t[i] = t

    def current_phase(i: int, t: float) -> float:
        return phase[i] + omega * (t - last_t[i])

    t_now = 0.0
    while True:
        cross_times = t_now + (target - (phase + omega * (t_now - last_t))) / omega
        next_cross = float(cross_times.min())
        next_arr = arrivals[0][0] if arrivals else np.inf
        te = min(next_cross, next_arr)
        if te > t_end:
            break

        # flood guard: emissions per unit time
        b = int(np.floor(te))
        if b != unit_bucket:
            unit_bucket, bucket_count = b, 0

        # work through everything due within the simultaneity window,
        # lowest oscillator index first
        while True:
            due_cross = [i for i in range(n)
                         if cross_times[i] <= te + SIMULTANEITY_EPS]
            due_arr = arrivals[0][0] <= te + SIMULTANEITY_EPS if arrivals else False
            pick_arr = False
            if due_arr and due_cross:
                pick_arr = arrivals[0][2] <= min(due_cross)
            elif due_arr:
                pick_arr = True
            elif not due_cross:
                break

            if pick_arr:
                t_a, _, em = heapq.heappop(arrivals)
                t_a = max(t_a, t_now)
                receivers = tuple(j for j in range(n) if j != em)
                exact = []
                for j in receivers:
                    val = current_phase(j, t_a) + jump
                    record_break(j, t_a, val)
                    if val == np.round(val):
                        exact.append(j)
                    # any integer swept by the jump is skipped, not emitted
                    target[j] = np.floor(val) + 1.0
                    cross_times[j] = t_a + (target[j] - val) / omega
                traj.events.append(PulseArrival(
                    time=t_a, emit_time=t_a - delta_t, emitter=em,
                    receivers=receivers, jump=jump, exact_hits=tuple(exact),
                ))
            else:
                i = min(due_cross)
                t_c = float(cross_times[i])
                record_break(i, t_c, float(target[i]))  # exact integer landing
                traj.emissions.append((t_c, i))
                bucket_count += 1
                if bucket_count > flood_cap:
                    raise EventFlood(
                        f"more than {flood_cap} emissions in unit time around t={t_c:.6g}"
                    )
                target[i] += 1.0
                cross_times[i] = t_c + 1.0 / omega
                heapq.heappush(arrivals, (t_c + delta_t, seq, i))
                seq += 1
            t_now = te

    traj.pending = [(t_a, s, em) for (t_a, s, em) in sorted(arrivals)]
    return traj


def sign_changes(traj: EventTrajectory, i: int = 0, j: int = 1) -> int:
    """How often theta_i - theta_j changes sign across the applied events."""
    times = [0.0] + [ev.time for ev in traj.events] + [traj.t_end]
    diffs = [traj.phase_at(t, i) - traj.phase_at(t, j) for t in times]
    count = 0
    prev = np.sign(diffs[0])
    for d in diffs[1:]:
        s = np.sign(d)
        if s != 0 and prev != 0 and s != prev:
            count += 1
        if s != 0:
            prev = s
    return count


def phase_diff_at_emissions(traj: EventTrajectory, emitter: int, i: int = 0, j: int = 1):
    """theta_i - theta_j sampled right after each emission by ``emitter``."""
    times = [t for (t, e) in traj.emissions if e == emitter]
    diffs = [traj.phase_at(t, i) - traj.phase_at(t, j) for t in times]
    return np.array(times), np.array(diffs)


def export_events_csv(traj: EventTrajectory, path) -> None:
    """One row per applied arrival: t,emitter,theta_emitter_after,receiver_jumps."""
    with open(path, "w", newline="\n") as fh:
        fh.write("t,emitter,theta_emitter_after,receiver_jumps\n")
        for ev in traj.events:
            jumps = ";".join(
                f"{r}:{repr(traj.phase_at(ev.time, r))}" for r in ev.receivers
            )
            fh.write(
                f"{repr(ev.time)},{ev.emitter},"
                f"{repr(traj.phase_at(ev.time, ev.emitter))},{jumps}\n"
            )


def export_sampled_csv(traj: EventTrajectory, path, h: float = 0.01) -> None:
    """Sampled trajectory in the same schema as the smooth-pulse integrator."""
    t, theta, dtheta = traj.sample(h)
    header = ",".join(
        ["t"] + [f"theta_{k + 1}" for k in range(traj.n)]
        + [f"dtheta_{k + 1}" for k in range(traj.n)]
    )
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for k in range(len(t)):
            row = [repr(float(t[k]))]
            row += [repr(float(x)) for x in theta[k]]
            row += [repr(float(x)) for x in dtheta[k]]
            fh.write(",".join(row) + "\n")
