"""Periodic pulse feedback functions.

The feedback a firing oscillator exerts on its neighbors is a smooth,
strictly positive, periodic function of the sender's phase.  The production
shape is a comb of unit-normalized Gaussians (period ``xi``, width ``w``);
a constant pulse is provided as a degenerate test shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

DEFAULT_COMB_RANGE = 20

GAUSSIAN_COMB = "gaussian_comb"
CONSTANT = "constant"


@dataclass(frozen=True)
class PulseParams:
    """Parameters of the Gaussian comb: period xi, width w, truncation range.

    The comb is truncated at ``|n| <= comb_range`` terms.  Terms fall off
    like exp(-(n*xi)^2 / 2w^2), so for w <= xi/4 the default range leaves a
    truncation error far below machine precision.
    """

    xi: float
    w: float
    comb_range: int = DEFAULT_COMB_RANGE

    def __post_init__(self):
        if not (self.xi > 0.0 and math.isfinite(self.xi)):
            raise ValueError(f"pulse period xi must be positive, got {self.xi}")
        if not (self.w > 0.0 and math.isfinite(self.w)):
            raise ValueError(f"pulse width w must be positive, got {self.w}")
        if int(self.comb_range) < 1:
            raise ValueError(f"comb_range must be >= 1, got {self.comb_range}")


@dataclass(frozen=True)
class GaussianCombPulse:
    """Comb of normalized Gaussians: one unit-area Gaussian per period."""

    params: PulseParams
    kind = GAUSSIAN_COMB

    @property
    def xi(self) -> float:
        return self.params.xi

    def min_value(self) -> float:
        # minimum sits halfway between comb centers
        return sigma(0.5 * self.params.xi, self)

    def max_value(self) -> float:
        return sigma(0.0, self)


@dataclass(frozen=True)
class ConstantPulse:
    """Constant feedback level; its derivative vanishes identically."""

    level: float
    xi: float = 1.0  # bookkeeping period for integrals and windows
    kind = CONSTANT

    def __post_init__(self):
        if not (self.level >= 0.0 and math.isfinite(self.level)):
            raise ValueError(f"constant pulse level must be >= 0, got {self.level}")
        if not (self.xi > 0.0 and math.isfinite(self.xi)):
            raise ValueError(f"pulse period xi must be positive, got {self.xi}")

    def min_value(self) -> float:
        return self.level

    def max_value(self) -> float:
        return self.level


PulseFunction = Union[GaussianCombPulse, ConstantPulse]


def gaussian_comb(xi: float, w: float, comb_range: int = DEFAULT_COMB_RANGE) -> GaussianCombPulse:
    return GaussianCombPulse(PulseParams(xi=xi, w=w, comb_range=comb_range))


def constant(level: float, xi: float = 1.0) -> ConstantPulse:
    return ConstantPulse(level=level, xi=xi)


def _checked(theta):
    th = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(th)):
        raise ValueError("phase must be finite")
    return th


def _reduced(th: np.ndarray, xi: float) -> np.ndarray:
    # fold into [-xi/2, xi/2) so every summed exponent stays bounded
    return th - xi * np.floor(th / xi + 0.5)


def _comb_terms(th: np.ndarray, params: PulseParams) -> np.ndarray:
    n = np.arange(-params.comb_range, params.comb_range + 1, dtype=float)
    offsets = _reduced(th, params.xi)[..., None] + n * params.xi
    return offsets, np.exp(-(offsets**2) / (2.0 * params.w**2))


def sigma(theta, pulse: PulseFunction):
    """Evaluate the feedback function at phase ``theta`` (scalar or array)."""
    th = _checked(theta)
    if pulse.kind == CONSTANT:
        out = np.broadcast_to(np.float64(pulse.level), th.shape).copy()
    else:
        p = pulse.params
        _, gauss = _comb_terms(th, p)
        out = gauss.sum(axis=-1) / math.sqrt(2.0 * math.pi * p.w**2)
    return float(out) if np.isscalar(theta) or th.ndim == 0 else out


def sigma_prime(theta, pulse: PulseFunction):
    """Analytic derivative of :func:`sigma` with respect to phase."""
    th = _checked(theta)
    if pulse.kind == CONSTANT:
        out = np.zeros(th.shape)
    else:
        p = pulse.params
        offsets, gauss = _comb_terms(th, p)
        out = (-offsets / p.w**2 * gauss).sum(axis=-1) / math.sqrt(2.0 * math.pi * p.w**2)
    return float(out) if np.isscalar(theta) or th.ndim == 0 else out


def value_evaluator(pulse: PulseFunction):
    """Unchecked vectorized evaluator for integrator hot loops.

    Same values as :func:`sigma`; skips input validation and rebuilds no
    intermediate arrays that can be hoisted.
    """
    if pulse.kind == CONSTANT:
        level = pulse.level

        def const_eval(th: np.ndarray) -> np.ndarray:
            return np.full(th.shape, level)

        return const_eval
    p = pulse.params
    xi = p.xi
    centers = np.arange(-p.comb_range, p.comb_range + 1) * xi
    norm = 1.0 / math.sqrt(2.0 * math.pi * p.w**2)
    inv_2w2 = 1.0 / (2.0 * p.w**2)

    def comb_eval(th: np.ndarray) -> np.ndarray:
        r = th - xi * np.floor(th / xi + 0.5)
        d = r[..., None] + centers
        return np.exp(-(d * d) * inv_2w2).sum(axis=-1) * norm

    return comb_eval
