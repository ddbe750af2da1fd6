"""Coupling matrices with constant row sum and their spectral decomposition.

The synchronized state exists only when every row of the coupling matrix
sums to the same value.  That common row sum is the Perron eigenvalue; the
all-ones vector is its right eigenvector.  The remaining modes decide
stability through the sign of Re[lambda * (rowsum - lambda)].
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

ROW_SUM_RTOL = 1e-10
COND_MAX = 1e12
MARGINAL_TOL = 1e-12

SYNCHRONIZING = "synchronizing"
MARGINAL = "marginal"
NON_SYNCHRONIZING = "non_synchronizing"


class RowSumMismatch(ValueError):
    """Rows of the coupling matrix do not share a common sum."""

    def __init__(self, row: int, deviation: float, expected: float):
        self.row = row
        self.deviation = deviation
        self.expected = expected
        super().__init__(
            f"row {row} deviates from common row sum {expected} by {deviation:.3e}"
        )


class DefectiveMatrix(ValueError):
    """Eigenvector matrix is numerically singular (no clean eigenbasis)."""


@dataclass(frozen=True)
class CouplingMatrix:
    n: int
    weights: np.ndarray  # (n, n) float
    row_sum: float

    def __post_init__(self):
        self.weights.setflags(write=False)


def validate_row_sum(weights, rtol: float = ROW_SUM_RTOL) -> float:
    """Return the common row sum, or raise RowSumMismatch naming the worst row."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"coupling matrix must be square, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise ValueError("coupling matrix entries must be finite")
    sums = w.sum(axis=1)
    jtilde = float(np.mean(sums))
    dev = np.abs(sums - jtilde)
    worst = int(np.argmax(dev))
    tol = rtol * max(1.0, abs(jtilde))
    if dev[worst] > tol:
        raise RowSumMismatch(worst, float(dev[worst]), jtilde)
    return jtilde


def coupling_matrix(weights, rtol: float = ROW_SUM_RTOL) -> CouplingMatrix:
    """Wrap and validate an arbitrary square weight matrix."""
    w = np.array(weights, dtype=float)
    jtilde = validate_row_sum(w, rtol=rtol)
    return CouplingMatrix(n=w.shape[0], weights=w, row_sum=jtilde)


def make_all_to_all(n: int, a: float) -> CouplingMatrix:
    """Mean-field coupling: every off-diagonal entry equals ``a``."""
    if n < 2:
        raise ValueError(f"all-to-all coupling needs n >= 2, got {n}")
    w = np.full((n, n), float(a))
    np.fill_diagonal(w, 0.0)
    return CouplingMatrix(n=n, weights=w, row_sum=float((n - 1) * a))


def make_ring_laplacian(n: int, a: float) -> CouplingMatrix:
    """Ring lattice Laplacian: ``a`` to both neighbors, ``-2a`` on the diagonal."""
    if n < 3:
        raise ValueError(f"ring Laplacian needs n >= 3, got {n}")
    w = np.zeros((n, n))
    for i in range(n):
        w[i, (i - 1) % n] = a
        w[i, (i + 1) % n] = a
        w[i, i] = -2.0 * a
    return CouplingMatrix(n=n, weights=w, row_sum=0.0)


def coupling_from_csv(path) -> CouplingMatrix:
    """Load a coupling matrix from CSV: n rows of n comma-separated decimals."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([float(tok) for tok in line.split(",")])
    w = np.array(rows, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"CSV matrix must be square, got shape {w.shape}")
    return coupling_matrix(w)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Full eigensystem with biorthonormal left/right vectors.

    ``right[:, i]`` is the i-th right eigenvector, ``left[i, :]`` the i-th
    left eigenvector, normalized so that left @ right = identity.  The
    Perron pair (eigenvalue equal to the row sum, all-ones right vector)
    is at ``perron_index``.
    """

    eigenvalues: np.ndarray   # (n,) complex
    right: np.ndarray         # (n, n) complex, columns
    left: np.ndarray          # (n, n) complex, rows
    perron_index: int
    jtilde: float

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    @property
    def left_perron(self) -> np.ndarray:
        return self.left[self.perron_index]

    def project(self, vec) -> np.ndarray:
        """Components of ``vec`` along every mode (left-eigenvector products)."""
        return self.left @ np.asarray(vec)


def spectral_decompose(coupling: CouplingMatrix, cond_max: float = COND_MAX) -> SpectralDecomposition:
    j = coupling.weights
    vals, right = np.linalg.eig(j.astype(complex))

    # Perron pair: eigenvalue closest to the row sum, ties to largest real part
    dist = np.abs(vals - coupling.row_sum)
    close = np.flatnonzero(dist <= dist.min() + 1e-12 * max(1.0, abs(coupling.row_sum)))
    perron = int(close[np.argmax(vals[close].real)])

    # the row-sum constraint makes the all-ones vector an exact eigenvector;
    # pin it so downstream projections are reproducible
    right = right.copy()
    right[:, perron] = 1.0

    # fix the overall scale/phase of each remaining eigenvector
    for i in range(right.shape[1]):
        if i == perron:
            continue
        col = right[:, i]
        pivot = col[np.argmax(np.abs(col))]
        right[:, i] = col / pivot * np.abs(pivot)

    condition = np.linalg.cond(right)
    if not np.isfinite(condition) or condition > cond_max:
        raise DefectiveMatrix(
            f"eigenvector matrix condition number {condition:.3e} exceeds {cond_max:.1e}"
        )
    left = np.linalg.inv(right)  # rows biorthonormal to the columns of right
    return SpectralDecomposition(
        eigenvalues=vals,
        right=right,
        left=left,
        perron_index=perron,
        jtilde=coupling.row_sum,
    )


@dataclass(frozen=True)
class ModeStability:
    index: int
    eigenvalue: complex
    rate_sign: float  # Re[lambda * (jtilde - lambda)]
    verdict: str      # synchronizing | marginal | non_synchronizing | perron
    is_perron: bool


def stability_rate(lam: complex, jtilde: float) -> float:
    """Re[lambda*(jtilde - lambda)]; negative means the mode decays."""
    return float((lam * (jtilde - lam)).real)


def classify_stability(spec: SpectralDecomposition, marginal_tol: float = MARGINAL_TOL):
    """Per-mode stability verdicts from the decay-rate sign."""
    report = []
    for i, lam in enumerate(spec.eigenvalues):
        rate = stability_rate(complex(lam), spec.jtilde)
        if i == spec.perron_index:
            verdict = "perron"
        elif abs(rate) <= marginal_tol:
            verdict = MARGINAL
        elif rate < 0.0:
            verdict = SYNCHRONIZING
        else:
            verdict = NON_SYNCHRONIZING
        report.append(
            ModeStability(
                index=i,
                eigenvalue=complex(lam),
                rate_sign=rate,
                verdict=verdict,
                is_perron=(i == spec.perron_index),
            )
        )
    return report
