"""Multiplication counting and performance profiles.

Solver benchmarks in this package report floating-point *multiplications*
(divisions included), not wall-clock time.  The counting convention is:
matrix-vector products, inner products and scalar-vector scalings are
counted; comparisons, additions, sorting, RNG draws and trace-only
objective evaluations are not.  Quantities threaded through solver state
(residuals, gradient products) are charged once when computed and never
again when reused.

All counted work must flow through the ``counted_*`` helpers below so that
audits can intercept them.
"""

from __future__ import annotations

import numpy as np


class OpCounter:
    """Monotone multiplication counter attached to a single solver run."""

    __slots__ = ("mults",)

    def __init__(self):
        self.mults = 0

    def add(self, k):
        if k < 0:
            raise ValueError("operation counts cannot decrease")
        self.mults += int(k)

    def __repr__(self):
        return f"OpCounter(mults={self.mults})"


def counted_matvec(A, v, counter=None):
    """Return ``A @ v`` and charge m*k multiplications to ``counter``."""
    m, k = A.shape
    if v.shape[0] != k:
        raise ValueError(f"matvec dimension mismatch: {A.shape} vs {v.shape}")
    if counter is not None:
        counter.add(m * k)
    return A @ v


def counted_dot(a, b, counter=None):
    """Inner product of two equal-length vectors, counted as len(a) mults."""
    if a.shape != b.shape:
        raise ValueError(f"dot dimension mismatch: {a.shape} vs {b.shape}")
    if counter is not None:
        counter.add(a.shape[0])
    return float(a @ b)


def counted_scale(c, v, counter=None):
    """Scalar-vector product ``c * v``, counted as len(v) mults."""
    if counter is not None:
        counter.add(v.shape[0])
    return c * v


def count_scalars(counter, k=1):
    """Charge ``k`` standalone scalar multiplications (or divisions)."""
    if counter is not None:
        counter.add(k)


def performance_profile(gaps, taus):
    """Fraction of runs (in percent) reaching each gap threshold.

    Parameters
    ----------
    gaps : (runs, solvers) array
        Dual gap achieved by each solver on each run; ``inf`` marks a run
        that produced no certificate.
    taus : (t,) array
        Gap thresholds.

    Returns
    -------
    (solvers, t) array of percentages, nondecreasing along the tau axis
    when taus grow.
    """
    gaps = np.asarray(gaps, dtype=float)
    if gaps.ndim != 2 or gaps.shape[0] == 0:
        raise ValueError("gaps must be a nonempty runs-by-solvers matrix")
    taus = np.asarray(taus, dtype=float)
    runs = gaps.shape[0]
    hit = gaps[:, :, None] <= taus[None, None, :]
    return 100.0 / runs * hit.sum(axis=0)


def default_tau_grid(lo=1e-16, hi=1.0, points=33):
    """Descending logarithmic grid of gap thresholds."""
    return np.logspace(np.log10(hi), np.log10(lo), points)
