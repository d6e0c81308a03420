"""Safe spheres, the saturation test, and reduced-problem construction.

A *safe sphere* is a ball certified to contain the unique dual optimum.
Any column whose inner product with the center beats the radius (times the
column norm) then provably belongs to the saturated support of the primal
solution, with the sign of that inner product.  Flagged columns are
compacted into the signed-sum vector ``s`` and removed from the
optimization space, leaving an equivalent problem of width
``n - |flagged| + 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .problem import (
    SaturationSets,
    complement_indices,
    duality_gap,
    signed_column_sum,
)


class SqueezeContradictionError(RuntimeError):
    """Same index flagged with both signs: the sphere was not safe."""


@dataclass(frozen=True)
class SafeSphere:
    """Ball ``||u - center|| <= radius`` certified to contain the dual optimum."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius >= 0.0:
            raise ValueError("sphere radius must be nonnegative")


@dataclass
class SqueezedProblem:
    """Data of the reduced problem over the unflagged coordinates.

    ``A_comp`` holds the unflagged columns, ``s`` the signed sum of the
    flagged ones, and ``comp_index_map[j]`` the original column index of
    reduced coordinate ``j``.
    """

    y: np.ndarray
    lam: float
    A_comp: np.ndarray
    s: np.ndarray
    sets: SaturationSets
    comp_index_map: np.ndarray

    @property
    def m(self):
        return self.A_comp.shape[0]

    @property
    def width(self):
        return self.A_comp.shape[1]

    def residual(self, w, xbar):
        z = self.y - self.A_comp @ xbar
        if not self.sets.is_empty:
            z = z - self.s * w
        return z

    def objective(self, w, xbar):
        z = self.residual(w, xbar)
        return 0.5 * float(z @ z) + self.lam * w


def build_squeezed(instance, sets):
    """Assemble the reduced problem for the given saturation sets."""
    comp = complement_indices(instance.n, sets)
    if sets.is_empty:
        A_comp = instance.A
    else:
        A_comp = np.ascontiguousarray(instance.A[:, comp])
    return SqueezedProblem(
        y=instance.y,
        lam=instance.lam,
        A_comp=A_comp,
        s=signed_column_sum(instance.A, sets),
        sets=sets,
        comp_index_map=comp,
    )


def sphere_st1(instance, u):
    """Sphere centered at the observation with radius ``||y - u||``.

    Safe whenever ``u`` is dual feasible.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    return SafeSphere(center=instance.y.copy(), radius=float(np.linalg.norm(instance.y - u)))


def sphere_gap(instance, sets, w, xbar, u):
    """Sphere centered at the dual point with radius ``sqrt(2 gap)``.

    Safe whenever ``(w, xbar)`` is primal feasible and ``u`` dual feasible.
    Tiny negative gaps from roundoff are clamped to zero; a gap below
    ``-1e-9`` signals an infeasibility bug and raises.
    """
    gap = duality_gap(instance, sets, w, xbar, u)
    if gap < -1e-9:
        raise ValueError(f"duality gap {gap:.3e} is negative beyond roundoff")
    return SafeSphere(center=np.asarray(u, dtype=float).copy(), radius=float(np.sqrt(2.0 * max(gap, 0.0))))


def squeezing_test(instance, sphere, candidates=None, counter=None):
    """Flag columns certified saturated by the sphere.

    Column ``i`` lands in the positive (negative) set when
    ``a_i' center > radius * ||a_i||`` (resp. ``< -radius * ||a_i||``);
    the inequalities are strict, so borderline columns stay unflagged.
    Restricting ``candidates`` limits both the work and the output to those
    columns.
    """
    if candidates is None:
        candidates = np.arange(instance.n, dtype=np.intp)
    else:
        candidates = np.asarray(candidates, dtype=np.intp)
    if candidates.size == 0:
        return SaturationSets.empty()
    scores = metrics.counted_matvec(instance.A[:, candidates].T, sphere.center, counter)
    thresholds = metrics.counted_scale(sphere.radius, instance.column_norms[candidates], counter)
    return SaturationSets(
        plus=candidates[scores > thresholds],
        minus=candidates[scores < -thresholds],
    )


def merge_sets(old, new):
    """Componentwise union of two saturation set pairs.

    An index positive in one argument and negative in the other can only
    come from an unsafe sphere (or a solver bug) and raises
    :class:`SqueezeContradictionError`.
    """
    plus = np.union1d(old.plus, new.plus)
    minus = np.union1d(old.minus, new.minus)
    both = np.intersect1d(plus, minus)
    if both.size:
        raise SqueezeContradictionError(
            f"indices flagged saturated with both signs: {both.tolist()}"
        )
    return SaturationSets(plus=plus, minus=minus)


def expand_solution(sq, w, xbar):
    """Rebuild the full-length solution from a reduced point."""
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    n = sq.width + sq.sets.size
    x = np.empty(n)
    x[sq.comp_index_map] = xbar
    x[sq.sets.plus] = w
    x[sq.sets.minus] = -w
    return x


def saturated_sets(x, margin=1e-6):
    """Entries within ``margin`` of the extreme value, split by sign.

    Helper for measuring detection rates against a high-accuracy solution.
    Returns empty sets when ``||x||_inf <= margin`` (no meaningful level).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    level = float(np.abs(x).max()) if x.size else 0.0
    if level <= margin:
        return SaturationSets.empty()
    return SaturationSets(
        plus=np.flatnonzero(x >= level - margin),
        minus=np.flatnonzero(x <= -(level - margin)),
    )
