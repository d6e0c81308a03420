"""Problem data and primal/dual machinery for infinity-norm penalized least squares.

The package solves

    min_x  0.5 * ||y - A x||_2^2 + lam * ||x||_inf

for a dense dictionary ``A`` with unit-norm columns.  When some entries of
the solution are known to saturate (attain ``||x||_inf`` with a known sign),
the problem collapses onto the unflagged coordinates plus a shared level
variable ``w``: the saturated columns enter only through their signed sum
``s``, and the objective becomes

    0.5 * ||y - A_comp xbar - s w||_2^2 + lam * w,   |xbar_i| <= w.

This module holds the instance container, the saturation index sets, the
reduced primal objective, the dual objective ``0.5||y||^2 - 0.5||y - u||^2``
over the feasible set ``||A_comp' u||_1 + s' u <= lam``, the duality gap, and
the scaling that maps an arbitrary vector onto that feasible set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Absolute tolerance for accepting a point as dual/primal feasible.
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class SaturationSets:
    """Disjoint index sets of entries proven saturated positive / negative."""

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        plus = np.unique(np.asarray(self.plus, dtype=np.intp))
        minus = np.unique(np.asarray(self.minus, dtype=np.intp))
        both = np.intersect1d(plus, minus)
        if both.size:
            raise ValueError(f"indices flagged with both signs: {both.tolist()}")
        object.__setattr__(self, "plus", plus)
        object.__setattr__(self, "minus", minus)

    @staticmethod
    def empty():
        return SaturationSets(np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp))

    @property
    def size(self):
        return self.plus.size + self.minus.size

    @property
    def is_empty(self):
        return self.size == 0

    def all_indices(self):
        return np.union1d(self.plus, self.minus)


class ProblemInstance:
    """Dictionary, observation and penalty weight.

    Columns of ``A`` are rescaled to unit Euclidean norm at construction
    (the original norms are kept in ``column_scales``); pass
    ``normalize=False`` to keep a caller-supplied scaling.
    """

    def __init__(self, A, y, lam, normalize=True):
        A = np.array(A, dtype=float, order="C")
        y = np.asarray(y, dtype=float).reshape(-1)
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        m, n = A.shape
        if m < 1 or n < 1:
            raise ValueError("A must have at least one row and one column")
        if y.shape[0] != m:
            raise ValueError(f"dimension mismatch: A is {m}x{n}, y has length {y.shape[0]}")
        if not lam > 0:
            raise ValueError("lam must be positive")
        scales = np.linalg.norm(A, axis=0)
        if np.any(scales == 0.0):
            raise ValueError("A contains a zero column")
        if normalize:
            A = A / scales
        self.A = A
        self.y = y
        self.lam = float(lam)
        self.column_scales = scales
        self.column_norms = np.linalg.norm(A, axis=0)

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def lambda_max(A, y):
    """Penalty threshold ``||A' y||_1`` above which the solution is zero."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.ndim != 2 or y.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, y has length {y.shape[0]}")
    return float(np.abs(A.T @ y).sum())


def complement_indices(n, sets):
    """Sorted indices of the columns not flagged in ``sets``."""
    if sets.is_empty:
        return np.arange(n, dtype=np.intp)
    return np.setdiff1d(np.arange(n, dtype=np.intp), sets.all_indices())


def signed_column_sum(A, sets):
    """Signed sum of the flagged columns: sum over plus minus sum over minus."""
    s = np.zeros(A.shape[0])
    if sets.plus.size:
        s += A[:, sets.plus].sum(axis=1)
    if sets.minus.size:
        s -= A[:, sets.minus].sum(axis=1)
    return s


def primal_objective(instance, sets, w, xbar):
    """Reduced primal objective ``0.5||y - A_comp xbar - s w||^2 + lam w``.

    With empty ``sets`` and ``w = ||xbar||_inf`` this equals the full
    objective evaluated at ``xbar``.
    """
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    comp = complement_indices(instance.n, sets)
    if xbar.shape[0] != comp.shape[0]:
        raise ValueError(
            f"dimension mismatch: xbar has length {xbar.shape[0]}, expected {comp.shape[0]}"
        )
    z = instance.y - instance.A[:, comp] @ xbar
    if not sets.is_empty:
        z = z - signed_column_sum(instance.A, sets) * w
    return 0.5 * float(z @ z) + instance.lam * w


def dual_objective(instance, u):
    """Dual objective ``0.5||y||^2 - 0.5||y - u||^2`` (defined for any u)."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != instance.m:
        raise ValueError(f"dimension mismatch: u has length {u.shape[0]}, expected {instance.m}")
    r = instance.y - u
    return 0.5 * float(instance.y @ instance.y) - 0.5 * float(r @ r)


def dual_constraint_value(instance, sets, u):
    """Left-hand side ``||A_comp' u||_1 + s' u`` of the dual constraint."""
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != instance.m:
        raise ValueError(f"dimension mismatch: u has length {u.shape[0]}, expected {instance.m}")
    comp = complement_indices(instance.n, sets)
    value = float(np.abs(instance.A[:, comp].T @ u).sum())
    if not sets.is_empty:
        value += float(signed_column_sum(instance.A, sets) @ u)
    return value


def is_dual_feasible(instance, sets, u, tol=FEAS_TOL):
    return dual_constraint_value(instance, sets, u) <= instance.lam + tol


def is_primal_feasible(w, xbar, tol=FEAS_TOL):
    xbar = np.asarray(xbar, dtype=float)
    if xbar.size == 0:
        return w >= -tol
    return bool(np.all(np.abs(xbar) <= w + tol))


def dual_scaling(instance, sets, z):
    """Map ``z`` onto the dual feasible set.

    Returns ``z`` itself when ``||A_comp' z||_1 + s' z <= 0`` and the
    boundary rescaling ``(lam / L) z`` otherwise.  The output is always
    dual feasible.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    level = dual_constraint_value(instance, sets, z)
    if level <= 0.0:
        return z.copy()
    return (instance.lam / level) * z


def duality_gap(instance, sets, w, xbar, u, validate=True):
    """Primal objective minus dual objective at a feasible pair.

    Nonnegative (up to roundoff) by weak duality and zero exactly at the
    optimal pair.  With ``validate`` the feasibility of both points is
    enforced and a ``ValueError`` is raised otherwise.
    """
    if validate:
        if not is_primal_feasible(w, xbar):
            raise ValueError("primal point is infeasible: some |xbar_i| exceeds w")
        excess = dual_constraint_value(instance, sets, u) - instance.lam
        if excess > FEAS_TOL:
            raise ValueError(f"dual point is infeasible by {excess:.3e}")
    return primal_objective(instance, sets, w, xbar) - dual_objective(instance, u)
