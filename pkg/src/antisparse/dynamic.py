"""Dynamic and static squeezing: interleaving the saturation test with solvers.

The dynamic driver alternates, every outer iteration: build a safe sphere
from the current primal/dual pair, run the saturation test on the still
unflagged columns, merge the findings (the flagged set only grows), fold
the newly flagged coordinates of the iterate into the level variable, run
a few solver iterations on the reduced problem, and refresh the dual point
by scaling the residual.  With squeezing disabled this degenerates to the
plain reduced solver on the full problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .problem import SaturationSets
from .solvers import (
    FwConfig,
    PgConfig,
    TraceRecord,
    _certificate,
    frank_wolfe_solve,
    frank_wolfe_step,
    projected_gradient_solve,
    projected_gradient_step,
)
from .squeezing import (
    SafeSphere,
    build_squeezed,
    expand_solution,
    merge_sets,
    squeezing_test,
)

SOLVERS = ("pg", "fw")
SPHERES = ("gap", "st1")


@dataclass
class DynamicConfig:
    """Options of a dynamic-squeezing run."""

    solver: str = "pg"
    sphere: str = "gap"
    inner_iters: int = 1
    gap_tol: float = 1e-8
    max_outer: int = 200000
    squeeze_enabled: bool = True
    gap_every: int = 10  # certificate cadence when squeezing is off
    trace_every: int = 1

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.sphere not in SPHERES:
            raise ValueError(f"unknown sphere {self.sphere!r}")
        if self.inner_iters < 1:
            raise ValueError("inner_iters must be at least 1")


@dataclass
class RunReport:
    """Outcome of a squeezing run on one instance."""

    x: np.ndarray
    sets: SaturationSets
    converged: bool
    gap: float
    best_gap: float
    u: np.ndarray
    level: float
    iterations: int
    mults: int
    trace: list = field(default_factory=list)


def static_squeeze(instance, counter=None):
    """One-shot saturation test before any optimization.

    Scales the observation onto the dual feasible set, builds the
    observation-centered sphere from it, and runs the test once.  Returns
    ``(sets, squeezed_problem)``, or ``None`` when the penalty weight is
    at or above the zero-solution threshold (nothing to squeeze).
    """
    At_y = metrics.counted_matvec(instance.A.T, instance.y, counter)
    lam_max = float(np.abs(At_y).sum())
    if instance.lam >= lam_max:
        return None
    u = metrics.counted_scale(instance.lam / lam_max, instance.y, counter)
    metrics.count_scalars(counter, 1)
    r = instance.y - u
    radius = float(np.sqrt(metrics.counted_dot(r, r, counter)))
    sphere = SafeSphere(center=instance.y.copy(), radius=radius)
    sets = squeezing_test(instance, sphere, counter=counter)
    return sets, build_squeezed(instance, sets)


def _fold_flagged(sq, sets, found, w, xbar, z, counter):
    """Commit newly flagged coordinates of the iterate to the level value.

    The flagged entries leave the free vector and their columns move into
    the signed sum, so the represented full iterate snaps those entries to
    ``+/- w``; the residual is updated by the (counted) correction matvec.
    """
    newly = np.concatenate([found.plus, found.minus])
    targets = np.concatenate([np.full(found.plus.size, w), np.full(found.minus.size, -w)])
    pos = np.searchsorted(sq.comp_index_map, newly)
    delta = targets - xbar[pos]
    if np.any(delta != 0.0):
        z = z - metrics.counted_matvec(sq.A_comp[:, pos], delta, counter)
    merged = merge_sets(sets, found)
    xbar = np.delete(xbar, pos)
    return merged, xbar, z


def dynamic_solve(instance, config, start_x=None, counter=None, budget=None):
    """Solve one instance with dynamic squeezing (or plainly, if disabled).

    Returns a :class:`RunReport`; its trace holds one record per outer
    iteration with the certified gap and the flagged count at that point.
    A penalty at or above the zero-solution threshold short-circuits to
    the zero vector.
    """
    own_counter = counter is None
    if own_counter:
        counter = metrics.OpCounter()
    A, y, lam = instance.A, instance.y, instance.lam
    n = instance.n

    At_y = metrics.counted_matvec(A.T, y, counter)
    lam_max = float(np.abs(At_y).sum())
    if lam >= lam_max:
        # The zero vector is optimal and the observation itself is dual
        # feasible, so the pair certifies a zero gap outright.
        return RunReport(
            x=np.zeros(n),
            sets=SaturationSets.empty(),
            converged=True,
            gap=0.0,
            best_gap=0.0,
            u=y.copy(),
            level=0.0,
            iterations=0,
            mults=counter.mults,
            trace=[],
        )

    if not config.squeeze_enabled:
        return _plain_solve(instance, config, start_x, counter, budget)

    sets = SaturationSets.empty()
    sq = build_squeezed(instance, sets)
    if start_x is None:
        w, xbar, z = 0.0, np.zeros(n), y.copy()
        At_z = At_y
    else:
        xbar = np.asarray(start_x, dtype=float).copy()
        w = float(np.abs(xbar).max()) if xbar.size else 0.0
        z = y - metrics.counted_matvec(A, xbar, counter)
        At_z = metrics.counted_matvec(A.T, z, counter)
    half_y2 = 0.5 * metrics.counted_dot(y, y, counter)
    if config.solver == "fw":
        level_bound = 0.5 * metrics.counted_dot(z, z, counter) / lam + w
        metrics.count_scalars(counter, 2)
        alpha = None
    else:
        level_bound = None
        alpha = 1.0  # signed sum is empty at the start

    u, gap = _certificate(sq, w, z, At_z, counter, half_y2)
    best_gap = gap
    trace = []
    if config.trace_every:
        trace.append(TraceRecord(0, 0.5 * float(z @ z) + lam * w, gap, counter.mults, 0))
    converged = gap <= config.gap_tol

    outer = 0
    while not converged and outer < config.max_outer:
        outer += 1
        if config.sphere == "gap":
            sphere = SafeSphere(center=u, radius=float(np.sqrt(2.0 * max(gap, 0.0))))
        else:
            r = y - u
            sphere = SafeSphere(
                center=y, radius=float(np.sqrt(metrics.counted_dot(r, r, counter)))
            )
        found = squeezing_test(instance, sphere, candidates=sq.comp_index_map, counter=counter)
        if found.size:
            sets, xbar, z = _fold_flagged(sq, sets, found, w, xbar, z, counter)
            sq = build_squeezed(instance, sets)
            At_z = None
            if config.solver == "pg":
                alpha = float(np.sqrt(metrics.counted_dot(sq.s, sq.s, counter)))
                if alpha == 0.0:
                    alpha = 1.0

        moved = True
        for _ in range(config.inner_iters):
            if config.solver == "fw":
                w, xbar, z, moved = frank_wolfe_step(
                    sq, w, xbar, level_bound, z=z, At_z=At_z, counter=counter
                )
            else:
                w, xbar, z, moved = projected_gradient_step(
                    sq, w, xbar, alpha, z=z, At_z=At_z, counter=counter
                )
            At_z = None
            if not moved:
                break

        At_z = metrics.counted_matvec(sq.A_comp.T, z, counter)
        u, gap = _certificate(sq, w, z, At_z, counter, half_y2)
        best_gap = min(best_gap, gap)
        if config.trace_every and (
            outer % config.trace_every == 0 or outer == config.max_outer
        ):
            trace.append(
                TraceRecord(outer, 0.5 * float(z @ z) + lam * w, gap, counter.mults, sets.size)
            )
        converged = gap <= config.gap_tol
        if not moved and not found.size:
            # No state change and no new flags: nothing can evolve anymore.
            break
        if budget is not None and counter.mults >= budget:
            break

    return RunReport(
        x=expand_solution(sq, w, xbar),
        sets=sets,
        converged=converged,
        gap=gap,
        best_gap=best_gap,
        u=u,
        level=w,
        iterations=outer,
        mults=counter.mults,
        trace=trace,
    )


def _plain_solve(instance, config, start_x, counter, budget):
    """Squeezing disabled: run the chosen solver on the unreduced problem."""
    sq = build_squeezed(instance, SaturationSets.empty())
    start = None
    if start_x is not None:
        xbar = np.asarray(start_x, dtype=float)
        start = (float(np.abs(xbar).max()) if xbar.size else 0.0, xbar)
    total_iters = config.max_outer * config.inner_iters
    if config.solver == "fw":
        cfg = FwConfig(
            max_iters=total_iters,
            gap_tol=config.gap_tol,
            gap_every=config.gap_every,
            trace_every=config.trace_every,
        )
        sol = frank_wolfe_solve(sq, cfg, start=start, counter=counter, budget=budget)
    else:
        cfg = PgConfig(
            max_iters=total_iters,
            gap_tol=config.gap_tol,
            gap_every=config.gap_every,
            trace_every=config.trace_every,
        )
        sol = projected_gradient_solve(sq, cfg, start=start, counter=counter, budget=budget)
    return RunReport(
        x=expand_solution(sq, sol.w, sol.xbar),
        sets=SaturationSets.empty(),
        converged=sol.converged,
        gap=sol.gap,
        best_gap=sol.best_gap,
        u=sol.u,
        level=sol.w,
        iterations=sol.iterations,
        mults=counter.mults,
        trace=sol.trace,
    )
