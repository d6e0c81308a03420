"""Solvers for the reduced problem plus an accelerated proximal baseline.

Two dedicated methods handle the reduced problem

    min 0.5 ||y - A_comp xbar - s w||^2 + lam w   s.t.  |xbar_i| <= w

* a Frank-Wolfe scheme on the level-bounded reformulation (``w`` capped by
  a provable upper bound on the optimal level), with exact line search on
  every segment, and
* a projected gradient method on a rescaled parameterization
  ``wtilde = alpha w`` with exact step and segment searches and an exact
  finite-step projection onto the feasible cone.

The baseline for benchmarks is a standard accelerated proximal gradient
on the unreduced problem; its prox is the infinity-norm prox obtained by
clipping at the water level of an l1-ball projection.

Both reduced solvers keep the residual (and the most recent gradient
product) threaded through their state so nothing is recomputed, and all
counted work flows through :mod:`antisparse.metrics`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .projection import project_feasible

_TINY = 1e-30


@dataclass
class FwConfig:
    """Frank-Wolfe options; ``level_bound`` defaults to the start-point bound."""

    level_bound: float | None = None
    max_iters: int = 200000
    gap_tol: float = 1e-8
    gap_every: int = 10
    trace_every: int = 1


@dataclass
class PgConfig:
    """Projected-gradient options; ``alpha`` defaults to the rule of thumb."""

    alpha: float | None = None
    max_iters: int = 200000
    gap_tol: float = 1e-8
    gap_every: int = 10
    trace_every: int = 1


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    gap: float | None
    mults: int
    flagged: int


@dataclass
class ReducedSolution:
    """Final state of a reduced-problem solve, with dual certificate."""

    w: float
    xbar: np.ndarray
    z: np.ndarray
    u: np.ndarray
    gap: float
    best_gap: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


@dataclass
class FullSolution:
    """Final state of a full-problem solve (baseline), with certificate."""

    x: np.ndarray
    u: np.ndarray
    gap: float
    best_gap: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)
    lipschitz: float = 0.0


def rescaling_factor(s):
    """Rescale weight for the level variable: ``||s||`` if nonzero, else 1."""
    nrm = float(np.linalg.norm(s))
    return nrm if nrm > 0.0 else 1.0


def saturation_level_bound(sq, w, xbar):
    """Upper bound on the optimal level from any feasible point.

    The optimal level never exceeds objective/lam, so
    ``||residual||^2 / (2 lam) + w`` is valid; at the zero point this is
    ``||y||^2 / (2 lam)``.
    """
    z = sq.residual(w, xbar)
    return float(z @ z) / (2.0 * sq.lam) + w


def _initial_residual(sq, w, xbar, counter):
    if w == 0.0 and not xbar.any():
        return sq.y.copy()
    z = sq.y - metrics.counted_matvec(sq.A_comp, xbar, counter)
    if sq.sets.size and w != 0.0:
        z = z - metrics.counted_scale(w, sq.s, counter)
    return z


def _certificate(sq, w, z, At_z, counter, half_y2):
    """Dual-scaled point and duality gap at the current residual.

    ``At_z`` must hold the already-counted product ``A_comp' z``.
    """
    level = float(np.abs(At_z).sum())
    if sq.sets.size:
        level += metrics.counted_dot(sq.s, z, counter)
    if level <= 0.0:
        u = z.copy()
    else:
        u = metrics.counted_scale(sq.lam / level, z, counter)
        metrics.count_scalars(counter, 1)
    r = sq.y - u
    gap = (
        0.5 * metrics.counted_dot(z, z, counter)
        + sq.lam * w
        - half_y2
        + 0.5 * metrics.counted_dot(r, r, counter)
    )
    metrics.count_scalars(counter, 1)
    return u, gap


def frank_wolfe_step(sq, w, xbar, level_bound, z=None, At_z=None, counter=None):
    """One Frank-Wolfe iteration on the level-bounded reduced problem.

    The linearized objective over ``{|xbar_i| <= w <= level_bound}`` is
    minimized at ``(level_bound, level_bound * sign(A_comp' z))`` while the
    residual's dual-constraint value stays at or above lam, and at the cone
    apex ``(0, 0)`` below that (without the apex branch the capped vertex
    turns into an ascent direction and the search jams).  The update is the
    exact quadratic minimizer on the segment joining the vertex to the
    current point.  Returns ``(w, xbar, z, moved)``; ``moved`` is False
    when the search leaves the state unchanged.
    """
    if z is None:
        z = _initial_residual(sq, w, xbar, counter)
    if At_z is None:
        At_z = metrics.counted_matvec(sq.A_comp.T, z, counter)
    level = float(np.abs(At_z).sum())
    if sq.sets.size:
        level += metrics.counted_dot(sq.s, z, counter)
    if level >= sq.lam:
        vert_x = metrics.counted_scale(level_bound, np.sign(At_z), counter)
        vert_w = level_bound
    else:
        vert_x = np.zeros(sq.width)
        vert_w = 0.0
    d_x = xbar - vert_x
    d_w = w - vert_w
    g = metrics.counted_matvec(sq.A_comp, d_x, counter)
    if sq.sets.size and d_w != 0.0:
        g = g + metrics.counted_scale(d_w, sq.s, counter)
    z_vert = z + g
    num = metrics.counted_dot(z_vert, g, counter) - sq.lam * d_w
    den = metrics.counted_dot(g, g, counter)
    metrics.count_scalars(counter, 2)
    if den <= _TINY:
        return w, xbar, z, False
    gamma = num / den
    metrics.count_scalars(counter, 1)
    if gamma >= 1.0:
        return w, xbar, z, False
    gamma = max(gamma, 0.0)
    w_new = vert_w + gamma * d_w
    x_new = vert_x + metrics.counted_scale(gamma, d_x, counter)
    z_new = z_vert - metrics.counted_scale(gamma, g, counter)
    metrics.count_scalars(counter, 1)
    return w_new, x_new, z_new, True


def projected_gradient_step(sq, w, xbar, alpha, z=None, At_z=None, counter=None):
    """One projected-gradient iteration on the rescaled reduced problem.

    Gradient step with the exact minimizing step length along the negative
    gradient, exact projection onto the rescaled cone, then exact segment
    search between the old point and the projection.  State is kept in the
    unscaled level ``w``; returns ``(w, xbar, z, moved)``.
    """
    if z is None:
        z = _initial_residual(sq, w, xbar, counter)
    if At_z is None:
        At_z = metrics.counted_matvec(sq.A_comp.T, z, counter)
    wt = alpha * w
    metrics.count_scalars(counter, 1)
    d_x = At_z
    d_w = (metrics.counted_dot(sq.s, z, counter) - sq.lam) / alpha
    metrics.count_scalars(counter, 1)
    norm2_d = metrics.counted_dot(d_x, d_x, counter) + d_w * d_w
    metrics.count_scalars(counter, 1)
    if norm2_d <= _TINY:
        return w, xbar, z, False
    h = metrics.counted_matvec(sq.A_comp, d_x, counter)
    if sq.sets.size and d_w != 0.0:
        h = h + metrics.counted_scale(d_w / alpha, sq.s, counter)
        metrics.count_scalars(counter, 1)
    den = metrics.counted_dot(h, h, counter)
    eta = 0.0 if den <= _TINY else norm2_d / den
    metrics.count_scalars(counter, 1)
    x_grad = xbar + metrics.counted_scale(eta, d_x, counter)
    wt_grad = wt + eta * d_w
    metrics.count_scalars(counter, 1)

    wt_proj, x_proj, _ = project_feasible(x_grad, wt_grad, alpha, counter)
    if wt_proj == wt and np.array_equal(x_proj, xbar):
        # The projected gradient point fell back onto the current state,
        # which certifies stationarity.
        return w, xbar, z, False

    d2_x = xbar - x_proj
    d2_w = wt - wt_proj
    g2 = metrics.counted_matvec(sq.A_comp, d2_x, counter)
    if sq.sets.size and d2_w != 0.0:
        g2 = g2 + metrics.counted_scale(d2_w / alpha, sq.s, counter)
        metrics.count_scalars(counter, 1)
    z_proj = z + g2
    num = metrics.counted_dot(z_proj, g2, counter) - (sq.lam / alpha) * d2_w
    den2 = metrics.counted_dot(g2, g2, counter)
    metrics.count_scalars(counter, 3)
    if den2 <= _TINY:
        # Quadratic part flat along the segment; pick the cheaper endpoint.
        if num <= 0.0:
            gamma = 0.0
        else:
            return w, xbar, z, False
    else:
        gamma = min(1.0, max(0.0, num / den2))
        metrics.count_scalars(counter, 1)
    wt_new = wt_proj + gamma * d2_w
    x_new = x_proj + metrics.counted_scale(gamma, d2_x, counter)
    z_new = z_proj - metrics.counted_scale(gamma, g2, counter)
    w_new = wt_new / alpha
    metrics.count_scalars(counter, 3)
    return w_new, x_new, z_new, True


def _start_state(sq, start, counter):
    if start is None:
        w, xbar = 0.0, np.zeros(sq.width)
    else:
        w, xbar = float(start[0]), np.asarray(start[1], dtype=float).copy()
    return w, xbar, _initial_residual(sq, w, xbar, counter)


def _solve_reduced(sq, step, config, state, counter, budget):
    """Shared driver: step loop with certificate cadence, budget and traces."""
    w, xbar, z = state
    half_y2 = 0.5 * metrics.counted_dot(sq.y, sq.y, counter)
    At_z = metrics.counted_matvec(sq.A_comp.T, z, counter)
    u, gap = _certificate(sq, w, z, At_z, counter, half_y2)
    best_gap = gap
    trace = []
    flagged = sq.sets.size
    mults = counter.mults if counter is not None else 0
    if config.trace_every:
        trace.append(TraceRecord(0, 0.5 * float(z @ z) + sq.lam * w, gap, mults, flagged))
    if gap <= config.gap_tol:
        return ReducedSolution(w, xbar, z, u, gap, best_gap, 0, True, trace)

    converged = False
    it = 0
    while it < config.max_iters:
        it += 1
        w, xbar, z, moved = step(w, xbar, z, At_z)
        At_z = None
        over_budget = budget is not None and counter is not None and counter.mults >= budget
        due = (
            (config.gap_every and it % config.gap_every == 0)
            or it == config.max_iters
            or not moved
            or over_budget
        )
        if due:
            At_z = metrics.counted_matvec(sq.A_comp.T, z, counter)
            u, gap = _certificate(sq, w, z, At_z, counter, half_y2)
            best_gap = min(best_gap, gap)
            if config.trace_every:
                mults = counter.mults if counter is not None else 0
                trace.append(
                    TraceRecord(it, 0.5 * float(z @ z) + sq.lam * w, gap, mults, flagged)
                )
            if gap <= config.gap_tol:
                converged = True
                break
            if not moved or over_budget:
                break
        elif config.trace_every and it % config.trace_every == 0:
            mults = counter.mults if counter is not None else 0
            trace.append(
                TraceRecord(it, 0.5 * float(z @ z) + sq.lam * w, None, mults, flagged)
            )
    return ReducedSolution(w, xbar, z, u, gap, best_gap, it, converged, trace)


def frank_wolfe_solve(sq, config, start=None, counter=None, budget=None):
    """Run Frank-Wolfe on the reduced problem until the gap tolerance."""
    state = _start_state(sq, start, counter)
    level_bound = config.level_bound
    if level_bound is None:
        w0, _, z0 = state
        level_bound = 0.5 * metrics.counted_dot(z0, z0, counter) / sq.lam + w0
        metrics.count_scalars(counter, 2)

    def step(w, xbar, z, At_z):
        return frank_wolfe_step(sq, w, xbar, level_bound, z=z, At_z=At_z, counter=counter)

    return _solve_reduced(sq, step, config, state, counter, budget)


def projected_gradient_solve(sq, config, start=None, counter=None, budget=None):
    """Run the rescaled projected gradient on the reduced problem."""
    state = _start_state(sq, start, counter)
    alpha = config.alpha
    if alpha is None:
        if sq.sets.size:
            alpha = float(np.sqrt(metrics.counted_dot(sq.s, sq.s, counter)))
            if alpha == 0.0:
                alpha = 1.0
        else:
            alpha = 1.0

    def step(w, xbar, z, At_z):
        return projected_gradient_step(sq, w, xbar, alpha, z=z, At_z=At_z, counter=counter)

    return _solve_reduced(sq, step, config, state, counter, budget)


def operator_norm_sq(A, counter=None, iters=100, tol=1e-10):
    """Largest eigenvalue of ``A' A`` by power iteration on a fixed start."""
    n = A.shape[1]
    v = np.full(n, 1.0 / np.sqrt(n))
    est = 0.0
    for _ in range(iters):
        Av = metrics.counted_matvec(A, v, counter)
        est_new = metrics.counted_dot(Av, Av, counter)
        back = metrics.counted_matvec(A.T, Av, counter)
        nrm2 = metrics.counted_dot(back, back, counter)
        if nrm2 <= 0.0:
            return 0.0
        v = metrics.counted_scale(1.0 / np.sqrt(nrm2), back, counter)
        metrics.count_scalars(counter, 1)
        if abs(est_new - est) <= tol * max(est_new, _TINY):
            return est_new
        est = est_new
    return est


def prox_inf_norm(v, weight, counter=None):
    """Prox of ``weight * ||.||_inf``: clip at the l1-ball water level.

    The prox equals ``v`` minus the projection of ``v`` onto the l1 ball of
    radius ``weight``, which reduces to clipping every entry at the sorted
    water level of that projection.
    """
    if weight < 0.0:
        raise ValueError("prox weight must be nonnegative")
    mags = np.abs(v)
    if mags.sum() <= weight:
        return np.zeros_like(v)
    mu = np.sort(mags)[::-1]
    cum = np.cumsum(mu)
    levels = (cum - weight) / np.arange(1, v.size + 1)
    rho = np.flatnonzero(mu > levels)[-1]
    metrics.count_scalars(counter, v.size + 1)
    return np.clip(v, -levels[rho], levels[rho])


def fitra_baseline(instance, max_iters, gap_tol, start=None, counter=None, budget=None,
                   lipschitz=None, gap_every=10, trace_every=1):
    """Accelerated proximal gradient on the unreduced problem.

    Constant step 1/L with L slightly above the largest eigenvalue of
    ``A'A`` (power iteration), infinity-norm prox, standard momentum.
    Stops at the gap tolerance, or immediately on an exact fixed point of
    the prox-gradient map (which certifies optimality, e.g. when the
    penalty is above the zero-solution threshold).
    """
    A, y, lam = instance.A, instance.y, instance.lam
    n = instance.n
    if lipschitz is None:
        lipschitz = 1.01 * operator_norm_sq(A, counter)
        metrics.count_scalars(counter, 1)
    inv_L = 1.0 / lipschitz
    weight = lam * inv_L
    metrics.count_scalars(counter, 2)

    x = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    v = x.copy()
    half_y2 = 0.5 * metrics.counted_dot(y, y, counter)
    z_mom = y.copy() if not v.any() else y - metrics.counted_matvec(A, v, counter)
    tk = 1.0
    trace = []
    converged = False
    u, gap, best_gap = None, np.inf, np.inf

    def certify(xc):
        z_x = y - metrics.counted_matvec(A, xc, counter)
        At_zx = metrics.counted_matvec(A.T, z_x, counter)
        level = float(np.abs(At_zx).sum())
        if level <= 0.0:
            uc = z_x
        else:
            uc = metrics.counted_scale(lam / level, z_x, counter)
            metrics.count_scalars(counter, 1)
        r = y - uc
        linf = float(np.abs(xc).max()) if xc.size else 0.0
        gc = (
            0.5 * metrics.counted_dot(z_x, z_x, counter)
            + lam * linf
            - half_y2
            + 0.5 * metrics.counted_dot(r, r, counter)
        )
        metrics.count_scalars(counter, 1)
        return uc, gc

    it = 0
    while it < max_iters:
        it += 1
        grad = metrics.counted_matvec(A.T, z_mom, counter)
        x_new = prox_inf_norm(v + metrics.counted_scale(inv_L, grad, counter), weight, counter)
        stationary = np.array_equal(x_new, x) and np.array_equal(x_new, v)
        tk_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        beta = (tk - 1.0) / tk_next
        metrics.count_scalars(counter, 3)
        v = x_new + metrics.counted_scale(beta, x_new - x, counter)
        x, tk = x_new, tk_next
        z_mom = y - metrics.counted_matvec(A, v, counter)
        over_budget = budget is not None and counter is not None and counter.mults >= budget
        due = (gap_every and it % gap_every == 0) or it == max_iters or stationary or over_budget
        if due:
            u, gap = certify(x)
            best_gap = min(best_gap, gap)
            if trace_every:
                mults = counter.mults if counter is not None else 0
                obj = 0.5 * float((y - A @ x) @ (y - A @ x)) + lam * float(np.abs(x).max())
                trace.append(TraceRecord(it, obj, gap, mults, 0))
            if gap <= gap_tol:
                converged = True
                break
            if stationary:
                converged = True  # exact prox-gradient fixed point
                break
            if over_budget:
                break
        elif trace_every and it % trace_every == 0:
            mults = counter.mults if counter is not None else 0
            obj = 0.5 * float((y - A @ x) @ (y - A @ x)) + lam * float(np.abs(x).max())
            trace.append(TraceRecord(it, obj, None, mults, 0))
    if u is None:
        u, gap = certify(x)
        best_gap = min(best_gap, gap)
        converged = gap <= gap_tol
    return FullSolution(x, u, gap, best_gap, it, converged, trace, lipschitz)
