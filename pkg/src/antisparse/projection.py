"""Euclidean projection onto the scaled cone ``{alpha |xbar_i| <= wtilde}``.

The projection has no closed form but is computed exactly by a fixed-point
recursion on the level variable: starting from the input level, repeatedly
average the input level with the over-level coordinates,

    wtilde <- alpha^2 / (alpha^2 + |Q|) * (wtilde_in + sum_Q |xbar_i| / alpha),
    Q      <- {i : alpha |xbar_i| >= wtilde},

until ``Q`` stabilizes.  The level sequence is nondecreasing, so ``Q`` only
shrinks and the loop ends after at most ``q`` passes.  Pre-sorting the
magnitudes once makes every pass a binary search plus O(1) arithmetic,
for an overall O(q log q) cost.  A final nonpositive level means the
projection is the origin; otherwise the over-level coordinates are clipped
to ``sign(xbar_i) * wtilde / alpha``.
"""

from __future__ import annotations

import numpy as np

from . import metrics


def project_feasible(xbar, wtilde, alpha, counter=None):
    """Project ``(wtilde, xbar)`` onto ``{(w, x) : alpha |x_i| <= w}``.

    Returns ``(wtilde_proj, xbar_proj, passes)`` where ``passes`` counts
    fixed-point iterations (at most ``len(xbar)`` for nonempty input).
    """
    xbar = np.asarray(xbar, dtype=float).reshape(-1)
    wtilde = float(wtilde)
    if not alpha > 0.0:
        raise ValueError("alpha must be positive")
    q = xbar.shape[0]
    if q == 0:
        return max(wtilde, 0.0), xbar.copy(), 0

    mags = np.abs(xbar)
    scaled = alpha * mags
    metrics.count_scalars(counter, q + 1)  # alpha*|x| and alpha^2
    # Descending magnitudes; any level threshold selects a prefix.
    order_desc = np.sort(scaled)[::-1]
    prefix = np.cumsum(np.sort(mags)[::-1])
    alpha2 = alpha * alpha

    def count_at_least(level):
        # number of scaled magnitudes >= level
        return int(np.searchsorted(-order_desc, -level, side="right"))

    k = count_at_least(wtilde)
    seen = {k}
    passes = 0
    w_cur = wtilde
    while True:
        passes += 1
        total = float(prefix[k - 1]) / alpha if k else 0.0
        w_cur = alpha2 / (alpha2 + k) * (wtilde + total)
        metrics.count_scalars(counter, 3)
        k_new = count_at_least(w_cur)
        if k_new == k:
            break
        if k_new in seen or passes > q + 1:
            # Revisiting a clip set can only happen through floating-point
            # ping-pong across a boundary ulp; either choice is the
            # projection to machine precision, so keep the current level.
            k = k_new
            break
        seen.add(k_new)
        k = k_new

    if w_cur <= 0.0:
        return 0.0, np.zeros(q), passes
    xproj = xbar.copy()
    if k:
        clipped = scaled >= w_cur
        xproj[clipped] = np.sign(xbar[clipped]) * (w_cur / alpha)
        metrics.count_scalars(counter, int(clipped.sum()) + 1)
    return w_cur, xproj, passes
