"""Shared test utilities: instance builders and independent oracles."""

import itertools

import numpy as np

from antisparse.dictionaries import derive_seed
from antisparse.experiments import make_instance, reference_solve
from antisparse.problem import SaturationSets, dual_scaling


def instance_for(seed, m=10, n=15, variant="gaussian", ratio=0.5):
    return make_instance(variant, m, n, ratio, derive_seed(seed, 0), derive_seed(seed, 1))


def reference(instance, gap_tol=1e-14):
    report = reference_solve(instance, gap_tol)
    assert report.converged, "reference solve failed to reach the target gap"
    return report


def random_feasible_point(rng, q, scale=1.0):
    """Random (w, xbar) with |xbar_i| <= w."""
    w = scale * float(rng.exponential()) + 1e-3
    return w, w * rng.uniform(-1.0, 1.0, size=q)


def random_dual_point(rng, instance, sets=None):
    """Dual-feasible point obtained by scaling a random vector."""
    if sets is None:
        sets = SaturationSets.empty()
    return dual_scaling(instance, sets, rng.standard_normal(instance.m))


def random_sets(rng, n, max_size=4):
    """Random disjoint saturation sets over n coordinates."""
    size = int(rng.integers(0, max_size + 1))
    chosen = rng.choice(n, size=size, replace=False)
    signs = rng.integers(0, 2, size=size).astype(bool)
    return SaturationSets(plus=chosen[signs], minus=chosen[~signs])


def projection_oracle(xbar, wtilde, alpha):
    """Projection onto ``{alpha |x_i| <= w}`` by exhaustive active-set search.

    Enumerates every clipped subset and sign pattern, solves the resulting
    one-dimensional quadratic for the level in closed form, keeps the
    feasible candidates, and returns the closest one.  Exponential in the
    input length; intended as an oracle for small sizes only.
    """
    xbar = np.asarray(xbar, dtype=float)
    q = xbar.size
    best_w, best_x = 0.0, np.zeros(q)
    best_d = wtilde**2 + float(xbar @ xbar)
    for subset in itertools.chain.from_iterable(
        itertools.combinations(range(q), k) for k in range(q + 1)
    ):
        subset = list(subset)
        for signs in itertools.product((-1.0, 1.0), repeat=len(subset)):
            signs = np.asarray(signs)
            corr = float(np.sum(signs * xbar[subset])) / alpha if subset else 0.0
            w = (wtilde + corr) / (1.0 + len(subset) / alpha**2)
            if w < -1e-12:
                continue
            w = max(w, 0.0)
            x = xbar.copy()
            x[subset] = signs * w / alpha
            if np.any(alpha * np.abs(x) > w + 1e-10):
                continue
            d = (w - wtilde) ** 2 + float((x - xbar) @ (x - xbar))
            if d < best_d - 1e-15:
                best_d, best_w, best_x = d, w, x
    return best_w, best_x
