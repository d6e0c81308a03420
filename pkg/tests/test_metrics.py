import numpy as np
import pytest

from antisparse import metrics
from antisparse.dynamic import DynamicConfig, dynamic_solve
from antisparse.metrics import (
    OpCounter,
    counted_dot,
    counted_matvec,
    counted_scale,
    default_tau_grid,
    performance_profile,
)
from antisparse.solvers import fitra_baseline

from helpers import instance_for


class TestCountedOps:
    def test_matvec_charges_product_of_dims(self):
        counter = OpCounter()
        A = np.arange(12.0).reshape(3, 4)
        v = np.ones(4)
        out = counted_matvec(A, v, counter)
        assert np.array_equal(out, A @ v)
        assert counter.mults == 12

    def test_empty_width_charges_nothing(self):
        counter = OpCounter()
        out = counted_matvec(np.empty((3, 0)), np.empty(0), counter)
        assert np.array_equal(out, np.zeros(3))
        assert counter.mults == 0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            counted_matvec(np.eye(3), np.ones(2), OpCounter())
        with pytest.raises(ValueError):
            counted_dot(np.ones(3), np.ones(2), OpCounter())

    def test_dot_and_scale_charges(self):
        counter = OpCounter()
        counted_dot(np.ones(5), np.ones(5), counter)
        counted_scale(2.0, np.ones(7), counter)
        assert counter.mults == 12

    def test_counter_rejects_negative(self):
        with pytest.raises(ValueError):
            OpCounter().add(-1)


class TestPerformanceProfile:
    def test_threshold_counting(self):
        gaps = np.array([[1e-8], [1e-3]])
        assert performance_profile(gaps, [1e-5])[0, 0] == 50.0
        assert performance_profile(gaps, [np.inf])[0, 0] == 100.0
        assert performance_profile(gaps, [1e-12])[0, 0] == 0.0

    def test_nondecreasing_in_tau(self):
        rng = np.random.default_rng(0)
        gaps = 10.0 ** rng.uniform(-16, 0, size=(30, 3))
        taus = np.logspace(-16, 0, 25)
        rho = performance_profile(gaps, taus)
        assert np.all(np.diff(rho, axis=1) >= 0)

    def test_infinite_gaps_never_counted(self):
        gaps = np.array([[np.inf], [1e-9]])
        assert performance_profile(gaps, [1.0])[0, 0] == 50.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            performance_profile(np.empty((0, 2)), [1e-5])

    def test_default_grid(self):
        taus = default_tau_grid()
        assert taus.size == 33
        assert taus[0] == 1.0 and abs(taus[-1] - 1e-16) <= 1e-31
        assert np.all(np.diff(taus) < 0)


class TestCountDeterminism:
    def test_identical_runs_identical_counts(self):
        inst = instance_for(0, m=8, n=12)
        cfg = DynamicConfig(gap_tol=1e-10, trace_every=0)
        c1, c2 = OpCounter(), OpCounter()
        r1 = dynamic_solve(inst, cfg, counter=c1)
        r2 = dynamic_solve(inst, cfg, counter=c2)
        assert c1.mults == c2.mults
        assert np.array_equal(r1.x, r2.x)

    def test_budget_overshoot_at_most_one_iteration(self):
        inst = instance_for(1, m=20, n=40)
        budget = 50_000
        counter = OpCounter()
        dynamic_solve(
            inst,
            DynamicConfig(gap_tol=0.0, max_outer=100_000, trace_every=0),
            counter=counter,
            budget=budget,
        )
        m, n = inst.m, inst.n
        # One outer iteration: test + step + certificate, generously bounded.
        iteration_cost = 6 * m * (n + 1) + 40 * (m + n) + 200
        assert budget <= counter.mults <= budget + iteration_cost


class _Ledger:
    """Shape-derived recount of everything the counted primitives charge."""

    def __init__(self, monkeypatch):
        self.total = 0
        real_mv = metrics.counted_matvec
        real_dot = metrics.counted_dot
        real_scale = metrics.counted_scale
        real_scalars = metrics.count_scalars

        def matvec(A, v, counter=None):
            if counter is not None:
                self.total += A.shape[0] * A.shape[1]
            return real_mv(A, v, counter)

        def dot(a, b, counter=None):
            if counter is not None:
                self.total += a.shape[0]
            return real_dot(a, b, counter)

        def scale(c, v, counter=None):
            if counter is not None:
                self.total += v.shape[0]
            return real_scale(c, v, counter)

        def scalars(counter, k=1):
            if counter is not None:
                self.total += k
            return real_scalars(counter, k)

        monkeypatch.setattr(metrics, "counted_matvec", matvec)
        monkeypatch.setattr(metrics, "counted_dot", dot)
        monkeypatch.setattr(metrics, "counted_scale", scale)
        monkeypatch.setattr(metrics, "count_scalars", scalars)


class TestRecountAudit:
    def test_projected_gradient_run_recounts_exactly(self, monkeypatch):
        ledger = _Ledger(monkeypatch)
        inst = instance_for(2, m=4, n=6)
        counter = OpCounter()
        rep = dynamic_solve(
            inst, DynamicConfig(gap_tol=1e-10, trace_every=0), counter=counter
        )
        assert rep.converged
        assert counter.mults == ledger.total > 0

    def test_fitra_run_recounts_exactly(self, monkeypatch):
        ledger = _Ledger(monkeypatch)
        inst = instance_for(3, m=4, n=6)
        counter = OpCounter()
        sol = fitra_baseline(inst, 50_000, 1e-8, counter=counter, trace_every=0)
        assert sol.converged
        assert counter.mults == ledger.total > 0
