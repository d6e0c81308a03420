import numpy as np
import pytest

from antisparse.dynamic import DynamicConfig, dynamic_solve, static_squeeze
from antisparse.metrics import OpCounter
from antisparse.problem import (
    ProblemInstance,
    SaturationSets,
    complement_indices,
    duality_gap,
    lambda_max,
)
from antisparse.solvers import projected_gradient_step
from antisparse.squeezing import build_squeezed, saturated_sets

from helpers import instance_for, reference


class TestStaticSqueeze:
    def test_above_threshold_returns_none(self):
        inst = instance_for(0, m=6, n=9)
        above = ProblemInstance(inst.A, inst.y, 2.0 * lambda_max(inst.A, inst.y), normalize=False)
        assert static_squeeze(above) is None

    def test_flags_are_safe_near_threshold(self):
        for seed in range(3):
            inst = instance_for(20 + seed, m=10, n=15, ratio=0.95)
            result = static_squeeze(inst)
            assert result is not None
            sets, sq = result
            assert sets.size > 0
            assert sq.width == inst.n - sets.size
            truth = saturated_sets(reference(inst).x, margin=1e-6)
            assert np.all(np.isin(sets.plus, truth.plus))
            assert np.all(np.isin(sets.minus, truth.minus))

    def test_flags_subset_at_moderate_ratio(self):
        inst = instance_for(30, m=10, n=15, ratio=0.5)
        result = static_squeeze(inst)
        assert result is not None
        sets, _ = result
        truth = saturated_sets(reference(inst).x, margin=1e-6)
        assert np.all(np.isin(sets.plus, truth.plus))
        assert np.all(np.isin(sets.minus, truth.minus))


class TestDynamicSolve:
    def test_matches_reference_and_flags_enough(self):
        inst = instance_for(1, m=10, n=15)
        cfg = DynamicConfig(solver="pg", sphere="gap", gap_tol=1e-10)
        rep = dynamic_solve(inst, cfg)
        assert rep.converged
        truth = reference(inst)
        assert np.max(np.abs(rep.x - truth.x)) <= 1e-5
        assert rep.sets.size >= inst.n - inst.m + 1

    def test_zero_shortcut_above_threshold(self):
        inst = instance_for(2, m=6, n=9)
        above = ProblemInstance(inst.A, inst.y, 1.1 * lambda_max(inst.A, inst.y), normalize=False)
        rep = dynamic_solve(above, DynamicConfig())
        assert rep.converged and rep.iterations == 0
        assert np.all(rep.x == 0.0) and rep.gap == 0.0

    def test_max_outer_zero_returns_initial_state(self):
        inst = instance_for(3, m=6, n=9)
        rep = dynamic_solve(inst, DynamicConfig(max_outer=0))
        assert not rep.converged
        assert np.all(rep.x == 0.0)

    def test_squeeze_toggle_same_solution_fewer_mults(self):
        inst = instance_for(4, m=10, n=15, ratio=0.8)
        on = dynamic_solve(inst, DynamicConfig(gap_tol=1e-8, trace_every=0))
        off = dynamic_solve(
            inst, DynamicConfig(gap_tol=1e-8, squeeze_enabled=False, trace_every=0)
        )
        assert on.converged and off.converged
        assert np.max(np.abs(on.x - off.x)) <= 1e-6
        assert on.mults < off.mults

    def test_flagged_counts_monotone_and_safe(self):
        inst = instance_for(5, m=10, n=15)
        rep = dynamic_solve(inst, DynamicConfig(gap_tol=1e-12))
        flagged = [rec.flagged for rec in rep.trace]
        assert all(b >= a for a, b in zip(flagged, flagged[1:]))
        truth = saturated_sets(reference(inst).x, margin=1e-6)
        assert np.all(np.isin(rep.sets.plus, truth.plus))
        assert np.all(np.isin(rep.sets.minus, truth.minus))

    def test_final_gap_matches_independent_recomputation(self):
        inst = instance_for(6, m=10, n=15)
        for cfg in (
            DynamicConfig(gap_tol=1e-9),
            DynamicConfig(solver="fw", sphere="st1", gap_tol=1e-6),
            DynamicConfig(gap_tol=1e-9, squeeze_enabled=False),
        ):
            rep = dynamic_solve(inst, cfg)
            comp = complement_indices(inst.n, rep.sets)
            gap = duality_gap(inst, rep.sets, rep.level, rep.x[comp], rep.u)
            assert abs(gap - rep.gap) <= 1e-12

    def test_fw_dynamic_converges(self):
        inst = instance_for(7, m=10, n=15)
        rep = dynamic_solve(inst, DynamicConfig(solver="fw", gap_tol=1e-6, trace_every=0))
        assert rep.converged
        assert np.max(np.abs(rep.x - reference(inst).x)) <= 1e-2

    def test_warm_start_accepted(self):
        inst = instance_for(8, m=10, n=15, ratio=0.6)
        cold = dynamic_solve(inst, DynamicConfig(gap_tol=1e-10, trace_every=0))
        warm = dynamic_solve(
            inst, DynamicConfig(gap_tol=1e-10, trace_every=0), start_x=cold.x
        )
        assert warm.converged
        assert warm.mults < cold.mults
        assert np.max(np.abs(warm.x - cold.x)) <= 1e-4

    def test_inner_iters_validated(self):
        with pytest.raises(ValueError):
            DynamicConfig(inner_iters=0)
        with pytest.raises(ValueError):
            DynamicConfig(solver="nope")


class TestIterationCost:
    def test_reduced_step_cost_tracks_width(self):
        m, n, flagged = 20, 60, 30
        inst = instance_for(9, m=m, n=n, ratio=0.5)
        full = build_squeezed(inst, SaturationSets.empty())
        sets = SaturationSets(plus=np.arange(15), minus=np.arange(15, 30))
        reduced = build_squeezed(inst, sets)

        def step_cost(sq):
            counter = OpCounter()
            w = 1.0
            xbar = np.full(sq.width, 0.5)
            projected_gradient_step(sq, w, xbar, 1.0, counter=counter)
            return counter.mults

        ratio = step_cost(reduced) / step_cost(full)
        target = (n - flagged + 1) / n
        assert abs(ratio - target) <= 0.15 * target
