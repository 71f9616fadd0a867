import math

import numpy as np
import pytest

from swarmlab.core import Ensemble, RunRecord, velocity_variance
from swarmlab.control import (
    MigrationBudget,
    SampledSparse,
    Sparse,
    TotalFeedback,
    SampledControl,
    consensus_region_meanfield,
    control_cost,
    dvdt_under_control,
    flocking_region,
    leader_follower_rhs,
    migration_alpha,
    random_feasible_control,
    run_controlled_cs,
    sparse_feedback,
    sparse_optimality_probe,
    total_feedback,
)
from swarmlab.dynamics import cs_rhs
from swarmlab.potential import Constant, PowerLaw


KERNEL = PowerLaw(beta=1.0, amplitude=1.0)


def make_state(rng, n=10, d=2, spread=1.0, vscale=1.0):
    x = rng.uniform(0, spread, (n, d))
    v = rng.normal(0, vscale, (n, d))
    return Ensemble(positions=x, velocities=v)


class TestControlSpecs:
    def test_positivity_enforced(self):
        TotalFeedback(alpha_gain=0.5)
        Sparse(bound=1.0)
        SampledSparse(bound=1.0, tau=0.01)
        MigrationBudget(bound=0.0, strategy="off")
        with pytest.raises(ValueError):
            TotalFeedback(alpha_gain=0.0)
        with pytest.raises(ValueError):
            Sparse(bound=-1.0)
        with pytest.raises(ValueError):
            SampledSparse(bound=1.0, tau=0.0)
        with pytest.raises(ValueError):
            MigrationBudget(bound=1.0, strategy="greedy-ish")


class TestRegions:
    def test_zero_velocity_variance_inside(self):
        rng = np.random.default_rng(0)
        e = Ensemble(positions=rng.normal(size=(6, 2)), velocities=np.ones((6, 2)))
        verdict = flocking_region(e, KERNEL)
        assert verdict.inside and verdict.measured == 0.0

    def test_two_agent_threshold_value(self):
        e = Ensemble(positions=[[0.0], [0.0]], velocities=[[0.0], [0.0]])
        verdict = flocking_region(e, KERNEL)
        assert verdict.threshold == pytest.approx(0.5 * math.pi / 2, rel=1e-12)

    def test_fast_spread_agents_outside(self):
        e = Ensemble(
            positions=[[0.0, 0.0], [50.0, 0.0]],
            velocities=[[5.0, 0.0], [-5.0, 0.0]],
        )
        assert not flocking_region(e, KERNEL).inside

    def test_divergent_tail_rejected(self):
        e = Ensemble(positions=[[0.0]], velocities=[[0.0]])
        with pytest.raises(ValueError):
            flocking_region(e, Constant(1.0))

    def test_invariance_translation_and_boost(self):
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, (8, 2))
        v = rng.normal(size=(8, 2))
        base = flocking_region(Ensemble(positions=x, velocities=v), KERNEL)
        shifted = flocking_region(
            Ensemble(positions=x + 13.0, velocities=v + np.array([4.0, -2.0])), KERNEL
        )
        assert base.inside == shifted.inside
        assert base.margin == pytest.approx(shifted.margin, rel=1e-9, abs=1e-12)

    def test_meanfield_zero_vradius_inside(self):
        assert consensus_region_meanfield(2.0, 0.0, KERNEL).inside

    def test_meanfield_threshold_value(self):
        verdict = consensus_region_meanfield(0.0, 0.1, KERNEL)
        assert verdict.threshold == pytest.approx(math.pi / 4, rel=1e-12)

    def test_meanfield_boundary_is_outside(self):
        threshold = math.pi / 4
        verdict = consensus_region_meanfield(0.0, threshold, KERNEL)
        assert not verdict.inside
        # the finite-dimensional region is inclusive at its boundary instead
        e = Ensemble(positions=[[0.0], [0.0]], velocities=[[0.0], [0.0]])
        fin = flocking_region(e, KERNEL)
        assert fin.inside and fin.margin >= 0


class TestTotalFeedback:
    def test_aligned_is_zero(self):
        e = Ensemble(positions=np.zeros((4, 2)), velocities=np.ones((4, 2)))
        assert np.max(np.abs(total_feedback(e, 0.7))) == 0.0

    def test_hand_value(self):
        e = Ensemble(positions=[[0.0], [0.0]], velocities=[[1.0], [-1.0]])
        u = total_feedback(e, 0.5)
        assert u[:, 0] == pytest.approx([-0.5, 0.5])

    def test_budget_feasibility_relation(self):
        rng = np.random.default_rng(2)
        e = make_state(rng)
        vperp = e.velocities - e.velocities.mean(axis=0)
        total_norm = np.sum(np.linalg.norm(vperp, axis=1))
        bound = 1.0
        alpha_ok = bound / total_norm
        u = total_feedback(e, 0.999 * alpha_ok)
        assert np.sum(np.linalg.norm(u, axis=1)) <= bound
        u = total_feedback(e, 1.001 * alpha_ok)
        assert np.sum(np.linalg.norm(u, axis=1)) > bound

    def test_variance_decay_rate(self):
        # with no interaction the controlled flow contracts V at rate exactly 2 alpha
        rng = np.random.default_rng(3)
        e = make_state(rng, n=6)
        alpha = 0.8
        u = total_feedback(e, alpha)
        dvdt = dvdt_under_control(e, Constant(0.0), u)
        assert dvdt == pytest.approx(-2 * alpha * velocity_variance(e), rel=1e-12)
        # with interaction the decay is at least as fast
        assert dvdt_under_control(e, KERNEL, u) <= dvdt + 1e-12


class TestSparseFeedback:
    def test_inside_threshold_zero(self):
        e = Ensemble(
            positions=np.zeros((4, 2)) + np.random.default_rng(4).uniform(0, 0.01, (4, 2)),
            velocities=np.full((4, 2), 3.0),
        )
        assert np.max(np.abs(sparse_feedback(e, KERNEL, 1.0))) == 0.0

    def test_two_agent_tie_break(self):
        e = Ensemble(positions=[[0.0], [0.0]], velocities=[[1.0], [-1.0]])
        u = sparse_feedback(e, KERNEL, 2.5)
        assert u[0, 0] == pytest.approx(-2.5)
        assert u[1, 0] == 0.0

    def test_at_most_one_active_and_budget(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            e = make_state(rng, n=12, vscale=2.0)
            u = sparse_feedback(e, KERNEL, 1.3)
            norms = np.linalg.norm(u, axis=1)
            assert np.count_nonzero(norms) <= 1
            assert norms.sum() <= 1.3 + 1e-12


class TestSampledControl:
    def test_tau_beyond_horizon_computes_once(self):
        calls = []

        def law(e):
            calls.append(1)
            return np.zeros_like(e.velocities)

        ctl = SampledControl(law, tau=100.0)
        e = Ensemble(positions=np.zeros((2, 1)), velocities=np.ones((2, 1)))
        for t in np.arange(0, 1.0, 0.1):
            ctl.control(t, e)
        assert len(calls) == 1

    def test_switch_count_bound(self):
        rng = np.random.default_rng(6)
        e0 = make_state(rng, n=6, vscale=2.0)
        tau, t_end, dt = 0.01, 0.2, 1e-3
        rec = run_controlled_cs(
            e0, KERNEL, 1.0, dt=dt, t_end=t_end, hold_steps=int(tau / dt),
            switch_off_in_region=False, sample_stride=1,
        )
        updates = rec.extras["index_updates"]
        switches = int(np.sum(np.asarray(updates[1:]) != np.asarray(updates[:-1])))
        assert switches <= math.ceil(t_end / tau)

    def test_chattering_suppressed_by_sampling(self):
        # near-tied deviations make the worst agent flip every step
        x = np.zeros((3, 1))
        v = np.array([[1.0], [-0.9999], [-0.0001]])
        e0 = Ensemble(positions=x, velocities=v)
        t_end, dt, tau = 0.2, 1e-3, 0.01
        raw = run_controlled_cs(
            e0, KERNEL, 1.0, dt=dt, t_end=t_end, hold_steps=1,
            switch_off_in_region=False, sample_stride=1,
        )
        held = run_controlled_cs(
            e0, KERNEL, 1.0, dt=dt, t_end=t_end, hold_steps=int(tau / dt),
            switch_off_in_region=False, sample_stride=1,
        )
        count = lambda rec: int(
            np.sum(rec.extras["index_updates"][1:] != rec.extras["index_updates"][:-1])
        )
        assert count(raw) > math.ceil(t_end / tau)
        assert count(held) <= math.ceil(t_end / tau)


class TestSparseOptimality:
    def test_never_increases_variance(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            e = make_state(rng, vscale=2.0)
            u = sparse_feedback(e, KERNEL, 1.0)
            assert dvdt_under_control(e, KERNEL, u) <= dvdt_under_control(
                e, KERNEL, np.zeros_like(u)
            ) + 1e-14

    def test_beats_random_feasible_controls(self):
        rng = np.random.default_rng(8)
        e = make_state(rng, n=10, vscale=2.0)
        report = sparse_optimality_probe(e, KERNEL, 1.0, trials=100, rng=rng)
        assert report.never_beaten
        assert np.all(report.dvdt_sparse <= report.dvdt_samples + 1e-12)

    def test_zero_budget_equality(self):
        rng = np.random.default_rng(9)
        e = make_state(rng)
        report = sparse_optimality_probe(e, KERNEL, 0.0, trials=5, rng=rng)
        assert np.allclose(report.dvdt_samples, report.dvdt_sparse)

    def test_random_controls_feasible(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            u = random_feasible_control((7, 2), 1.5, rng)
            assert np.sum(np.linalg.norm(u, axis=1)) <= 1.5 + 1e-12


class TestControlledRun:
    def test_fast_and_generic_paths_agree(self):
        rng = np.random.default_rng(11)
        e0 = make_state(rng, n=6, vscale=1.5)
        fast = run_controlled_cs(
            e0, KERNEL, 1.0, dt=0.01, t_end=1.0, sample_stride=10, hold_steps=1
        )
        from swarmlab.control import _python_controlled_cs

        slow = _python_controlled_cs(e0, KERNEL, 1.0, 0.01, 100, 10, 1, True)
        assert np.allclose(fast.positions, slow["positions"], atol=1e-12)
        assert np.allclose(fast.velocities, slow["velocities"], atol=1e-12)
        assert np.array_equal(fast.active_index, slow["active_index"])

    def test_switch_off_is_sticky(self):
        rng = np.random.default_rng(12)
        e0 = make_state(rng, n=8, spread=0.5, vscale=1.0)
        rec = run_controlled_cs(e0, KERNEL, 1.0, dt=0.005, t_end=20.0, sample_stride=10)
        entry = rec.extras["region_entry_time"]
        assert entry is not None
        after = rec.times > entry
        assert np.all(rec.control_norm[after] == 0.0)
        assert np.all(rec.active_index[after] == -1)


class TestMigrationAlpha:
    def target(self):
        return np.array([1.0, 0.0])

    def test_off_strategy(self):
        rng = np.random.default_rng(13)
        e = make_state(rng)
        alpha = migration_alpha(MigrationBudget(bound=2.0, strategy="off"), e, self.target())
        assert np.all(alpha == 0.0)

    def test_greedy_assigns_worst_agent(self):
        v = np.zeros((5, 2))
        v[3] = [-5.0, 0.0]  # farthest from the target velocity
        e = Ensemble(positions=np.zeros((5, 2)), velocities=v)
        alpha = migration_alpha(MigrationBudget(bound=1.0, strategy="full_greedy"), e, self.target())
        assert alpha[3] == 1.0
        assert alpha.sum() == pytest.approx(1.0)

    def test_budget_respected(self):
        rng = np.random.default_rng(14)
        for strategy in (
            MigrationBudget(bound=2.5, strategy="full_greedy"),
            MigrationBudget(bound=2.5, strategy="constant", constant_alpha=0.9),
        ):
            e = make_state(rng, n=7)
            alpha = migration_alpha(strategy, e, self.target())
            assert alpha.sum() <= 2.5 + 1e-12
            assert np.all((0 <= alpha) & (alpha <= 1))


class TestLeaderFollower:
    def test_reduces_to_plain_alignment_on_union(self):
        rng = np.random.default_rng(15)
        leaders = make_state(rng, n=3)
        followers = make_state(rng, n=7)
        (dy, dw), (dx, dv) = leader_follower_rhs(
            leaders, followers, KERNEL, np.zeros((3, 2))
        )
        union = Ensemble(
            positions=np.vstack([leaders.positions, followers.positions]),
            velocities=np.vstack([leaders.velocities, followers.velocities]),
        )
        ux, uv = cs_rhs(union, KERNEL)
        assert np.allclose(np.vstack([dw, dv]), uv, atol=1e-14)
        assert np.allclose(np.vstack([dy, dx]), ux, atol=1e-14)

    def test_single_leader_alone_is_controlled_dynamics(self):
        leader = Ensemble(positions=[[0.0, 0.0]], velocities=[[1.0, 0.0]])
        u = np.array([[0.3, -0.2]])
        (dy, dw), rest = leader_follower_rhs(leader, None, KERNEL, u)
        assert rest is None
        assert np.allclose(dw, u)
        assert np.allclose(dy, [[1.0, 0.0]])

    def test_union_momentum_shifts_only_through_control(self):
        rng = np.random.default_rng(16)
        leaders = make_state(rng, n=4)
        followers = make_state(rng, n=9)
        u = rng.normal(size=(4, 2))
        (dy, dw), (dx, dv) = leader_follower_rhs(leaders, followers, KERNEL, u)
        total = dw.sum(axis=0) + dv.sum(axis=0)
        assert np.allclose(total, u.sum(axis=0), atol=1e-13)


class TestControlHistoryExport:
    def test_columns_and_budget(self, tmp_path):
        from swarmlab.control import write_control_history

        rng = np.random.default_rng(20)
        e0 = make_state(rng, n=5, spread=0.5, vscale=1.5)
        rec = run_controlled_cs(e0, KERNEL, 1.0, dt=0.01, t_end=0.5, sample_stride=5)
        path = tmp_path / "control.csv"
        write_control_history(rec, path)
        lines = open(path).read().splitlines()
        assert lines[0] == "t,active_index,control_norm,u0,u1,u2,u3,u4"
        for line in lines[1:]:
            parts = [float(v) for v in line.split(",")]
            per_agent = parts[3:]
            assert sum(1 for v in per_agent if v != 0) <= 1
            assert sum(per_agent) == pytest.approx(parts[2])

    def test_requires_history(self, tmp_path):
        from swarmlab.control import write_control_history

        rec = RunRecord(times=np.array([0.0]))
        with pytest.raises(ValueError):
            write_control_history(rec, tmp_path / "x.csv")


class TestControlCost:
    def _record(self, times, bigv, unorm, n=4):
        return RunRecord(
            times=np.asarray(times, float),
            velocity_variance=np.asarray(bigv, float),
            control_norm=np.asarray(unorm, float),
            terminal=Ensemble(positions=np.zeros((n, 1)), velocities=np.zeros((n, 1))),
        )

    def test_aligned_uncontrolled_costs_nothing(self):
        rec = self._record([0.0, 1.0, 2.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
        assert control_cost(rec, 1.0) == 0.0

    def test_constant_variance_exact(self):
        rec = self._record([0.0, 1.0, 2.0, 3.0], [0.5] * 4, [0.0] * 4, n=4)
        assert control_cost(rec, 2.0) == pytest.approx(4 * 0.5 * 3.0)

    def test_gamma_scales_control_term_only(self):
        rec = self._record([0.0, 1.0], [0.3, 0.3], [2.0, 2.0], n=2)
        c1 = control_cost(rec, 1.0)
        c2 = control_cost(rec, 2.0)
        assert c2 - c1 == pytest.approx(2.0)  # one extra unit of gamma times integral 2

    def test_missing_history_rejected(self):
        rec = RunRecord(times=np.array([0.0]), velocity_variance=np.array([1.0]))
        with pytest.raises(ValueError):
            control_cost(rec, 1.0)
