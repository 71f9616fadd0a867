"""The compiled kernels must agree with the generic numpy paths."""

import numpy as np
import pytest

from swarmlab import _fast
from swarmlab.core import Ensemble
from swarmlab.dynamics import CuckerSmale, HKModel, IntegratorSpec, integrate
from swarmlab.network import Metric, Topological
from swarmlab.potential import PowerLaw


class TestCSKernel:
    def test_matches_generic_rk4(self):
        rng = np.random.default_rng(0)
        x0 = rng.uniform(0, 1, (8, 2))
        v0 = rng.normal(0, 1, (8, 2))
        times, xs, vs = _fast.cs_rk4_sample(x0, v0, 1.0, 1.0, 0.01, 100, 10)
        model = CuckerSmale(kernel=PowerLaw(beta=1.0, amplitude=1.0))
        spec = IntegratorSpec(scheme="rk4", dt=0.01, t_end=1.0, sample_stride=10)
        rec = integrate(
            model, Ensemble(positions=x0, velocities=v0), spec, record_positions=True
        )
        assert np.allclose(times, rec.times)
        assert np.max(np.abs(xs - rec.positions)) <= 1e-12
        assert np.max(np.abs(vs - rec.velocities)) <= 1e-12

    def test_general_beta(self):
        rng = np.random.default_rng(1)
        x0 = rng.uniform(0, 1, (5, 2))
        v0 = rng.normal(0, 1, (5, 2))
        _, xs, vs = _fast.cs_rk4_sample(x0, v0, 1.7, 0.8, 0.01, 50, 50)
        model = CuckerSmale(kernel=PowerLaw(beta=1.7, amplitude=0.8))
        spec = IntegratorSpec(scheme="rk4", dt=0.01, t_end=0.5, sample_stride=50)
        rec = integrate(
            model, Ensemble(positions=x0, velocities=v0), spec, record_positions=True
        )
        assert np.max(np.abs(vs[-1] - rec.velocities[-1])) <= 1e-12


class TestHKKernel:
    @pytest.mark.parametrize("mode,param", [("metric", 0.15), ("topological", 3)])
    def test_matches_generic_euler(self, mode, param):
        rng = np.random.default_rng(2)
        x0 = rng.uniform(0, 1, 40)
        variant = Metric(param) if mode == "metric" else Topological(param)
        model = HKModel(variant=variant)
        spec = IntegratorSpec(scheme="euler", dt=0.05, t_end=2.0, sample_stride=40)
        rec = integrate(model, Ensemble(positions=x0[:, None]), spec)
        out = _fast.hk_run(x0, mode, param, dt=0.05, t_end=2.0, exit_tol=0.0, consensus_eps=0)
        assert np.max(np.abs(out["opinions"] - rec.terminal.positions[:, 0])) <= 1e-12

    def test_links_match_generic(self):
        rng = np.random.default_rng(3)
        x0 = rng.uniform(0, 1, 30)
        links = np.array([[0, 15], [3, 27], [9, 20]])
        model = HKModel(variant=Metric(0.1), links=links)
        spec = IntegratorSpec(scheme="euler", dt=0.05, t_end=1.0, sample_stride=20)
        rec = integrate(model, Ensemble(positions=x0[:, None]), spec)
        out = _fast.hk_run(
            x0, "metric", 0.1, links=links, dt=0.05, t_end=1.0, exit_tol=0.0, consensus_eps=0
        )
        assert np.max(np.abs(out["opinions"] - rec.terminal.positions[:, 0])) <= 1e-12

    def test_tie_cases_match_rank_rule(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            n = int(rng.integers(4, 20))
            k = int(rng.integers(1, n + 1))
            x0 = np.round(rng.uniform(0, 1, n), 1)  # heavy ties
            model = HKModel(variant=Topological(k))
            ref = x0 + 0.05 * model.deriv(x0[:, None])[0][:, 0]
            out = _fast.hk_run(
                x0, "topological", k, dt=0.05, t_end=0.05, exit_tol=0.0, consensus_eps=0
            )
            assert np.max(np.abs(out["opinions"] - ref)) <= 1e-13

    def test_edge_count_series_reaches_full_graph(self):
        rng = np.random.default_rng(5)
        x0 = rng.uniform(0, 1, 20)
        out = _fast.hk_run(
            x0, "metric", 0.6, dt=0.05, t_end=20.0, exit_tol=1e-12,
            consensus_eps=1e-3, stride=10, record=True,
        )
        assert out["edge_count"][-1] == 400
        assert out["consensus_time"] is not None
        # edge counts are the directed count including self-loops
        e0 = Ensemble(positions=x0[:, None])
        from swarmlab.network import edge_count, metric_neighbors

        assert out["edge_count"][0] == edge_count(metric_neighbors(e0, 0.6))

    def test_consensus_time_matches_definition(self):
        rng = np.random.default_rng(6)
        x0 = rng.uniform(0, 1, 15)
        out = _fast.hk_run(
            x0, "metric", 1.0, dt=0.01, t_end=30.0, exit_tol=0.0, consensus_eps=1e-3
        )
        t = out["consensus_time"]
        assert t is not None and t > 0
        # replay up to just before t: not yet concentrated; at t: concentrated
        model = HKModel(variant=Metric(1.0))
        spec = IntegratorSpec(scheme="euler", dt=0.01, t_end=t, sample_stride=1)
        rec = integrate(model, Ensemble(positions=x0[:, None]), spec)
        assert rec.max_dev[-1] <= 1e-3
        assert rec.max_dev[-2] > 1e-3
