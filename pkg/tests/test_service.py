"""Service endpoints exercised through the in-process client.

The client mounts the FastAPI app over a synchronous ASGI transport, so
these tests cover the wire schemas, the route handlers, and the transport
in one pass without opening sockets.
"""

import numpy as np
import pytest

from lpvmpc import __version__
from lpvmpc.client import ServiceClient, ServiceError
from lpvmpc.schemas import RunSpec, SolveRequest


@pytest.fixture(scope="module")
def client():
    with ServiceClient() as c:
        yield c


class TestHealthAndCatalog:
    def test_health(self, client):
        h = client.health()
        assert h.status == "ok"
        assert h.version == __version__

    def test_benchmark_catalog(self, client):
        infos = {b.name: b for b in client.benchmarks()}
        assert set(infos) == {"vanderpol", "unicycle", "bicycle"}
        uni = infos["unicycle"]
        assert (uni.n, uni.m, uni.horizon, uni.steps) == (5, 2, 20, 100)
        assert infos["vanderpol"].embeddings == ["euler_exact", "rk4_exact"]
        assert infos["bicycle"].has_reference
        assert not infos["unicycle"].has_reference


class TestSolveEndpoint:
    def test_solve_from_default_state(self, client):
        resp = client.solve(SolveRequest(benchmark="unicycle"))
        assert resp.status == "converged"
        assert len(resp.u0) == 2
        assert resp.iterations >= 1
        assert len(resp.step_norms) == resp.iterations
        assert resp.qp_iterations_total >= resp.iterations
        assert resp.form == "condensed"
        assert np.isfinite(resp.predicted_cost)

    def test_solve_with_explicit_state(self, client):
        resp = client.solve(SolveRequest(benchmark="vanderpol",
                                         x0=[0.5, -0.1], horizon=6))
        assert resp.status == "converged"
        assert abs(resp.u0[0]) <= 1.0 + 1e-9

    def test_zero_state_needs_no_iteration_beyond_one(self, client):
        resp = client.solve(SolveRequest(benchmark="vanderpol", x0=[0.0, 0.0]))
        assert resp.status == "converged"
        assert resp.iterations <= 1
        assert resp.u0[0] == pytest.approx(0.0, abs=1e-12)

    def test_oracle_on_reference_start_costs_nothing(self, client):
        resp = client.solve(SolveRequest(benchmark="bicycle",
                                         controller="oracle"))
        assert resp.status == "converged"
        assert resp.predicted_cost == pytest.approx(0.0, abs=1e-6)

    def test_wrong_state_length_rejected(self, client):
        with pytest.raises(ServiceError) as exc:
            client.solve(SolveRequest(benchmark="unicycle", x0=[1.0, 2.0]))
        assert exc.value.status_code == 400
        assert "x0" in exc.value.detail

    def test_unknown_benchmark_rejected_by_schema(self, client):
        with pytest.raises(ServiceError) as exc:
            client._request("POST", "/solve", {"benchmark": "pendulum"})
        assert exc.value.status_code == 422


class TestRunEndpoint:
    def test_small_run_round_trip(self, client):
        spec = RunSpec(benchmark="vanderpol", controller="lpv-sqp", steps=5)
        result = client.run(spec)
        assert len(result.records) == 5
        assert result.spec.run_label == "vanderpol-lpv-sqp"
        for rec in result.records:
            assert len(rec.x) == 2
            assert len(rec.u) == 1
            assert rec.solve_time_s > 0.0
        assert result.summary.worst_status == "converged"
        assert result.converged_fraction == 1.0
        assert result.repeats_run == 1

    def test_repeat_returns_identical_trajectory(self, client):
        spec = RunSpec(benchmark="vanderpol", steps=4, repeat=3)
        once = client.run(RunSpec(benchmark="vanderpol", steps=4))
        thrice = client.run(spec)
        assert thrice.repeats_run == 3
        assert thrice.summary.total_cost == once.summary.total_cost
        for a, b in zip(once.records, thrice.records):
            assert a.x == b.x
            assert a.u == b.u

    def test_embedding_override_rejected_for_unicycle(self, client):
        spec = RunSpec(benchmark="unicycle", steps=2, embedding="rk4_exact")
        with pytest.raises(ServiceError) as exc:
            client.run(spec)
        assert exc.value.status_code == 400
        assert "euler_exact" in exc.value.detail

    def test_invalid_controller_rejected_by_schema(self, client):
        with pytest.raises(ServiceError) as exc:
            client._request("POST", "/experiments/run",
                            {"benchmark": "vanderpol", "controller": "pid"})
        assert exc.value.status_code == 422


class TestCompareEndpoint:
    def test_two_controllers_share_reference(self, client):
        specs = [RunSpec(benchmark="vanderpol", controller="oracle", steps=5),
                 RunSpec(benchmark="vanderpol", controller="lpv-sqp", steps=5)]
        report = client.compare(specs)
        assert report.benchmark == "vanderpol"
        assert report.reference == "vanderpol-oracle"
        assert [e.controller for e in report.entries] == ["oracle", "lpv-sqp"]
        ref = report.entries[0]
        assert ref.cost_gap_pct == 0.0
        assert ref.time_reduction_pct == 0.0
        assert ref.iteration_reduction_pct == 0.0
        assert "total_cost" in report.table

    def test_spec_compared_with_itself_has_zero_gaps(self, client):
        spec = RunSpec(benchmark="vanderpol", controller="lpv-sqp", steps=4)
        report = client.compare([spec, spec])
        assert report.entries[1].cost_gap_pct == 0.0
        assert report.entries[1].iteration_reduction_pct == 0.0

    def test_mixed_benchmarks_rejected(self, client):
        specs = [RunSpec(benchmark="vanderpol", steps=2),
                 RunSpec(benchmark="unicycle", steps=2)]
        with pytest.raises(ServiceError) as exc:
            client.compare(specs)
        assert exc.value.status_code == 400
        assert "benchmark" in exc.value.detail


class TestAppObject:
    def test_module_level_app_exists(self):
        from lpvmpc.service import app, create_app
        paths = {r.path for r in app.routes}
        assert {"/health", "/benchmarks", "/solve",
                "/experiments/run", "/experiments/compare"} <= paths
        fresh = create_app()
        assert {r.path for r in fresh.routes} == paths
