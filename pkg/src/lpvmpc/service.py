"""HTTP service exposing the benchmark experiments.

The service is stateless: every request carries the full run description and
the response carries the full result, so file output stays on the client
side. The CLI talks to this app in process by default.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from . import __version__
from .benchmarks import BENCHMARK_NAMES, get_scenario
from .controllers import SqpSettings, make_controller
from .experiments import compare_runs, execute_run
from .schemas import (
    BenchmarkInfo,
    CompareReport,
    CompareRequest,
    ExperimentResult,
    HealthResponse,
    RunSpec,
    SolveRequest,
    SolveResponse,
)


def _benchmark_info(name: str) -> BenchmarkInfo:
    sc = get_scenario(name)
    embeddings = ["euler_exact", "rk4_exact"] if name == "vanderpol" else [sc.embedding]
    return BenchmarkInfo(
        name=name,
        n=sc.model.n,
        m=sc.model.m,
        horizon=sc.config.N,
        steps=sc.steps,
        embeddings=embeddings,
        has_reference=sc.reference is not None,
        description=sc.description,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="lpvmpc", version=__version__)

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.get("/benchmarks", response_model=list[BenchmarkInfo])
    def benchmarks() -> list[BenchmarkInfo]:
        return [_benchmark_info(name) for name in BENCHMARK_NAMES]

    @app.post("/solve", response_model=SolveResponse)
    def solve(req: SolveRequest) -> SolveResponse:
        scenario = get_scenario(req.benchmark, horizon=req.horizon,
                                embedding=req.embedding)
        x0 = scenario.x0 if req.x0 is None else np.asarray(req.x0, dtype=float)
        if x0.shape != (scenario.model.n,):
            raise HTTPException(
                status_code=400,
                detail=f"x0 must have {scenario.model.n} entries",
            )
        settings = SqpSettings(
            step_tol=req.step_tol,
            schedule_tol=req.schedule_tol,
            max_iterations=req.max_iterations,
            line_search=req.line_search,
        )
        controller = make_controller(req.controller, scenario.model,
                                     scenario.config, settings)
        window = None
        if scenario.reference is not None:
            ts = scenario.plant.t_s
            window = np.stack([
                np.asarray(scenario.reference((j + 1) * ts), dtype=float)
                for j in range(scenario.config.N)
            ])
        result = controller.solve(x0, reference=window)
        return SolveResponse(
            u0=[float(v) for v in result.u0],
            status=result.status,
            iterations=result.iterations,
            qp_iterations_total=result.qp_iterations_total,
            step_norms=[float(v) for v in result.step_norms],
            predicted_cost=float(result.predicted_cost),
            form=result.form,
            schedule_clamp_events=result.clamp_events,
        )

    @app.post("/experiments/run", response_model=ExperimentResult)
    def run_experiment(spec: RunSpec) -> ExperimentResult:
        try:
            return execute_run(spec)
        except (ValueError, RuntimeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/experiments/compare", response_model=CompareReport)
    def compare(req: CompareRequest) -> CompareReport:
        try:
            return compare_runs(req.specs)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app


app = create_app()
