"""LPV-embedded nonlinear MPC toolkit.

Core pieces: a dense active-set QP solver (qp), affine scheduling-parameter
models and plants (lpv), horizon assembly in stacked and condensed form
(horizon), inexact-SQP and iterated-QP controllers plus an exact-Jacobian
reference (controllers), a closed-loop harness (sim), benchmark scenarios
(benchmarks), and a FastAPI service with a thin CLI client on top.
"""

__version__ = "0.1.0"

from .qp import QpProblem, QpSolution, solve_qp, kkt_residuals, enumerate_qp_oracle
from .lpv import AffineLpvModel, NonlinearPlant, integrate_plant, embedding_exactness
from .horizon import MpcConfig, build_noncondensed, build_condensed
from .controllers import (SqpSettings, SqpResult, lpv_sqp_noncondensed,
                          lpv_sqp_condensed, qlmpc, exact_sqp_oracle,
                          fixed_point_residual, make_controller)
from .sim import ClosedLoopLog, run_closed_loop, closed_loop_cost, timing_stats
from .benchmarks import (BenchmarkScenario, get_scenario, vanderpol_scenario,
                         unicycle_scenario, bicycle_scenario)
from .schemas import RunSpec, RunSummary, ExperimentResult, CompareReport
from .experiments import execute_run, compare_runs

__all__ = [
    "QpProblem", "QpSolution", "solve_qp", "kkt_residuals", "enumerate_qp_oracle",
    "AffineLpvModel", "NonlinearPlant", "integrate_plant", "embedding_exactness",
    "MpcConfig", "build_noncondensed", "build_condensed",
    "SqpSettings", "SqpResult", "lpv_sqp_noncondensed", "lpv_sqp_condensed",
    "qlmpc", "exact_sqp_oracle", "fixed_point_residual", "make_controller",
    "ClosedLoopLog", "run_closed_loop", "closed_loop_cost", "timing_stats",
    "BenchmarkScenario", "get_scenario",
    "vanderpol_scenario", "unicycle_scenario", "bicycle_scenario",
    "RunSpec", "RunSummary", "ExperimentResult", "CompareReport",
    "execute_run", "compare_runs",
    "__version__",
]
