"""Request/response models for the experiment service.

These are the wire types: everything the HTTP API accepts or returns, and
therefore everything the CLI reads and writes, lives here. Numeric payloads
are plain lists so the JSON round trip is loss-free at float64 precision.
"""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field

BenchmarkName = Literal["vanderpol", "unicycle", "bicycle"]
ControllerName = Literal["lpv-sqp", "lpv-sqp-noncond", "qlmpc", "oracle"]
InitMode = Literal["zero", "warm_shift"]
LineSearch = Literal["off", "merit_backtracking"]
EmbeddingName = Literal["euler_exact", "rk4_exact"]


class RunSpec(BaseModel):
    """One closed-loop experiment: a benchmark, a controller, and overrides.

    seed is carried for randomized utilities only; closed-loop runs are
    deterministic and ignore it.
    """

    benchmark: BenchmarkName
    controller: ControllerName = "lpv-sqp"
    label: Optional[str] = None
    horizon: Optional[int] = Field(default=None, ge=1)
    steps: Optional[int] = Field(default=None, ge=1)
    embedding: Optional[EmbeddingName] = None
    step_tol: float = Field(default=1e-6, gt=0)
    schedule_tol: float = Field(default=1e-6, gt=0)
    max_iterations: int = Field(default=30, ge=1)
    init_mode: InitMode = "zero"
    line_search: LineSearch = "off"
    soft_constraints: bool = False
    repeat: int = Field(default=1, ge=1)
    seed: int = 0

    @property
    def run_label(self) -> str:
        return self.label or f"{self.benchmark}-{self.controller}"


class StepRecord(BaseModel):
    """One closed-loop step, mirroring one CSV row."""

    step: int
    t: float
    x: List[float]
    u: List[float]
    solve_time_s: float
    sqp_iters: int
    qp_iters: int
    status: str
    stage_cost: float
    violation: float


class RunSummary(BaseModel):
    """The six summary statistics written to the summary JSON file."""

    total_cost: float
    tau_mean: float
    tau_std: float
    tau_max: float
    mean_sqp_iterations: float
    worst_status: str


class ExperimentResult(BaseModel):
    spec: RunSpec
    summary: RunSummary
    records: List[StepRecord]
    final_state: List[float]
    clamp_events: int
    truncated: bool
    converged_fraction: float
    repeats_run: int


class CompareEntry(BaseModel):
    """One controller's line in a comparison, with reductions relative to
    the first (reference) spec. Positive reduction percentages mean this
    entry is cheaper than the reference."""

    label: str
    controller: ControllerName
    summary: RunSummary
    cost_gap_pct: float
    time_reduction_pct: float
    iteration_reduction_pct: float


class CompareReport(BaseModel):
    benchmark: BenchmarkName
    reference: str
    entries: List[CompareEntry]
    table: str


class CompareRequest(BaseModel):
    specs: List[RunSpec] = Field(min_length=1)


class SolveRequest(BaseModel):
    """Single open-loop MPC solve at one state."""

    benchmark: BenchmarkName
    controller: ControllerName = "lpv-sqp"
    x0: Optional[List[float]] = None
    embedding: Optional[EmbeddingName] = None
    horizon: Optional[int] = Field(default=None, ge=1)
    step_tol: float = Field(default=1e-6, gt=0)
    schedule_tol: float = Field(default=1e-6, gt=0)
    max_iterations: int = Field(default=30, ge=1)
    line_search: LineSearch = "off"


class SolveResponse(BaseModel):
    u0: List[float]
    status: str
    iterations: int
    qp_iterations_total: int
    step_norms: List[float]
    predicted_cost: float
    form: str
    schedule_clamp_events: int


class BenchmarkInfo(BaseModel):
    name: BenchmarkName
    n: int
    m: int
    horizon: int
    steps: int
    embeddings: List[str]
    has_reference: bool
    description: str


class HealthResponse(BaseModel):
    status: str
    version: str
