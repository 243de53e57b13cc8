"""Executing run specifications against the benchmark scenarios.

This module is the bridge between the wire types in schemas.py and the
numerical core: it builds the scenario, runs the closed loop (possibly
several times for timing), checks the determinism contract across repeats,
and reduces the log to records plus summary statistics.
"""

from __future__ import annotations

from typing import List, Sequence

import numpy as np

from .benchmarks import BenchmarkScenario, get_scenario
from .controllers import SqpSettings, make_controller
from .schemas import (
    CompareEntry,
    CompareReport,
    ExperimentResult,
    RunSpec,
    RunSummary,
    StepRecord,
)
from .sim import ClosedLoopLog, run_closed_loop


def scenario_for(spec: RunSpec) -> BenchmarkScenario:
    return get_scenario(
        spec.benchmark,
        horizon=spec.horizon,
        steps=spec.steps,
        embedding=spec.embedding,
    )


def settings_for(spec: RunSpec) -> SqpSettings:
    return SqpSettings(
        step_tol=spec.step_tol,
        schedule_tol=spec.schedule_tol,
        max_iterations=spec.max_iterations,
        init_mode=spec.init_mode,
        line_search=spec.line_search,
        soft_constraints=spec.soft_constraints,
    )


def _run_once(scenario: BenchmarkScenario, spec: RunSpec) -> ClosedLoopLog:
    controller = make_controller(
        spec.controller, scenario.model, scenario.config, settings_for(spec)
    )
    return run_closed_loop(
        scenario.plant,
        controller,
        scenario.x0,
        scenario.steps,
        reference=scenario.reference,
    )


def _stage_costs(scenario: BenchmarkScenario, log: ClosedLoopLog) -> np.ndarray:
    Q = scenario.config.Q
    R = scenario.config.R
    costs = np.empty(log.states.shape[0])
    for k in range(log.states.shape[0]):
        e = log.states[k]
        if scenario.reference is not None:
            e = e - scenario.reference(log.t[k])
        u = log.inputs[k]
        costs[k] = float(e @ Q @ e + u @ R @ u)
    return costs


def _violations(scenario: BenchmarkScenario, log: ClosedLoopLog) -> np.ndarray:
    """Worst constraint violation per step (0 when feasible)."""
    cfg = scenario.config
    out = np.zeros(log.states.shape[0])
    for k in range(log.states.shape[0]):
        worst = 0.0
        if cfg.G_x is not None:
            worst = max(worst, float(np.max(cfg.G_x @ log.states[k] - cfg.h_x)))
        if cfg.G_u is not None:
            worst = max(worst, float(np.max(cfg.G_u @ log.inputs[k] - cfg.h_u)))
        out[k] = max(worst, 0.0)
    return out


def _check_repeat_identical(first: ClosedLoopLog, other: ClosedLoopLog) -> None:
    # Bitwise: repeats of a deterministic loop must not drift at all.
    same = (
        first.states.shape == other.states.shape
        and np.array_equal(first.states, other.states)
        and np.array_equal(first.inputs, other.inputs)
        and np.array_equal(first.sqp_iterations, other.sqp_iterations)
        and list(first.statuses) == list(other.statuses)
    )
    if not same:
        raise RuntimeError(
            "repeat produced a different trajectory; the closed loop is "
            "supposed to be deterministic"
        )


def execute_run(spec: RunSpec) -> ExperimentResult:
    scenario = scenario_for(spec)
    log = _run_once(scenario, spec)
    solve_times = [np.asarray(log.solve_times, dtype=float)]
    for _ in range(spec.repeat - 1):
        again = _run_once(scenario, spec)
        _check_repeat_identical(log, again)
        solve_times.append(np.asarray(again.solve_times, dtype=float))

    stage = _stage_costs(scenario, log)
    viol = _violations(scenario, log)
    # Timing averaged per step over repeats, then summarized; this keeps
    # tau_max meaningful (max of per-step means, not max over all noise).
    tau = np.mean(np.stack(solve_times, axis=0), axis=0)

    records = [
        StepRecord(
            step=k,
            t=float(log.t[k]),
            x=[float(v) for v in log.states[k]],
            u=[float(v) for v in log.inputs[k]],
            solve_time_s=float(tau[k]),
            sqp_iters=int(log.sqp_iterations[k]),
            qp_iters=int(log.qp_iterations[k]),
            status=log.statuses[k],
            stage_cost=float(stage[k]),
            violation=float(viol[k]),
        )
        for k in range(log.states.shape[0])
    ]
    summary = RunSummary(
        total_cost=float(np.sum(stage)),
        tau_mean=float(np.mean(tau)),
        tau_std=float(np.std(tau)),
        tau_max=float(np.max(tau)),
        mean_sqp_iterations=float(np.mean(log.sqp_iterations)),
        worst_status=log.worst_status,
    )
    n_steps = log.states.shape[0]
    converged = sum(1 for s in log.statuses if s == "converged")
    return ExperimentResult(
        spec=spec,
        summary=summary,
        records=records,
        final_state=[float(v) for v in log.final_state],
        clamp_events=log.clamp_events,
        truncated=log.truncated,
        converged_fraction=converged / n_steps if n_steps else 0.0,
        repeats_run=spec.repeat,
    )


def _reduction_pct(reference: float, value: float) -> float:
    if reference == 0.0:
        return 0.0
    return 100.0 * (reference - value) / reference


def compare_runs(specs: Sequence[RunSpec]) -> CompareReport:
    """Run every spec and report each one against the first.

    All specs must target the same benchmark, otherwise the cost numbers
    are not comparable and we refuse.
    """
    if not specs:
        raise ValueError("compare needs at least one run spec")
    benchmarks = {s.benchmark for s in specs}
    if len(benchmarks) != 1:
        raise ValueError(
            "compare requires all specs to share a benchmark, got "
            + ", ".join(sorted(benchmarks))
        )

    results = [execute_run(s) for s in specs]
    ref = results[0].summary
    entries: List[CompareEntry] = []
    for res in results:
        s = res.summary
        # positive gap means this run is more expensive than the reference
        gap = (0.0 if ref.total_cost == 0.0 else
               100.0 * (s.total_cost - ref.total_cost) / ref.total_cost)
        entries.append(
            CompareEntry(
                label=res.spec.run_label,
                controller=res.spec.controller,
                summary=s,
                cost_gap_pct=gap,
                time_reduction_pct=_reduction_pct(ref.tau_mean, s.tau_mean),
                iteration_reduction_pct=_reduction_pct(
                    ref.mean_sqp_iterations, s.mean_sqp_iterations
                ),
            )
        )
    from .reporting import format_compare_table

    report = CompareReport(
        benchmark=specs[0].benchmark,
        reference=results[0].spec.run_label,
        entries=entries,
        table="",
    )
    return report.model_copy(update={"table": format_compare_table(report)})
