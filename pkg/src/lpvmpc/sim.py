"""Closed-loop simulation of a controller against the nonlinear plant.

The plant is always the continuous-time system integrated with RK4 at the
sampling time, regardless of which discretization the controller's model
embeds; the gap between the two is a property under test, not something to
hide. Timing wraps the controller solve only. When a solve reports an
infeasible QP the previous input is held; divergence truncates the run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .controllers import DIVERGED, QP_INFEASIBLE, MpcController, worst_status
from .horizon import MpcConfig
from .lpv import NonlinearPlant, integrate_plant


@dataclass
class ClosedLoopLog:
    """Per-step trajectory and solver bookkeeping.

    Row k describes time t_k: the state before the solve, the input that
    was applied, and the solve that produced it. final_state is the state
    after the last applied input, so replaying inputs through the plant
    reproduces states[1:] plus final_state exactly.
    """

    t: np.ndarray
    states: np.ndarray
    inputs: np.ndarray
    solve_times: np.ndarray
    sqp_iterations: np.ndarray
    qp_iterations: np.ndarray
    statuses: list
    stage_costs: np.ndarray
    violations: np.ndarray
    final_state: np.ndarray
    clamp_events: int = 0
    truncated: bool = False
    results: Optional[list] = None

    @property
    def steps(self) -> int:
        return self.t.size

    @property
    def worst_status(self) -> str:
        return worst_status(self.statuses)


@dataclass
class TimingStats:
    mean: float
    std: float
    max: float


def timing_stats(log: ClosedLoopLog) -> TimingStats:
    tau = np.asarray(log.solve_times, dtype=float)
    return TimingStats(mean=float(np.mean(tau)), std=float(np.std(tau)),
                       max=float(np.max(tau)))


def closed_loop_cost(log: ClosedLoopLog, config: MpcConfig | None = None) -> float:
    return float(np.sum(log.stage_costs))


def _stage_cost(config: MpcConfig, x, u, ref) -> float:
    dx = x - ref if ref is not None else x
    return float(dx @ config.Q @ dx + u @ config.R @ u)


def _violation(config: MpcConfig, x, u) -> float:
    worst = 0.0
    if config.G_x.shape[0]:
        worst = max(worst, float(np.max(config.G_x @ x - config.h_x)))
    if config.G_u.shape[0]:
        worst = max(worst, float(np.max(config.G_u @ u - config.h_u)))
    return max(worst, 0.0)


def run_closed_loop(plant: NonlinearPlant, controller: MpcController,
                    x0, steps: int,
                    reference: Optional[Callable[[float], np.ndarray]] = None,
                    t0: float = 0.0, keep_results: bool = False) -> ClosedLoopLog:
    """Run `steps` MPC executions from x0, propagating the true plant with RK4."""
    config = controller.config
    n, m = plant.n, plant.m
    ts = plant.t_s
    x = np.asarray(x0, dtype=float).copy()

    t_arr = np.zeros(steps)
    states = np.zeros((steps, n))
    inputs = np.zeros((steps, m))
    solve_times = np.zeros(steps)
    sqp_iters = np.zeros(steps, dtype=int)
    qp_iters = np.zeros(steps, dtype=int)
    statuses: list = []
    stage_costs = np.zeros(steps)
    violations = np.zeros(steps)
    results: list = []
    clamp_total = 0
    truncated = False

    u_prev = np.zeros(m)
    k_done = 0
    for k in range(steps):
        t_k = t0 + k * ts
        window = None
        if reference is not None:
            window = np.stack([np.asarray(reference(t_k + (j + 1) * ts), dtype=float)
                               for j in range(config.N)])
        tic = time.perf_counter()
        result = controller.solve(x, reference=window)
        elapsed = time.perf_counter() - tic

        if result.status == QP_INFEASIBLE:
            u = u_prev.copy()  # hold the last input when no QP solution exists
        else:
            u = np.atleast_1d(result.u0).astype(float)

        t_arr[k] = t_k
        states[k] = x
        inputs[k] = u
        solve_times[k] = elapsed
        sqp_iters[k] = result.iterations
        qp_iters[k] = result.qp_iterations_total
        statuses.append(result.status)
        ref_now = np.asarray(reference(t_k), dtype=float) if reference is not None else None
        stage_costs[k] = _stage_cost(config, x, u, ref_now)
        violations[k] = _violation(config, x, u)
        clamp_total += result.clamp_events
        if keep_results:
            results.append(result)
        k_done = k + 1

        if result.status == DIVERGED:
            truncated = True
            break
        x = integrate_plant(plant, x, u, method="rk4")
        u_prev = u

    if truncated and k_done < steps:
        sl = slice(0, k_done)
        t_arr, states, inputs = t_arr[sl], states[sl], inputs[sl]
        solve_times, sqp_iters, qp_iters = solve_times[sl], sqp_iters[sl], qp_iters[sl]
        stage_costs, violations = stage_costs[sl], violations[sl]

    return ClosedLoopLog(t=t_arr, states=states, inputs=inputs,
                         solve_times=solve_times, sqp_iterations=sqp_iters,
                         qp_iterations=qp_iters, statuses=statuses,
                         stage_costs=stage_costs, violations=violations,
                         final_state=x.copy(), clamp_events=clamp_total,
                         truncated=truncated,
                         results=results if keep_results else None)


def replay_states(plant: NonlinearPlant, x0, inputs: np.ndarray) -> np.ndarray:
    """Re-propagate logged inputs; returns the (steps+1, n) state sequence."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    out = np.zeros((inputs.shape[0] + 1, plant.n))
    x = np.asarray(x0, dtype=float).copy()
    out[0] = x
    for k in range(inputs.shape[0]):
        x = integrate_plant(plant, x, inputs[k], method="rk4")
        out[k + 1] = x
    return out
