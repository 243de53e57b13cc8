"""MPC controllers built on schedule-frozen QP subproblems.

Four solvers share the same horizon data and the same stopping/bookkeeping
conventions:

  lpv_sqp_noncondensed   increment QPs on the stacked variable z; the
                         constraint Jacobian is approximated by the frozen-
                         schedule dynamics matrix C(p_bar), the Hessian by
                         the fixed cost matrix M.
  lpv_sqp_condensed      the same iteration after state elimination; each
                         increment QP lives on the input sequence only.
  qlmpc                  iterated full QP: re-solve the frozen-schedule
                         problem and re-extract the schedule until the
                         schedule stops moving.
  exact_sqp_oracle       reference method: same cost curvature (Gauss-
                         Newton) but the exact Jacobian of the scheduled
                         dynamics constraint, with an optional l1-merit
                         backtracking line search. Slower and closer to a
                         true NLP solution; used as the comparison anchor.

A single increment step taken from a zero iterate reproduces the direct
frozen-schedule QP solution, so each SQP controller degenerates to plain
LPV-MPC when the schedule is held fixed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import qp as qpmod
from .horizon import (MpcConfig, build_condensed, build_noncondensed, cost_offset,
                      dynamics_constraints, extract_schedule,
                      extract_schedule_condensed, join_decision, rollout_states,
                      split_decision)
from .lpv import AffineLpvModel
from .qp import QpProblem, solve_qp

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"
QP_INFEASIBLE = "qp_infeasible"
DIVERGED = "diverged"

_STATUS_SEVERITY = {CONVERGED: 0, MAX_ITERATIONS: 1, QP_INFEASIBLE: 2, DIVERGED: 3}


def worst_status(statuses) -> str:
    worst = CONVERGED
    for s in statuses:
        if _STATUS_SEVERITY.get(s, 3) > _STATUS_SEVERITY[worst]:
            worst = s
    return worst


@dataclass
class SqpSettings:
    """Iteration controls shared by all controllers.

    step_tol stops the SQP forms on the sup norm of the decision increment;
    schedule_tol stops qlmpc on the sup norm of the schedule change.
    init_mode 'zero' starts every solve from a zero decision; 'warm_shift'
    shifts the previous solution one stage. line_search applies to the
    exact-Jacobian oracle only. soft_constraints retries an infeasible QP
    with quadratically penalized slack on the state rows.
    """

    step_tol: float = 1e-6
    schedule_tol: float = 1e-6
    max_iterations: int = 30
    init_mode: str = "zero"
    line_search: str = "off"
    merit_penalty: float = 100.0
    divergence_bound: float = 1e6
    soft_constraints: bool = False
    soft_penalty: float = 1e4
    clamp_schedule: bool = False
    kkt_tol: float = 1e-8

    def validate(self):
        if self.init_mode not in ("zero", "warm_shift"):
            raise ValueError(f"unknown init_mode '{self.init_mode}'")
        if self.line_search not in ("off", "merit_backtracking"):
            raise ValueError(f"unknown line_search '{self.line_search}'")
        if self.step_tol <= 0 or self.schedule_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass
class SqpResult:
    """Outcome of one MPC solve.

    step_norms holds one entry per iteration: the decision-increment sup
    norm for the SQP controllers and the oracle, the schedule-change sup
    norm for qlmpc (whose convergence test lives on the schedule).
    predicted_cost is the full frozen-schedule horizon cost at the final
    iterate. clamp_events counts schedule evaluations that left the
    declared bounds.
    """

    u0: np.ndarray
    u_bar: np.ndarray
    x_bar: np.ndarray
    schedule: np.ndarray
    iterations: int
    step_norms: list
    qp_iterations_total: int
    status: str
    predicted_cost: float
    form: str
    clamp_events: int = 0
    z: Optional[np.ndarray] = None


def _soften_state_rows(problem: QpProblem, n_state_rows: int,
                       penalty: float) -> QpProblem:
    """Add nonnegative slack on the trailing state rows, quadratically penalized."""
    if n_state_rows <= 0:
        return problem
    n = problem.n_d
    ns = n_state_rows
    mi = problem.m_in
    H = np.zeros((n + ns, n + ns))
    H[:n, :n] = problem.H
    H[n:, n:] = 2.0 * penalty * np.eye(ns)
    f = np.concatenate([problem.f, np.zeros(ns)])
    A_in = np.zeros((mi + ns, n + ns))
    A_in[:mi, :n] = problem.A_in
    A_in[mi - ns:mi, n:] = -np.eye(ns)
    A_in[mi:, n:] = -np.eye(ns)
    b_in = np.concatenate([problem.b_in, np.zeros(ns)])
    A_eq = None
    b_eq = None
    if problem.m_eq:
        A_eq = np.hstack([problem.A_eq, np.zeros((problem.m_eq, ns))])
        b_eq = problem.b_eq
    return QpProblem(H=H, f=f, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in)


def _solve_subproblem(problem: QpProblem, settings: SqpSettings,
                      n_state_rows: int, warm_start=None):
    sol = solve_qp(problem, warm_start, kkt_tol=settings.kkt_tol)
    if sol.status == qpmod.INFEASIBLE and settings.soft_constraints:
        soft = _soften_state_rows(problem, n_state_rows, settings.soft_penalty)
        soft_sol = solve_qp(soft, kkt_tol=settings.kkt_tol)
        if soft_sol.status == qpmod.OPTIMAL:
            soft_sol.x = soft_sol.x[:problem.n_d]
            return soft_sol
    return sol


def _count_clamp(model: AffineLpvModel, schedule: np.ndarray) -> int:
    if model.p_min is None or model.p_max is None:
        return 0
    low = schedule < model.p_min - 1e-12
    high = schedule > model.p_max + 1e-12
    return int(np.sum(np.any(low | high, axis=1)))


def _apply_clamp(model: AffineLpvModel, schedule: np.ndarray,
                 settings: SqpSettings) -> np.ndarray:
    if not settings.clamp_schedule or model.p_min is None:
        return schedule
    return np.clip(schedule, model.p_min, model.p_max)


def _condensed_init(model: AffineLpvModel, config: MpcConfig, x0, settings,
                    warm: Optional[tuple]):
    N, m = config.N, config.m
    if settings.init_mode == "warm_shift" and warm is not None:
        u_prev, p_prev = warm
        u_bar = np.vstack([u_prev[1:], u_prev[-1:]])
        schedule = np.vstack([p_prev[1:], p_prev[-1:]])
        return u_bar, schedule
    u_bar = np.zeros((N, m))
    p0 = model.schedule(np.asarray(x0, dtype=float), u_bar[0])
    return u_bar, np.tile(p0, (N, 1))


def _noncondensed_init(model: AffineLpvModel, config: MpcConfig, x0, settings,
                       warm: Optional[tuple]):
    N, n, m = config.N, config.n, config.m
    if settings.init_mode == "warm_shift" and warm is not None:
        z_prev = warm[0]
        u_prev, x_prev = split_decision(z_prev, N, n, m)
        u_bar = np.vstack([u_prev[1:], u_prev[-1:]])
        x_bar = np.vstack([x_prev[1:], x_prev[-1:]])
        return join_decision(u_bar, x_bar)
    return np.zeros(N * (n + m))


def _seed_schedule(model: AffineLpvModel, config: MpcConfig, x0,
                   z: np.ndarray, init_schedule) -> np.ndarray:
    """Schedule for the first iteration of a stacked-variable method.

    Normally extracted from the iterate itself. Models whose scheduling map
    is singular at the origin (the vehicle's 1/v terms) cannot evaluate the
    zero iterate, so fall back to freezing the schedule at (x0, 0).
    """
    if init_schedule is not None:
        p = np.asarray(init_schedule, dtype=float)
        return p.reshape(config.N, model.n_p)
    try:
        return extract_schedule(model, config, x0, z)
    except ValueError:
        p0 = model.schedule(np.asarray(x0, dtype=float), np.zeros(config.m))
        return np.tile(p0, (config.N, 1))


def _finish_noncondensed(model, config, x0, z, schedule, iterations, step_norms,
                         qp_total, status, clamp_events, form="noncondensed"):
    u_bar, x_bar = split_decision(z, config.N, config.n, config.m)
    problem = build_noncondensed(model, config, x0, schedule)
    cost = problem.objective(z) + cost_offset(model, config, x0, schedule,
                                              "noncondensed")
    return SqpResult(u0=u_bar[0].copy(), u_bar=u_bar, x_bar=x_bar,
                     schedule=schedule, iterations=iterations,
                     step_norms=step_norms, qp_iterations_total=qp_total,
                     status=status, predicted_cost=cost, form=form,
                     clamp_events=clamp_events, z=z.copy())


def lpv_sqp_noncondensed(model: AffineLpvModel, config: MpcConfig, x0,
                         settings: SqpSettings = None,
                         warm: Optional[tuple] = None,
                         init_schedule: Optional[np.ndarray] = None) -> SqpResult:
    """Inexact SQP on the stacked variable with frozen-schedule Jacobians.

    init_schedule pins the first iteration's schedule; with a zero start
    this makes the first increment reproduce the direct frozen-schedule QP.
    """
    settings = settings or SqpSettings()
    settings.validate()
    config.validate()
    x0 = np.asarray(x0, dtype=float)
    z = _noncondensed_init(model, config, x0, settings, warm)
    schedule = _seed_schedule(model, config, x0, z, init_schedule)
    clamp_events = _count_clamp(model, schedule)
    schedule = _apply_clamp(model, schedule, settings)

    step_norms: list = []
    qp_total = 0
    status = MAX_ITERATIONS
    prev_active = None
    rows_x = (config.N - 1) * config.G_x.shape[0] + config.G_xf.shape[0]
    for _ in range(settings.max_iterations):
        problem = build_noncondensed(model, config, x0, schedule)
        inc = QpProblem(H=problem.H, f=problem.H @ z + problem.f,
                        A_eq=problem.A_eq, b_eq=problem.b_eq - problem.A_eq @ z,
                        A_in=problem.A_in, b_in=problem.b_in - problem.A_in @ z)
        sol = _solve_subproblem(inc, settings, rows_x, warm_start=(None, prev_active))
        qp_total += sol.iterations
        if sol.status != qpmod.OPTIMAL:
            status = QP_INFEASIBLE
            break
        prev_active = sol.active_set
        z = z + sol.x
        step = float(np.max(np.abs(sol.x), initial=0.0))
        step_norms.append(step)
        try:
            schedule = extract_schedule(model, config, x0, z)
        except ValueError:
            status = DIVERGED
            break
        clamp_events += _count_clamp(model, schedule)
        schedule = _apply_clamp(model, schedule, settings)
        if float(np.max(np.abs(z), initial=0.0)) > settings.divergence_bound:
            status = DIVERGED
            break
        if step <= settings.step_tol:
            status = CONVERGED
            break
    return _finish_noncondensed(model, config, x0, z, schedule, len(step_norms),
                                step_norms, qp_total, status, clamp_events)


def lpv_sqp_condensed(model: AffineLpvModel, config: MpcConfig, x0,
                      settings: SqpSettings = None,
                      warm: Optional[tuple] = None,
                      init_schedule: Optional[np.ndarray] = None) -> SqpResult:
    """Inexact SQP on the input sequence; states eliminated per iteration."""
    settings = settings or SqpSettings()
    settings.validate()
    config.validate()
    x0 = np.asarray(x0, dtype=float)
    u_bar, schedule = _condensed_init(model, config, x0, settings, warm)
    if init_schedule is not None:
        schedule = np.asarray(init_schedule, dtype=float).reshape(config.N,
                                                                  model.n_p)
    clamp_events = _count_clamp(model, schedule)
    schedule = _apply_clamp(model, schedule, settings)

    N, m = config.N, config.m
    step_norms: list = []
    qp_total = 0
    status = MAX_ITERATIONS
    prev_active = None
    rows_x = (config.N - 1) * config.G_x.shape[0] + config.G_xf.shape[0]
    for _ in range(settings.max_iterations):
        problem = build_condensed(model, config, x0, schedule)
        u_flat = u_bar.ravel()
        inc = QpProblem(H=problem.H, f=problem.H @ u_flat + problem.f,
                        A_in=problem.A_in, b_in=problem.b_in - problem.A_in @ u_flat)
        sol = _solve_subproblem(inc, settings, rows_x,
                                warm_start=(np.zeros(N * m), prev_active))
        qp_total += sol.iterations
        if sol.status != qpmod.OPTIMAL:
            status = QP_INFEASIBLE
            break
        prev_active = sol.active_set
        u_bar = u_bar + sol.x.reshape(N, m)
        step = float(np.max(np.abs(sol.x), initial=0.0))
        step_norms.append(step)
        try:
            schedule_new = extract_schedule_condensed(model, config, x0, u_bar,
                                                      schedule)
        except ValueError:
            status = DIVERGED
            break
        clamp_events += _count_clamp(model, schedule_new)
        schedule = _apply_clamp(model, schedule_new, settings)
        if float(np.max(np.abs(u_bar), initial=0.0)) > settings.divergence_bound:
            status = DIVERGED
            break
        if step <= settings.step_tol:
            status = CONVERGED
            break
    x_bar = rollout_states(model, x0, u_bar, schedule)
    problem = build_condensed(model, config, x0, schedule)
    cost = problem.objective(u_bar.ravel()) + cost_offset(model, config, x0,
                                                          schedule, "condensed")
    return SqpResult(u0=u_bar[0].copy(), u_bar=u_bar.copy(), x_bar=x_bar,
                     schedule=schedule, iterations=len(step_norms),
                     step_norms=step_norms, qp_iterations_total=qp_total,
                     status=status, predicted_cost=cost, form="condensed",
                     clamp_events=clamp_events)


def qlmpc(model: AffineLpvModel, config: MpcConfig, x0,
          settings: SqpSettings = None, warm: Optional[tuple] = None,
          init_schedule: Optional[np.ndarray] = None) -> SqpResult:
    """Iterated frozen-schedule MPC: full QP re-solve, then schedule refresh."""
    settings = settings or SqpSettings()
    settings.validate()
    config.validate()
    x0 = np.asarray(x0, dtype=float)
    u_bar, schedule = _condensed_init(model, config, x0, settings, warm)
    if init_schedule is not None:
        schedule = np.asarray(init_schedule, dtype=float).reshape(config.N,
                                                                  model.n_p)
    clamp_events = _count_clamp(model, schedule)
    schedule = _apply_clamp(model, schedule, settings)

    N, m = config.N, config.m
    step_norms: list = []
    qp_total = 0
    status = MAX_ITERATIONS
    prev_active = None
    rows_x = (config.N - 1) * config.G_x.shape[0] + config.G_xf.shape[0]
    for _ in range(settings.max_iterations):
        problem = build_condensed(model, config, x0, schedule)
        sol = _solve_subproblem(problem, settings, rows_x,
                                warm_start=(u_bar.ravel(), prev_active))
        qp_total += sol.iterations
        if sol.status != qpmod.OPTIMAL:
            status = QP_INFEASIBLE
            break
        prev_active = sol.active_set
        u_bar = sol.x.reshape(N, m)
        try:
            schedule_new = extract_schedule_condensed(model, config, x0, u_bar,
                                                      schedule)
        except ValueError:
            status = DIVERGED
            break
        clamp_events += _count_clamp(model, schedule_new)
        schedule_new = _apply_clamp(model, schedule_new, settings)
        if schedule.size:
            change = float(np.max(np.abs(schedule_new - schedule)))
        else:
            change = 0.0
        step_norms.append(change)
        schedule = schedule_new
        if float(np.max(np.abs(u_bar), initial=0.0)) > settings.divergence_bound:
            status = DIVERGED
            break
        if change <= settings.schedule_tol:
            status = CONVERGED
            break
    x_bar = rollout_states(model, x0, u_bar, schedule)
    problem = build_condensed(model, config, x0, schedule)
    cost = problem.objective(u_bar.ravel()) + cost_offset(model, config, x0,
                                                          schedule, "condensed")
    return SqpResult(u0=u_bar[0].copy(), u_bar=u_bar.copy(), x_bar=x_bar,
                     schedule=schedule, iterations=len(step_norms),
                     step_norms=step_norms, qp_iterations_total=qp_total,
                     status=status, predicted_cost=cost, form="condensed",
                     clamp_events=clamp_events)


def constraint_residual(model: AffineLpvModel, config: MpcConfig, x0,
                        z: np.ndarray,
                        schedule: Optional[np.ndarray] = None) -> np.ndarray:
    """Scheduled dynamics residual c(z) = C(p(z)) z - b(p(z)) along an iterate."""
    if schedule is None:
        schedule = extract_schedule(model, config, x0, z)
    C, b = dynamics_constraints(model, config, x0, schedule)
    return C @ z - b


def exact_constraint_jacobian(model: AffineLpvModel, config: MpcConfig, x0,
                              z: np.ndarray,
                              schedule: Optional[np.ndarray] = None) -> np.ndarray:
    """Exact Jacobian of z -> C(p(z)) z - b(p(z)).

    On top of the frozen-schedule matrix this adds, per stage, the
    sensitivity of A(p_k) x_k + B(p_k) u_k to the schedule times the
    scheduling map's own Jacobian. x_0 is a fixed parameter, so stage 0
    contributes through its input block only.
    """
    x0 = np.asarray(x0, dtype=float)
    N, n, m = config.N, config.n, config.m
    u_bar, x_bar = split_decision(z, N, n, m)
    if schedule is None:
        schedule = extract_schedule(model, config, x0, z)
    C, _ = dynamics_constraints(model, config, x0, schedule)
    if model.n_p == 0:
        return C
    J = C.copy()
    A_stack = model._A_stack
    B_stack = model._B_stack
    x_ofs = N * m
    for k in range(N):
        xk = x0 if k == 0 else x_bar[k - 1]
        uk = u_bar[k]
        Jx, Ju = model.scheduling_jacobians(xk, uk)
        W = np.einsum("kij,j->ik", A_stack, xk) + np.einsum("kij,j->ik", B_stack, uk)
        rows = slice(k * n, (k + 1) * n)
        J[rows, k * m:(k + 1) * m] += W @ Ju
        if k >= 1:
            J[rows, x_ofs + (k - 1) * n:x_ofs + k * n] += W @ Jx
    return J


def _merit(model, config, x0, z, M, f, G, h, sigma) -> float:
    try:
        r = constraint_residual(model, config, x0, z)
    except ValueError:
        return float("inf")  # trial point left the scheduling domain
    viol = np.maximum(G @ z - h, 0.0) if h.size else np.zeros(0)
    return float(0.5 * z @ M @ z + f @ z + sigma * (np.sum(np.abs(r)) + np.sum(viol)))


def exact_sqp_oracle(model: AffineLpvModel, config: MpcConfig, x0,
                     settings: SqpSettings = None,
                     warm: Optional[tuple] = None,
                     init_schedule: Optional[np.ndarray] = None) -> SqpResult:
    """Reference solver: Gauss-Newton steps with the exact constraint Jacobian.

    Uses the stacked variable. The subproblem keeps the quadratic cost
    curvature and linearizes the scheduled dynamics exactly at the current
    iterate. With line_search='merit_backtracking' each step is scaled back
    until an l1 merit function decreases.
    """
    settings = settings or SqpSettings()
    settings.validate()
    config.validate()
    x0 = np.asarray(x0, dtype=float)
    z = _noncondensed_init(model, config, x0, settings, warm)
    schedule = _seed_schedule(model, config, x0, z, init_schedule)
    clamp_events = _count_clamp(model, schedule)

    base = build_noncondensed(model, config, x0, schedule)
    M, f = base.H, base.f
    G, h = base.A_in, base.b_in

    step_norms: list = []
    qp_total = 0
    status = MAX_ITERATIONS
    rows_x = (config.N - 1) * config.G_x.shape[0] + config.G_xf.shape[0]
    sigma = settings.merit_penalty
    for _ in range(settings.max_iterations):
        try:
            J = exact_constraint_jacobian(model, config, x0, z, schedule)
        except (ValueError, ZeroDivisionError):
            # scheduling Jacobians undefined here (domain edge, e.g. v = 0):
            # take a frozen-schedule step and let the iteration re-enter
            J = dynamics_constraints(model, config, x0, schedule)[0]
        resid = constraint_residual(model, config, x0, z, schedule)
        inc = QpProblem(H=M, f=M @ z + f, A_eq=J, b_eq=-resid,
                        A_in=G, b_in=h - G @ z)
        sol = _solve_subproblem(inc, settings, rows_x)
        qp_total += sol.iterations
        if sol.status != qpmod.OPTIMAL:
            status = QP_INFEASIBLE
            break
        d = sol.x
        step = float(np.max(np.abs(d), initial=0.0))
        step_norms.append(step)
        alpha = 1.0
        if settings.line_search == "merit_backtracking" and step > settings.step_tol:
            sigma = max(sigma, 2.0 * float(np.max(np.abs(sol.lam), initial=0.0)))
            phi0 = _merit(model, config, x0, z, M, f, G, h, sigma)
            slope = float((M @ z + f) @ d) - sigma * float(np.sum(np.abs(resid)))
            alpha = 1.0
            accepted = False
            while alpha > 2.0 ** -30:
                trial = z + alpha * d
                if _merit(model, config, x0, trial, M, f, G, h, sigma) \
                        <= phi0 + 1e-4 * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                alpha = 1.0  # merit stalled; fall back to the full step
        z = z + alpha * d
        try:
            schedule = extract_schedule(model, config, x0, z)
        except ValueError:
            status = DIVERGED
            break
        clamp_events += _count_clamp(model, schedule)
        if float(np.max(np.abs(z), initial=0.0)) > settings.divergence_bound:
            status = DIVERGED
            break
        if step <= settings.step_tol:
            status = CONVERGED
            break
    return _finish_noncondensed(model, config, x0, z, schedule, len(step_norms),
                                step_norms, qp_total, status, clamp_events,
                                form="oracle")


def fixed_point_residual(model: AffineLpvModel, config: MpcConfig, x0,
                         decision: np.ndarray, form: str = "condensed",
                         schedule: Optional[np.ndarray] = None) -> float:
    """Distance between a decision and the frozen-schedule QP solution at
    the schedule that decision itself induces.

    For the condensed form the induced schedule needs a state rollout; when
    no schedule hint is given it is found by iterating the extraction to its
    own fixed point from the frozen-at-x0 schedule.
    """
    x0 = np.asarray(x0, dtype=float)
    if form == "noncondensed":
        z = np.asarray(decision, dtype=float).ravel()
        induced = extract_schedule(model, config, x0, z)
        problem = build_noncondensed(model, config, x0, induced)
        sol = solve_qp(problem)
        if sol.status != qpmod.OPTIMAL:
            return float("inf")
        return float(np.max(np.abs(z - sol.x)))
    if form == "condensed":
        u_bar = np.asarray(decision, dtype=float).reshape(config.N, config.m)
        if schedule is None:
            p = np.tile(model.schedule(x0, u_bar[0]), (config.N, 1))
        else:
            p = np.asarray(schedule, dtype=float).reshape(config.N, model.n_p)
        for _ in range(100):
            p_new = extract_schedule_condensed(model, config, x0, u_bar, p)
            if p.size == 0 or np.max(np.abs(p_new - p)) <= 1e-13:
                p = p_new
                break
            p = p_new
        problem = build_condensed(model, config, x0, p)
        sol = solve_qp(problem)
        if sol.status != qpmod.OPTIMAL:
            return float("inf")
        return float(np.max(np.abs(u_bar.ravel() - sol.x)))
    raise ValueError(f"unknown form '{form}'")


_SOLVERS = {
    "lpv-sqp": (lpv_sqp_condensed, "condensed"),
    "lpv-sqp-noncond": (lpv_sqp_noncondensed, "noncondensed"),
    "qlmpc": (qlmpc, "condensed"),
    "oracle": (exact_sqp_oracle, "noncondensed"),
}

CONTROLLER_NAMES = tuple(_SOLVERS)


class MpcController:
    """One controller instance: owns its settings and warm-start memory.

    Not thread safe across concurrent solve calls; create one instance per
    closed loop.
    """

    def __init__(self, name: str, model: AffineLpvModel, config: MpcConfig,
                 settings: SqpSettings = None):
        if name not in _SOLVERS:
            raise ValueError(f"unknown controller '{name}'; "
                             f"choose from {sorted(_SOLVERS)}")
        self.name = name
        self.model = model
        self.config = config
        self.settings = settings or SqpSettings()
        self._solver, self.form = _SOLVERS[name]
        self._memory = None

    def reset(self):
        self._memory = None

    def solve(self, x0, reference=None) -> SqpResult:
        config = self.config if reference is None \
            else self.config.with_reference(reference)
        result = self._solver(self.model, config, x0, self.settings,
                              warm=self._memory)
        if self.settings.init_mode == "warm_shift":
            if result.form == "condensed":
                self._memory = (result.u_bar.copy(), result.schedule.copy())
            else:
                self._memory = (result.z.copy(), result.schedule.copy())
        return result


def make_controller(name: str, model: AffineLpvModel, config: MpcConfig,
                    settings: SqpSettings = None) -> MpcController:
    return MpcController(name, model, config, settings)
