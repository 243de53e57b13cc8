"""Invariant battery behind the `selftest` CLI verb.

Each check exercises one structural invariant of the stack with small
problem sizes, prints one PASS/FAIL line, and the battery as a whole
returns success only if every check passed. The point is a fast smoke
test of an installation, not a replacement for the pytest suite.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import Callable, List, Tuple

import numpy as np

from .benchmarks import get_scenario
from .controllers import SqpSettings, lpv_sqp_condensed, make_controller
from .horizon import build_condensed, build_noncondensed, cost_offset, split_decision
from .lpv import embedding_exactness
from .qp import QpProblem, enumerate_qp_oracle, solve_qp
from .reporting import read_run_csv, summary_from_records, write_run_csv
from .schemas import RunSpec
from .experiments import execute_run
from .sim import run_closed_loop

Check = Tuple[str, Callable[[], Tuple[bool, str]]]


def _seed_schedule(scenario) -> np.ndarray:
    p0 = scenario.model.schedule(scenario.x0, np.zeros(scenario.config.m))
    return np.tile(p0, (scenario.config.N, 1))


def _check_embeddings() -> Tuple[bool, str]:
    worst_name, worst = "", 0.0
    cases = [
        ("vanderpol/euler", get_scenario("vanderpol", embedding="euler_exact")),
        ("vanderpol/rk4", get_scenario("vanderpol", embedding="rk4_exact")),
        ("unicycle", get_scenario("unicycle")),
        ("bicycle", get_scenario("bicycle")),
    ]
    for name, sc in cases:
        err = embedding_exactness(sc.model, sc.plant, sc.x_low, sc.x_high,
                                  sc.u_low, sc.u_high, n_samples=2000, seed=0)
        if err > worst:
            worst_name, worst = name, err
    return worst <= 1e-10, f"worst embedding error {worst:.2e} ({worst_name})"


def _random_qp(rng: np.random.Generator) -> QpProblem:
    n = int(rng.integers(1, 6))
    m_in = int(rng.integers(0, 8))
    L = rng.standard_normal((n, n))
    H = L @ L.T + (0.1 + rng.random()) * np.eye(n)
    f = rng.standard_normal(n)
    A_in = rng.standard_normal((m_in, n)) if m_in else None
    b_in = rng.standard_normal(m_in) + 1.0 if m_in else None
    return QpProblem(H=H, f=f, A_in=A_in, b_in=b_in)


def _check_qp_against_enumeration() -> Tuple[bool, str]:
    rng = np.random.default_rng(7)
    worst = 0.0
    solved = infeasible = 0
    for _ in range(50):
        prob = _random_qp(rng)
        sol = solve_qp(prob)
        oracle = enumerate_qp_oracle(prob, kkt_tol=1e-8, feas_tol=1e-8)
        if oracle.status == "infeasible":
            if sol.status != "infeasible":
                return False, "solver disagreed with oracle on feasibility"
            infeasible += 1
            continue
        if sol.status != "optimal":
            return False, f"solver returned {sol.status} on a feasible problem"
        gap = abs(prob.objective(sol.x) - prob.objective(oracle.x))
        worst = max(worst, gap)
        solved += 1
    ok = worst <= 1e-8
    return ok, (f"{solved} optimal matched (worst objective gap {worst:.2e}), "
                f"{infeasible} infeasible certified")


def _check_cross_form() -> Tuple[bool, str]:
    worst_u, worst_c = 0.0, 0.0
    for name in ("vanderpol", "unicycle", "bicycle"):
        sc = get_scenario(name)
        schedule = _seed_schedule(sc)
        cond = solve_qp(build_condensed(sc.model, sc.config, sc.x0, schedule))
        nonc = solve_qp(build_noncondensed(sc.model, sc.config, sc.x0, schedule))
        if cond.status != "optimal" or nonc.status != "optimal":
            return False, f"{name}: direct QPs not optimal"
        u_nc, _ = split_decision(nonc.x, sc.config.N, sc.config.n, sc.config.m)
        du = float(np.max(np.abs(cond.x.reshape(sc.config.N, sc.config.m) - u_nc)))
        prob_c = build_condensed(sc.model, sc.config, sc.x0, schedule)
        prob_n = build_noncondensed(sc.model, sc.config, sc.x0, schedule)
        cost_c = prob_c.objective(cond.x) + cost_offset(
            sc.model, sc.config, sc.x0, schedule, "condensed")
        cost_n = prob_n.objective(nonc.x) + cost_offset(
            sc.model, sc.config, sc.x0, schedule, "noncondensed")
        dc = abs(cost_c - cost_n)
        worst_u, worst_c = max(worst_u, du), max(worst_c, dc)
    ok = worst_u <= 1e-8 and worst_c <= 1e-8
    return ok, f"worst input gap {worst_u:.2e}, worst cost gap {worst_c:.2e}"


def _check_recovery_identity() -> Tuple[bool, str]:
    worst = 0.0
    for name in ("vanderpol", "unicycle", "bicycle"):
        sc = get_scenario(name)
        schedule = _seed_schedule(sc)
        direct = solve_qp(build_condensed(sc.model, sc.config, sc.x0, schedule))
        settings = SqpSettings(max_iterations=1)
        res = lpv_sqp_condensed(sc.model, sc.config, sc.x0, settings,
                                init_schedule=schedule)
        gap = float(np.max(np.abs(res.u_bar.ravel() - direct.x)))
        worst = max(worst, gap)
    return worst <= 1e-10, f"worst gap one-increment vs direct QP {worst:.2e}"


def _check_determinism() -> Tuple[bool, str]:
    sc = get_scenario("unicycle", steps=5)
    logs = []
    for _ in range(2):
        ctrl = make_controller("lpv-sqp", sc.model, sc.config, SqpSettings())
        logs.append(run_closed_loop(sc.plant, ctrl, sc.x0, sc.steps))
    same = (np.array_equal(logs[0].states, logs[1].states)
            and np.array_equal(logs[0].inputs, logs[1].inputs))
    return same, "two runs bit-identical" if same else "trajectories differ"


def _check_csv_round_trip() -> Tuple[bool, str]:
    result = execute_run(RunSpec(benchmark="vanderpol", steps=5))
    with tempfile.TemporaryDirectory() as td:
        path = Path(td) / "run.csv"
        write_run_csv(path, result)
        records, n, m = read_run_csv(path)
    if records != result.records:
        return False, "records changed across the CSV round trip"
    recomputed = summary_from_records(records)
    gap = max(
        abs(recomputed.total_cost - result.summary.total_cost),
        abs(recomputed.tau_mean - result.summary.tau_mean),
        abs(recomputed.mean_sqp_iterations - result.summary.mean_sqp_iterations),
    )
    ok = gap <= 1e-12 and recomputed.worst_status == result.summary.worst_status
    return ok, f"round trip exact, summary recompute gap {gap:.2e}"


def _check_qp_known_solution() -> Tuple[bool, str]:
    # minimize d^2 - 2d subject to d <= 0.5: optimum d = 0.5, multiplier 1
    prob = QpProblem(H=np.array([[2.0]]), f=np.array([-2.0]),
                     A_in=np.array([[1.0]]), b_in=np.array([0.5]))
    sol = solve_qp(prob)
    ok = (sol.status == "optimal" and abs(sol.x[0] - 0.5) <= 1e-10
          and abs(sol.mu[0] - 1.0) <= 1e-10)
    return ok, f"clip problem: d={sol.x[0]:.6f}, mu={sol.mu[0]:.6f}"


CHECKS: List[Check] = [
    ("qp_known_solution", _check_qp_known_solution),
    ("qp_vs_enumeration", _check_qp_against_enumeration),
    ("embedding_exactness", _check_embeddings),
    ("cross_form_agreement", _check_cross_form),
    ("recovery_identity", _check_recovery_identity),
    ("closed_loop_determinism", _check_determinism),
    ("csv_round_trip", _check_csv_round_trip),
]


def run_selftest(write=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failure, not an abort
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        all_ok &= ok
        write(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    write(f"selftest {'passed' if all_ok else 'FAILED'}")
    return all_ok
