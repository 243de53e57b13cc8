"""Release gate: eleven checks, one printed scoreboard line each.

Every check writes "[criterion NN] PASS/FAIL label: detail" through the
terminal reporter before asserting, so the scoreboard stays visible under
pytest's output capture. Tolerances are pinned literals; a red line here
is a release blocker, not a flaky test to rerun.
"""

import sys
import time

import numpy as np
import pytest

from lpvmpc.benchmarks import get_scenario, lane_change_reference
from lpvmpc.controllers import (
    SqpSettings,
    constraint_residual,
    exact_constraint_jacobian,
    fixed_point_residual,
    lpv_sqp_condensed,
    lpv_sqp_noncondensed,
    make_controller,
)
from lpvmpc.horizon import MpcConfig, build_condensed, build_noncondensed
from lpvmpc.lpv import AffineLpvModel, embedding_exactness
from lpvmpc.qp import QpProblem, enumerate_qp_oracle, kkt_residuals, solve_qp
from lpvmpc.sim import run_closed_loop


_TERMINAL = {}


@pytest.fixture(scope="module", autouse=True)
def _grab_terminal_reporter(request):
    _TERMINAL["tr"] = request.config.pluginmanager.get_plugin("terminalreporter")
    yield


def report(num, label, ok, detail):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} {label}: {detail}"
    tr = _TERMINAL.get("tr")
    if tr is not None:
        # the reporter writes to the real terminal, bypassing fd capture
        tr.write_line("")
        tr.write_line(line)
    else:
        print(line, file=sys.__stdout__, flush=True)
    return line


# ---------------------------------------------------------------- fixtures

@pytest.fixture(scope="module")
def vdp_runs():
    """LPVMPC-SQP and oracle closed loops for both oscillator embeddings."""
    out = {}
    for emb in ("rk4_exact", "euler_exact"):
        sc = get_scenario("vanderpol", embedding=emb)
        logs = {}
        t0 = time.perf_counter()
        for name in ("lpv-sqp", "oracle"):
            ctrl = make_controller(name, sc.model, sc.config)
            logs[name] = run_closed_loop(sc.plant, ctrl, sc.x0, sc.steps)
        out[emb] = (sc, logs, time.perf_counter() - t0)
    return out


@pytest.fixture(scope="module")
def unicycle_runs():
    """All three controllers on the parking scenario; per-step results kept
    for the two iterative schemes so their fixed points can be re-checked."""
    sc = get_scenario("unicycle")
    logs = {}
    elapsed = {}
    for name in ("lpv-sqp", "qlmpc", "oracle"):
        ctrl = make_controller(name, sc.model, sc.config)
        t0 = time.perf_counter()
        logs[name] = run_closed_loop(sc.plant, ctrl, sc.x0, sc.steps,
                                     keep_results=(name != "oracle"))
        elapsed[name] = time.perf_counter() - t0
    return sc, logs, elapsed


@pytest.fixture(scope="module")
def bicycle_run():
    sc = get_scenario("bicycle")
    ctrl = make_controller("lpv-sqp", sc.model, sc.config)
    t0 = time.perf_counter()
    log = run_closed_loop(sc.plant, ctrl, sc.x0, sc.steps,
                          reference=sc.reference)
    return sc, log, time.perf_counter() - t0


# ------------------------------------------------- 1: embedding exactness

def test_01_embedding_exactness():
    pairs = [
        ("vanderpol/euler", get_scenario("vanderpol", embedding="euler_exact")),
        ("vanderpol/rk4", get_scenario("vanderpol", embedding="rk4_exact")),
        ("unicycle", get_scenario("unicycle")),
        ("bicycle", get_scenario("bicycle")),
    ]
    t0 = time.perf_counter()
    worst = {}
    for label, sc in pairs:
        worst[label] = embedding_exactness(
            sc.model, sc.plant, sc.x_low, sc.x_high, sc.u_low, sc.u_high,
            n_samples=10_000, seed=0)
    elapsed = time.perf_counter() - t0
    peak = max(worst.values())
    ok = peak <= 1e-10 and elapsed < 5.0
    line = report(1, "embedding exactness", ok,
                  f"worst {peak:.2e} over 4 pairs x 1e4 samples, "
                  f"{elapsed:.2f}s")
    assert ok, line


# --------------------------------------- 2: QP solver vs enumeration oracle

def _random_qp(rng):
    # mirrors the unit-test distribution: SPD Hessian, ~15% infeasible
    n = int(rng.integers(1, 7))
    m_in = int(rng.integers(0, 9))
    m_eq = int(rng.integers(0, min(2, max(0, n - 1)) + 1))
    L = rng.standard_normal((n, n))
    H = L @ L.T + (0.1 + rng.random()) * np.eye(n)
    f = rng.standard_normal(n)
    A_eq = rng.standard_normal((m_eq, n)) if m_eq else None
    b_eq = rng.standard_normal(m_eq) if m_eq else None
    A_in = rng.standard_normal((m_in, n)) if m_in else None
    b_in = rng.standard_normal(m_in) + 1.0 if m_in else None
    return QpProblem(H=H, f=f, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in)


def _objective(problem, x):
    return float(0.5 * x @ problem.H @ x + problem.f @ x)


def test_02_qp_oracle_equivalence():
    rng = np.random.default_rng(2025)
    t0 = time.perf_counter()
    counts = {"optimal": 0, "infeasible": 0}
    worst_gap = 0.0
    worst_kkt = 0.0
    for _ in range(500):
        prob = _random_qp(rng)
        sol = solve_qp(prob)
        ref = enumerate_qp_oracle(prob)
        assert sol.status == ref.status, "status disagrees with enumeration"
        counts[sol.status] = counts.get(sol.status, 0) + 1
        if sol.status == "optimal":
            gap = abs(_objective(prob, sol.x) - _objective(prob, ref.x))
            worst_gap = max(worst_gap, gap)
            worst_kkt = max(worst_kkt, kkt_residuals(prob, sol).worst)
    elapsed = time.perf_counter() - t0
    ok = (worst_gap <= 1e-8 and worst_kkt <= 1e-8 and elapsed < 10.0
          and counts["optimal"] >= 300)
    line = report(2, "QP vs exhaustive enumeration", ok,
                  f"{counts['optimal']} optimal / "
                  f"{counts.get('infeasible', 0)} infeasible, "
                  f"obj gap {worst_gap:.2e}, KKT {worst_kkt:.2e}, "
                  f"{elapsed:.2f}s")
    assert ok, line


# ------------------------------------------------ 3: cross-form equivalence

def _random_schedule_model(rng):
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, 3))
    n_p = int(rng.integers(1, 3))
    A0 = np.eye(n) + 0.05 * rng.standard_normal((n, n))
    B0 = 0.5 * rng.standard_normal((n, m))
    A_terms = [0.03 * rng.standard_normal((n, n)) for _ in range(n_p)]
    B_terms = [0.03 * rng.standard_normal((n, m)) for _ in range(n_p)]
    W = rng.standard_normal((n_p, n))
    V = 0.3 * rng.standard_normal((n_p, m))

    def rho(x, u, W=W, V=V):
        return np.tanh(W @ x + V @ u)

    return AffineLpvModel(A0=A0, B0=B0, A_terms=A_terms, B_terms=B_terms,
                          rho=rho, p_min=-np.ones(n_p), p_max=np.ones(n_p))


def test_03_condensed_matches_noncondensed():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        model = _random_schedule_model(rng)
        n, m, n_p = model.n, model.m, model.n_p
        N = int(rng.integers(3, 7))
        config = MpcConfig(
            N=N, Q=np.eye(n), R=np.eye(m),
            G_x=np.vstack([np.eye(n), -np.eye(n)]), h_x=10.0 * np.ones(2 * n),
            G_u=np.vstack([np.eye(m), -np.eye(m)]), h_u=5.0 * np.ones(2 * m))
        x0 = 0.5 * rng.standard_normal(n)
        schedule = rng.uniform(-1.0, 1.0, (N, n_p))
        cond = solve_qp(build_condensed(model, config, x0, schedule))
        nonc = solve_qp(build_noncondensed(model, config, x0, schedule))
        assert cond.status == "optimal" and nonc.status == "optimal"
        worst = max(worst, float(np.max(np.abs(cond.x - nonc.x[:N * m]))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10.0
    line = report(3, "condensed vs noncondensed inputs", ok,
                  f"worst gap {worst:.2e} over 100 instances, {elapsed:.2f}s")
    assert ok, line


# ----------------------------------------------------- 4: recovery identity

def test_04_one_increment_recovers_direct_qp():
    worst = 0.0
    for benchmark in ("vanderpol", "unicycle", "bicycle"):
        sc = get_scenario(benchmark)
        p0 = sc.model.schedule(sc.x0, np.zeros(sc.model.m))
        schedule = np.tile(p0, (sc.config.N, 1))
        direct = solve_qp(build_condensed(sc.model, sc.config, sc.x0, schedule))
        assert direct.status == "optimal"
        for solver in (lpv_sqp_condensed, lpv_sqp_noncondensed):
            one = solver(sc.model, sc.config, sc.x0,
                         SqpSettings(max_iterations=1),
                         init_schedule=schedule)
            worst = max(worst,
                        float(np.max(np.abs(one.u_bar.ravel() - direct.x))))
    ok = worst <= 1e-8
    line = report(4, "single increment recovers frozen-schedule QP", ok,
                  f"worst gap {worst:.2e} over 3 models x 2 forms")
    assert ok, line


# ------------------------------------------------ 5: fixed-point coincidence

def test_05_closed_loop_fixed_points(unicycle_runs):
    sc, logs, _ = unicycle_runs
    worst = {}
    for name in ("lpv-sqp", "qlmpc"):
        log = logs[name]
        r_max = 0.0
        checked = 0
        for k, res in enumerate(log.results):
            if log.statuses[k] != "converged":
                continue
            r = fixed_point_residual(sc.model, sc.config, log.states[k],
                                     res.u_bar, form="condensed",
                                     schedule=res.schedule)
            r_max = max(r_max, r)
            checked += 1
        assert checked > 0
        worst[name] = r_max
    ok = all(v <= 1e-5 for v in worst.values())
    line = report(5, "both schemes sit on QP fixed points", ok,
                  f"worst residual lpv-sqp {worst['lpv-sqp']:.2e}, "
                  f"qlmpc {worst['qlmpc']:.2e}")
    assert ok, line


# ------------------------------------------------- 6: exact Jacobian check

def _jacobian_points(rng, sc, count):
    """Random (x0, z) pairs; car states keep the speed well away from the
    scheduling singularity at v = 0."""
    N, n, m = sc.config.N, sc.model.n, sc.model.m
    for _ in range(count):
        if sc.name.startswith("bicycle"):
            t = float(rng.uniform(0.0, 15.0))
            base = lane_change_reference(t)
            x0 = base + 0.2 * rng.standard_normal(n)
            x0[2] = rng.uniform(2.0, 20.0)
            x_blocks = (np.tile(base, N)
                        + 0.2 * rng.standard_normal(N * n)).reshape(N, n)
            x_blocks[:, 2] = rng.uniform(2.0, 20.0, N)
            u = 0.3 * rng.standard_normal(N * m)
            z = np.concatenate([u, x_blocks.ravel()])
        else:
            x0 = rng.standard_normal(n)
            z = rng.standard_normal(N * (n + m))
        yield x0, z


def test_06_constraint_jacobian_vs_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-6
    worst = {}
    for benchmark in ("vanderpol", "unicycle", "bicycle"):
        # short horizon: same model and Jacobian assembly, cheaper FD sweep
        sc = get_scenario(benchmark, horizon=5)
        gap = 0.0
        for x0, z in _jacobian_points(rng, sc, 100):
            J = exact_constraint_jacobian(sc.model, sc.config, x0, z)
            J_fd = np.empty_like(J)
            for j in range(z.size):
                e = np.zeros(z.size)
                e[j] = h
                cp = constraint_residual(sc.model, sc.config, x0, z + e)
                cm = constraint_residual(sc.model, sc.config, x0, z - e)
                J_fd[:, j] = (cp - cm) / (2.0 * h)
            gap = max(gap, float(np.max(np.abs(J - J_fd))))
        worst[benchmark] = gap
    peak = max(worst.values())
    ok = peak <= 1e-5
    line = report(6, "oracle Jacobian vs central differences", ok,
                  "worst " + ", ".join(f"{k} {v:.2e}" for k, v in worst.items()))
    assert ok, line


# ------------------------------------------- 7: oscillator closed-loop run

def test_07_vanderpol_closed_loop(vdp_runs):
    sc, logs, elapsed = vdp_runs["rk4_exact"]
    sqp, oracle = logs["lpv-sqp"], logs["oracle"]

    vel_floor = min(float(np.min(log.states[:, 1])) for log in (sqp, oracle))
    input_peak = max(float(np.max(np.abs(log.inputs))) for log in (sqp, oracle))
    norms = np.max(np.abs(sqp.states), axis=1)
    reached = int(np.argmax(norms <= 0.05)) if np.any(norms <= 0.05) else -1
    c_sqp = float(np.sum(sqp.stage_costs))
    c_oracle = float(np.sum(oracle.stage_costs))
    rel_gap = abs(c_sqp - c_oracle) / c_oracle

    ok = (vel_floor >= -0.25 - 1e-6
          and input_peak <= 1.0 + 1e-9
          and 0 <= reached <= 40
          # equal optima up to solver tolerance; resolve ordering at 1e-8
          and c_oracle <= c_sqp + 1e-8
          and rel_gap <= 0.10
          and elapsed < 30.0)
    line = report(7, "oscillator regulation", ok,
                  f"min x2 {vel_floor:+.4f}, max|u| {input_peak:.6f}, "
                  f"reached 0.05 at step {reached}, cost sqp {c_sqp:.9f} "
                  f"vs oracle {c_oracle:.9f} (gap {rel_gap:.2e}), "
                  f"{elapsed:.2f}s")
    assert ok, line


# ------------------------------------------- 8: parking controller shootout

def test_08_unicycle_three_controllers(unicycle_runs):
    sc, logs, elapsed = unicycle_runs
    conv = {name: float(np.mean([s == "converged" for s in log.statuses]))
            for name, log in logs.items()}
    pos = {name: float(np.linalg.norm(log.final_state[:2]))
           for name, log in logs.items()}
    tau = {name: float(np.mean(log.solve_times)) for name, log in logs.items()}
    ratio_oracle = tau["oracle"] / tau["lpv-sqp"]
    ratio_qlmpc = tau["lpv-sqp"] / tau["qlmpc"]
    total = sum(elapsed.values())

    ok = (all(v >= 0.95 for v in conv.values())
          and pos["lpv-sqp"] <= pos["qlmpc"] + 0.05
          and ratio_oracle >= 5.0
          and 0.3 <= ratio_qlmpc <= 3.0
          and total < 60.0)
    line = report(8, "unicycle controller comparison", ok,
                  f"conv {conv['lpv-sqp']:.2f}/{conv['qlmpc']:.2f}/"
                  f"{conv['oracle']:.2f}, final pos sqp {pos['lpv-sqp']:.4f} "
                  f"vs qlmpc {pos['qlmpc']:.4f}, tau oracle/sqp "
                  f"{ratio_oracle:.1f}, sqp/qlmpc {ratio_qlmpc:.2f}, "
                  f"{total:.1f}s")
    assert ok, line


# --------------------------------------------- 9: iteration-count advantage

def test_09_vanderpol_iteration_economy(vdp_runs):
    ratios = {}
    for emb, (sc, logs, _) in vdp_runs.items():
        mean_sqp = float(np.mean(logs["lpv-sqp"].sqp_iterations))
        mean_oracle = float(np.mean(logs["oracle"].sqp_iterations))
        ratios[emb] = mean_sqp / mean_oracle
    best = min(ratios.values())
    ok = best <= 0.5
    line = report(9, "iteration count vs oracle", ok,
                  f"mean-iteration ratio rk4 {ratios['rk4_exact']:.3f}, "
                  f"euler {ratios['euler_exact']:.3f} (need <= 0.5; the "
                  f"oracle here is a warm Gauss-Newton loop, not a full NLP "
                  f"solver, and needs as few iterations as the increment "
                  f"scheme on this benchmark)")
    assert ok, line


# ------------------------------------------------- 10: lane-change tracking

def test_10_bicycle_lane_change(bicycle_run):
    sc, log, elapsed = bicycle_run
    refs = np.array([sc.reference(t) for t in log.t])
    err = np.linalg.norm(log.states[:, :2] - refs[:, :2], axis=1)
    rms = float(np.sqrt(np.mean(err ** 2)))
    conv = float(np.mean([s == "converged" for s in log.statuses]))

    ok = (rms <= 0.2 and conv >= 0.95 and log.clamp_events == 0
          and elapsed < 120.0)
    line = report(10, "lane-change tracking", ok,
                  f"position rms {rms:.4f} m, converged {conv:.2f}, "
                  f"clamp events {log.clamp_events}, {elapsed:.1f}s")
    assert ok, line


# ------------------------------------------------------- 11: determinism

def test_11_reruns_are_bit_for_bit(vdp_runs, unicycle_runs):
    repeats = []
    sc_v, logs_v, _ = vdp_runs["rk4_exact"]
    repeats.append(("vanderpol", sc_v, logs_v["lpv-sqp"], None))
    sc_u, logs_u, _ = unicycle_runs
    repeats.append(("unicycle", sc_u, logs_u["lpv-sqp"], None))

    ok = True
    for name, sc, first, reference in repeats:
        ctrl = make_controller("lpv-sqp", sc.model, sc.config)
        again = run_closed_loop(sc.plant, ctrl, sc.x0, sc.steps,
                                reference=reference)
        same = (np.array_equal(first.states, again.states)
                and np.array_equal(first.inputs, again.inputs)
                and np.array_equal(first.sqp_iterations, again.sqp_iterations)
                and np.array_equal(first.qp_iterations, again.qp_iterations)
                and list(first.statuses) == list(again.statuses))
        ok = ok and same
    line = report(11, "closed-loop determinism", ok,
                  "states, inputs and iteration counts identical on rerun "
                  "(vanderpol + unicycle)")
    assert ok, line
