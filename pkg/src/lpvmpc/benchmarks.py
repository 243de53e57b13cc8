"""Benchmark scenarios: Van der Pol, unicycle, and single-track vehicle.

Each scenario bundles the continuous-time plant, an exact LPV embedding of
its designated discretization, the horizon configuration with constraint
sets, the initial state, and the default run length. Operating boxes are
declared per scenario so embedding exactness can be sampled.

The Van der Pol model comes in two embeddings: 'euler_exact' (schedule
p = y^2, exact for the explicit Euler map, the default) and 'rk4_exact',
where the full RK4 step polynomial is expanded once with sympy and factored
mechanically into A(p) x + B(p) u with one scheduling component per
monomial of (y, ydot, u). Every RK4-map monomial contains a factor of y,
ydot, or u (the map fixes the origin), so the division rule below is total:
a monomial with an input power goes to the B column, otherwise it is
divided by y when possible, else by ydot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sp

from .horizon import MpcConfig
from .lpv import AffineLpvModel, NonlinearPlant

BENCHMARK_NAMES = ("vanderpol", "unicycle", "bicycle")


@dataclass
class BenchmarkScenario:
    name: str
    plant: NonlinearPlant
    model: AffineLpvModel
    config: MpcConfig
    x0: np.ndarray
    steps: int
    reference: Optional[Callable[[float], np.ndarray]] = None
    embedding: str = ""
    x_low: np.ndarray = None
    x_high: np.ndarray = None
    u_low: np.ndarray = None
    u_high: np.ndarray = None
    description: str = ""

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m


# ---------------------------------------------------------------------------
# Van der Pol oscillator

VDP_TS = 0.5


def _vdp_field(x, u):
    y, yd = x
    return np.array([yd, (1.0 - y * y) * yd - y + u[0]])


def _interval_pow(lo: float, hi: float, e: int):
    if e == 0:
        return 1.0, 1.0
    vals = [lo ** e, hi ** e]
    if lo < 0.0 < hi:
        vals.append(0.0)
    return min(vals), max(vals)


def _interval_mul(a, b):
    prods = [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
    return min(prods), max(prods)


@lru_cache(maxsize=8)
def _vdp_rk4_tables(ts_key: str):
    """Expand the RK4 step of the Van der Pol system and factor it.

    Returns (A0, A_terms, B0, B_terms, exponents) where exponents is an
    (n_p, 3) integer array over (y, ydot, u); scheduling component j is the
    monomial y^e0 * ydot^e1 * u^e2.
    """
    ts = sp.Rational(ts_key)
    y, yd, u = sp.symbols("y yd u")

    def f(state):
        a, b = state
        return (b, (1 - a ** 2) * b - a + u)

    x = (y, yd)
    k1 = f(x)
    x2 = tuple(x[i] + ts / 2 * k1[i] for i in range(2))
    k2 = f(x2)
    x3 = tuple(x[i] + ts / 2 * k2[i] for i in range(2))
    k3 = f(x3)
    x4 = tuple(x[i] + ts * k3[i] for i in range(2))
    k4 = f(x4)
    phi = [sp.expand(x[i] + ts / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]))
           for i in range(2)]

    entries: dict = {}
    monomials: set = set()
    for i in range(2):
        poly = sp.Poly(phi[i], y, yd, u)
        for (ey, ed, eu), coeff in poly.terms():
            if eu >= 1:
                slot, key = ("B", i, 0), (ey, ed, eu - 1)
            elif ey >= 1:
                slot, key = ("A", i, 0), (ey - 1, ed, eu)
            else:
                slot, key = ("A", i, 1), (ey, ed - 1, eu)
            bucket = entries.setdefault(slot, {})
            bucket[key] = bucket.get(key, sp.Integer(0)) + coeff
            if key != (0, 0, 0):
                monomials.add(key)

    mono_list = sorted(monomials)
    index = {mono: j for j, mono in enumerate(mono_list)}
    n_p = len(mono_list)
    A0 = np.zeros((2, 2))
    B0 = np.zeros((2, 1))
    A_terms = [np.zeros((2, 2)) for _ in range(n_p)]
    B_terms = [np.zeros((2, 1)) for _ in range(n_p)]
    for (kind, i, j), bucket in entries.items():
        for key, coeff in bucket.items():
            val = float(coeff)
            if key == (0, 0, 0):
                (A0 if kind == "A" else B0)[i, j] += val
            elif kind == "A":
                A_terms[index[key]][i, j] += val
            else:
                B_terms[index[key]][i, j] += val
    exponents = np.array(mono_list, dtype=int).reshape(n_p, 3)
    return A0, A_terms, B0, B_terms, exponents


def _monomial_values(exponents: np.ndarray, vals: np.ndarray) -> np.ndarray:
    return np.prod(np.power(vals[None, :], exponents), axis=1)


def _monomial_jacobian(exponents: np.ndarray, vals: np.ndarray) -> np.ndarray:
    n_p, nv = exponents.shape
    powers = np.power(vals[None, :], exponents)
    J = np.zeros((n_p, nv))
    for k in range(nv):
        e = exponents[:, k]
        deriv = e * np.power(vals[k], np.maximum(e - 1, 0))
        others = np.prod(np.delete(powers, k, axis=1), axis=1)
        J[:, k] = deriv * others
    return J


def _vdp_euler_model(ts: float) -> AffineLpvModel:
    A0 = np.array([[1.0, ts], [-ts, 1.0 + ts]])
    A1 = np.array([[0.0, 0.0], [0.0, -ts]])
    B0 = np.array([[0.0], [ts]])

    def rho(x, u):
        return np.array([x[0] * x[0]])

    def rho_jac(x, u):
        return np.array([[2.0 * x[0], 0.0]]), np.zeros((1, 1))

    return AffineLpvModel(A0=A0, B0=B0, A_terms=[A1], B_terms=[np.zeros((2, 1))],
                          rho=rho, rho_jacobians=rho_jac,
                          p_min=np.array([0.0]), p_max=np.array([9.0]),
                          name="vanderpol-euler")


def _vdp_rk4_model(ts: float, box) -> AffineLpvModel:
    A0, A_terms, B0, B_terms, exponents = _vdp_rk4_tables(str(sp.Rational(str(ts))))

    def rho(x, u):
        vals = np.array([x[0], x[1], u[0]])
        return _monomial_values(exponents, vals)

    def rho_jac(x, u):
        vals = np.array([x[0], x[1], u[0]])
        J = _monomial_jacobian(exponents, vals)
        return J[:, :2], J[:, 2:3]

    x_low, x_high, u_low, u_high = box
    lows = np.concatenate([x_low, u_low])
    highs = np.concatenate([x_high, u_high])
    p_min = np.zeros(exponents.shape[0])
    p_max = np.zeros(exponents.shape[0])
    for j, expo in enumerate(exponents):
        iv = (1.0, 1.0)
        for v in range(3):
            iv = _interval_mul(iv, _interval_pow(lows[v], highs[v], int(expo[v])))
        p_min[j], p_max[j] = iv
    return AffineLpvModel(A0=A0, B0=B0, A_terms=A_terms, B_terms=B_terms,
                          rho=rho, rho_jacobians=rho_jac,
                          p_min=p_min, p_max=p_max, name="vanderpol-rk4")


def vanderpol_scenario(horizon: int = 10, steps: int = 40,
                       embedding: str = "euler_exact") -> BenchmarkScenario:
    """Constrained regulation of the Van der Pol oscillator from (1, 0).

    Constraints: ydot >= -0.25 on predicted states, |u| <= 1. Weights
    Q = I, R = 0.1 make the regulator input-cheap enough to saturate the
    input bound early in the transient.
    """
    if embedding not in ("euler_exact", "rk4_exact"):
        raise ValueError(f"unknown Van der Pol embedding '{embedding}'")
    x_low = np.array([-3.0, -3.0])
    x_high = np.array([3.0, 3.0])
    u_low = np.array([-1.0])
    u_high = np.array([1.0])
    if embedding == "euler_exact":
        model = _vdp_euler_model(VDP_TS)
        disc = "euler"
    else:
        model = _vdp_rk4_model(VDP_TS, (x_low, x_high, u_low, u_high))
        disc = "rk4"
    plant = NonlinearPlant(f=_vdp_field, n=2, m=1, t_s=VDP_TS,
                           discretization=disc, name="vanderpol")
    config = MpcConfig(N=horizon, Q=np.eye(2), R=np.array([[0.1]]),
                       G_x=np.array([[0.0, -1.0]]), h_x=np.array([0.25]),
                       G_u=np.array([[1.0], [-1.0]]), h_u=np.array([1.0, 1.0]))
    return BenchmarkScenario(name="vanderpol", plant=plant, model=model,
                             config=config, x0=np.array([1.0, 0.0]), steps=steps,
                             embedding=embedding, x_low=x_low, x_high=x_high,
                             u_low=u_low, u_high=u_high,
                             description="oscillator regulation with a velocity "
                                         "floor and input saturation")


# ---------------------------------------------------------------------------
# Unicycle

UNICYCLE_TS = 0.1


def _unicycle_field(x, u):
    s, q, v, phi, w = x
    return np.array([v * math.cos(phi), v * math.sin(phi), u[0], w, u[1]])


def _unicycle_model(ts: float) -> AffineLpvModel:
    A0 = np.eye(5)
    A0[3, 4] = ts
    A_cos = np.zeros((5, 5))
    A_cos[0, 2] = ts
    A_sin = np.zeros((5, 5))
    A_sin[1, 2] = ts
    B0 = np.zeros((5, 2))
    B0[2, 0] = ts
    B0[4, 1] = ts

    def rho(x, u):
        return np.array([math.cos(x[3]), math.sin(x[3])])

    def rho_jac(x, u):
        Jx = np.zeros((2, 5))
        Jx[0, 3] = -math.sin(x[3])
        Jx[1, 3] = math.cos(x[3])
        return Jx, np.zeros((2, 2))

    return AffineLpvModel(A0=A0, B0=B0, A_terms=[A_cos, A_sin],
                          B_terms=[np.zeros((5, 2)), np.zeros((5, 2))],
                          rho=rho, rho_jacobians=rho_jac,
                          p_min=np.array([-1.0, -1.0]),
                          p_max=np.array([1.0, 1.0]), name="unicycle")


def unicycle_scenario(horizon: int = 20, steps: int = 100) -> BenchmarkScenario:
    """Drive the unicycle from (1, 2) heading pi back to the origin.

    The heading nonlinearity is carried entirely by p = (cos phi, sin phi);
    the embedding is exact for the Euler map. Boxes are generous: they keep
    the QP compact without shaping the solution.
    """
    model = _unicycle_model(UNICYCLE_TS)
    plant = NonlinearPlant(f=_unicycle_field, n=5, m=2, t_s=UNICYCLE_TS,
                           discretization="euler", name="unicycle")
    G_x = np.vstack([np.eye(5), -np.eye(5)])
    h_x = 100.0 * np.ones(10)
    G_u = np.vstack([np.eye(2), -np.eye(2)])
    h_u = 10.0 * np.ones(4)
    config = MpcConfig(N=horizon, Q=np.diag([1.0, 1.0, 0.1, 1.0, 0.1]),
                       R=np.eye(2), G_x=G_x, h_x=h_x, G_u=G_u, h_u=h_u)
    return BenchmarkScenario(name="unicycle", plant=plant, model=model,
                             config=config,
                             x0=np.array([1.0, 2.0, 0.0, math.pi, 0.0]),
                             steps=steps, embedding="euler_exact",
                             x_low=np.array([-5.0, -5.0, -3.0, -math.pi, -2.0]),
                             x_high=np.array([5.0, 5.0, 3.0, math.pi, 2.0]),
                             u_low=np.array([-10.0, -10.0]),
                             u_high=np.array([10.0, 10.0]),
                             description="point stabilization of a second-order "
                                         "unicycle")


# ---------------------------------------------------------------------------
# Single-track (bicycle) vehicle

BICYCLE_TS = 0.05
BICYCLE_PARAMS = {
    "m": 1500.0,   # mass, kg
    "Iz": 3000.0,  # yaw inertia, kg m^2
    "lf": 1.2,     # CoG to front axle, m
    "lr": 1.6,     # CoG to rear axle, m
    "Caf": 19000.0,  # front cornering stiffness, N/rad
    "Car": 19000.0,  # rear cornering stiffness, N/rad
}
BICYCLE_V_MIN = 0.5
BICYCLE_V_MAX = 30.0
BICYCLE_DELTA_MAX = 0.5


def _bicycle_field(x, u):
    X, Y, v, nu, psi, w = x
    a, delta = u
    P = BICYCLE_PARAMS
    alpha_f = delta - (nu + P["lf"] * w) / v
    alpha_r = (P["lr"] * w - nu) / v
    Fyf = P["Caf"] * alpha_f
    Fyr = P["Car"] * alpha_r
    return np.array([
        v * math.cos(psi) - nu * math.sin(psi),
        v * math.sin(psi) + nu * math.cos(psi),
        w * nu + a,
        -w * v + (2.0 / P["m"]) * (Fyf * math.cos(delta) + Fyr),
        w,
        (2.0 / P["Iz"]) * (P["lf"] * Fyf - P["lr"] * Fyr),
    ])


def _bicycle_model(ts: float) -> AffineLpvModel:
    """Euler-exact embedding with schedule
    p = (v, nu, cos psi, sin psi, 1/v, cos delta, cos delta / v).

    The bilinear rigid-body terms w*nu and -w*v are written as schedule
    times w, so the scheduling map depends on (v, nu, psi, delta) only.
    """
    P = BICYCLE_PARAMS
    m, Iz, lf, lr, Cf, Cr = (P["m"], P["Iz"], P["lf"], P["lr"],
                             P["Caf"], P["Car"])
    n = 6
    A0 = np.eye(n)
    A0[4, 5] = ts  # psi+ = psi + ts*w

    def zero():
        return np.zeros((n, n))

    A_v = zero()
    A_v[3, 5] = -ts                      # nudot: -w*v
    A_nu = zero()
    A_nu[2, 5] = ts                      # vdot: w*nu
    A_cpsi = zero()
    A_cpsi[0, 2] = ts                    # Xdot: v cos psi
    A_cpsi[1, 3] = ts                    # Ydot: nu cos psi
    A_spsi = zero()
    A_spsi[0, 3] = -ts                   # Xdot: -nu sin psi
    A_spsi[1, 2] = ts                    # Ydot: v sin psi
    A_invv = zero()
    A_invv[3, 3] = -ts * 2.0 * Cr / m
    A_invv[3, 5] = ts * 2.0 * Cr * lr / m
    A_invv[5, 3] = ts * 2.0 * (lr * Cr - lf * Cf) / Iz
    A_invv[5, 5] = -ts * 2.0 * (lf * lf * Cf + lr * lr * Cr) / Iz
    A_cdel = zero()                      # cos delta enters B only
    A_cdv = zero()
    A_cdv[3, 3] = -ts * 2.0 * Cf / m
    A_cdv[3, 5] = -ts * 2.0 * Cf * lf / m

    B0 = np.zeros((n, 2))
    B0[2, 0] = ts
    B0[5, 1] = ts * 2.0 * lf * Cf / Iz

    def zb():
        return np.zeros((n, 2))

    B_cdel = zb()
    B_cdel[3, 1] = ts * 2.0 * Cf / m
    B_terms = [zb(), zb(), zb(), zb(), zb(), B_cdel, zb()]

    def rho(x, u):
        # float() so v = 0 raises ZeroDivisionError instead of warning to inf
        v, nu, psi = float(x[2]), float(x[3]), float(x[4])
        delta = float(u[1])
        return np.array([v, nu, math.cos(psi), math.sin(psi), 1.0 / v,
                         math.cos(delta), math.cos(delta) / v])

    def rho_jac(x, u):
        v, nu, psi = float(x[2]), float(x[3]), float(x[4])
        delta = float(u[1])
        Jx = np.zeros((7, 6))
        Jx[0, 2] = 1.0
        Jx[1, 3] = 1.0
        Jx[2, 4] = -math.sin(psi)
        Jx[3, 4] = math.cos(psi)
        Jx[4, 2] = -1.0 / (v * v)
        Jx[6, 2] = -math.cos(delta) / (v * v)
        Ju = np.zeros((7, 2))
        Ju[5, 1] = -math.sin(delta)
        Ju[6, 1] = -math.sin(delta) / v
        return Jx, Ju

    cd_min = math.cos(BICYCLE_DELTA_MAX)
    return AffineLpvModel(
        A0=A0, B0=B0,
        A_terms=[A_v, A_nu, A_cpsi, A_spsi, A_invv, A_cdel, A_cdv],
        B_terms=B_terms, rho=rho, rho_jacobians=rho_jac,
        p_min=np.array([BICYCLE_V_MIN, -5.0, -1.0, -1.0, 1.0 / BICYCLE_V_MAX,
                        cd_min, cd_min / BICYCLE_V_MAX]),
        p_max=np.array([BICYCLE_V_MAX, 5.0, 1.0, 1.0, 1.0 / BICYCLE_V_MIN,
                        1.0, 1.0 / BICYCLE_V_MIN]),
        name="bicycle")


def lane_change_reference(t: float, speed: float = 10.0, lane: float = 3.0,
                          t_mid: float = 8.0, width: float = 1.5) -> np.ndarray:
    """Smooth single lane change at constant forward speed.

    The lateral profile is a tanh ramp; heading and yaw rate are the exact
    derivatives of the path, so the reference is dynamically consistent up
    to the (small) lateral-velocity state, which is referenced at zero.
    """
    s = (t - t_mid) / width
    sech2 = 1.0 / math.cosh(s) ** 2
    Y = 0.5 * lane * (1.0 + math.tanh(s))
    Ydot = 0.5 * lane / width * sech2
    Yddot = -lane / (width * width) * math.tanh(s) * sech2
    X = speed * t
    psi = math.atan2(Ydot, speed)
    vtot = math.hypot(speed, Ydot)
    psidot = Yddot * speed / (speed * speed + Ydot * Ydot)
    return np.array([X, Y, vtot, 0.0, psi, psidot])


def bicycle_scenario(horizon: int = 15, steps: int = 400) -> BenchmarkScenario:
    """Lane-change tracking with the dynamic single-track model at 10 m/s.

    The forward-speed floor v >= 0.5 is a hard constraint row: it keeps the
    1/v scheduling terms away from their singularity in every rollout the
    controller evaluates.
    """
    model = _bicycle_model(BICYCLE_TS)
    plant = NonlinearPlant(f=_bicycle_field, n=6, m=2, t_s=BICYCLE_TS,
                           discretization="euler", name="bicycle")
    # state rows: v <= v_max, -v <= -v_min, |nu| <= 5, |psi| <= 3.2, |w| <= 3,
    # |X| <= 1000, |Y| <= 1000
    G_x = np.zeros((12, 6))
    h_x = np.zeros(12)
    G_x[0, 2], h_x[0] = 1.0, BICYCLE_V_MAX
    G_x[1, 2], h_x[1] = -1.0, -BICYCLE_V_MIN
    G_x[2, 3], h_x[2] = 1.0, 5.0
    G_x[3, 3], h_x[3] = -1.0, 5.0
    G_x[4, 4], h_x[4] = 1.0, 3.2
    G_x[5, 4], h_x[5] = -1.0, 3.2
    G_x[6, 5], h_x[6] = 1.0, 3.0
    G_x[7, 5], h_x[7] = -1.0, 3.0
    G_x[8, 0], h_x[8] = 1.0, 1000.0
    G_x[9, 0], h_x[9] = -1.0, 1000.0
    G_x[10, 1], h_x[10] = 1.0, 1000.0
    G_x[11, 1], h_x[11] = -1.0, 1000.0
    G_u = np.vstack([np.eye(2), -np.eye(2)])
    h_u = np.array([8.0, BICYCLE_DELTA_MAX, 8.0, BICYCLE_DELTA_MAX])
    config = MpcConfig(N=horizon, Q=np.eye(6), R=np.diag([0.1, 0.1]),
                       G_x=G_x, h_x=h_x, G_u=G_u, h_u=h_u)
    x0 = lane_change_reference(0.0)
    return BenchmarkScenario(name="bicycle", plant=plant, model=model,
                             config=config, x0=x0, steps=steps,
                             reference=lane_change_reference,
                             embedding="euler_exact",
                             x_low=np.array([-10.0, -5.0, 1.0, -2.0, -1.0, -1.0]),
                             x_high=np.array([210.0, 5.0, 29.0, 2.0, 1.0, 1.0]),
                             u_low=np.array([-8.0, -BICYCLE_DELTA_MAX]),
                             u_high=np.array([8.0, BICYCLE_DELTA_MAX]),
                             description="lane-change tracking with linear tire "
                                         "forces")


def get_scenario(name: str, horizon: Optional[int] = None,
                 steps: Optional[int] = None,
                 embedding: Optional[str] = None) -> BenchmarkScenario:
    if name == "vanderpol":
        sc = vanderpol_scenario(embedding=embedding or "euler_exact")
    elif name == "unicycle":
        if embedding not in (None, "euler_exact"):
            raise ValueError("unicycle has a single euler_exact embedding")
        sc = unicycle_scenario()
    elif name == "bicycle":
        if embedding not in (None, "euler_exact"):
            raise ValueError("bicycle has a single euler_exact embedding")
        sc = bicycle_scenario()
    else:
        raise ValueError(f"unknown benchmark '{name}'; choose from {BENCHMARK_NAMES}")
    if horizon is not None:
        sc = replace(sc, config=replace(sc.config, N=int(horizon)))
    if steps is not None:
        sc = replace(sc, steps=int(steps))
    return sc
