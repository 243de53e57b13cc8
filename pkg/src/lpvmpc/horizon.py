"""Finite-horizon assembly for LPV models, in two equivalent forms.

Decision-variable conventions, used everywhere downstream:

  stacked form     z = [u_0 .. u_{N-1}, x_1 .. x_N]   (inputs first)
  condensed form   u_bar = [u_0 .. u_{N-1}]

The stacked form keeps the frozen-schedule dynamics as equality rows

  B(p_0) u_0                        - x_1 = -A(p_0) x_0
  B(p_k) u_k + A(p_k) x_k          - x_{k+1} = 0        (k = 1 .. N-1)

while the condensed form eliminates the states through the prediction
matrices A_bar, B_bar and carries the dynamics inside the cost and in the
state-constraint rows. For one and the same schedule both QPs have the
same minimizing input sequence; their optimal values differ by a constant
that cost_offset reports.

Cost is sum of x_k' Q x_k (k = 1..N) plus u_k' R u_k (k = 0..N-1); an
optional reference trajectory for x_1..x_N turns it into a tracking cost
by adding the matching linear term.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .lpv import AffineLpvModel
from .qp import QpProblem


@dataclass
class MpcConfig:
    """Horizon length, weights, and polytopic stage/terminal constraint sets.

    Constraint rows read G_x x <= h_x (applied to x_1..x_{N-1}, with
    G_xf/h_xf on x_N) and G_u u <= h_u on every input. reference, when set,
    is an (N, n) array of setpoints for x_1..x_N.
    """

    N: int
    Q: np.ndarray
    R: np.ndarray
    G_x: Optional[np.ndarray] = None
    h_x: Optional[np.ndarray] = None
    G_u: Optional[np.ndarray] = None
    h_u: Optional[np.ndarray] = None
    G_xf: Optional[np.ndarray] = None
    h_xf: Optional[np.ndarray] = None
    reference: Optional[np.ndarray] = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        n = self.Q.shape[0]
        m = self.R.shape[0]
        self.G_x = self._mat(self.G_x, n)
        self.h_x = self._vec(self.h_x, self.G_x.shape[0])
        self.G_u = self._mat(self.G_u, m)
        self.h_u = self._vec(self.h_u, self.G_u.shape[0])
        self.G_xf = self.G_x.copy() if self.G_xf is None else self._mat(self.G_xf, n)
        self.h_xf = self.h_x.copy() if self.h_xf is None else self._vec(self.h_xf, self.G_xf.shape[0])
        if self.reference is not None:
            self.reference = np.asarray(self.reference, dtype=float).reshape(self.N, n)

    @staticmethod
    def _mat(a, ncols):
        if a is None:
            return np.zeros((0, ncols))
        a = np.asarray(a, dtype=float)
        return a.reshape(1, -1) if a.ndim == 1 else a

    @staticmethod
    def _vec(b, length):
        if b is None:
            return np.zeros(length)
        return np.atleast_1d(np.asarray(b, dtype=float)).ravel()

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def validate(self):
        if self.N < 1:
            raise ValueError("horizon must be at least 1")
        for name, W in (("Q", self.Q), ("R", self.R)):
            if np.max(np.abs(W - W.T)) > 1e-12 * max(1.0, np.max(np.abs(W))):
                raise ValueError(f"{name} must be symmetric")
        if np.min(np.linalg.eigvalsh(self.Q)) < -1e-12:
            raise ValueError("Q must be positive semidefinite")
        try:
            np.linalg.cholesky(self.R)
        except np.linalg.LinAlgError:
            raise ValueError("R must be positive definite") from None
        if self.G_x.shape[0] != self.h_x.size or self.G_u.shape[0] != self.h_u.size \
                or self.G_xf.shape[0] != self.h_xf.size:
            raise ValueError("constraint row counts do not match their bounds")

    def with_reference(self, reference) -> "MpcConfig":
        return replace(self, reference=reference)


def split_decision(z: np.ndarray, N: int, n: int, m: int):
    """Stacked z -> (u_bar (N, m), x_bar (N, n)); x_bar[k] is x_{k+1}."""
    z = np.asarray(z, dtype=float).ravel()
    if z.size != N * (n + m):
        raise ValueError(f"decision has size {z.size}, expected {N * (n + m)}")
    u_bar = z[:N * m].reshape(N, m)
    x_bar = z[N * m:].reshape(N, n)
    return u_bar, x_bar


def join_decision(u_bar: np.ndarray, x_bar: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(u_bar, dtype=float).ravel(),
                           np.asarray(x_bar, dtype=float).ravel()])


def prediction_matrices(model: AffineLpvModel, N: int, schedule: np.ndarray):
    """A_bar (N*n, n) and B_bar (N*n, N*m) for a frozen schedule trajectory.

    Row block k gives x_{k+1} = A_bar[k] x_0 + sum_j B_bar[k, j] u_j with
    A(p_k) applied on top of the previous row block.
    """
    n, m = model.n, model.m
    schedule = np.asarray(schedule, dtype=float).reshape(N, model.n_p)
    A_bar = np.zeros((N * n, n))
    B_bar = np.zeros((N * n, N * m))
    prev_A = np.eye(n)
    for k in range(N):
        Ak = model.A(schedule[k])
        Bk = model.B(schedule[k])
        rows = slice(k * n, (k + 1) * n)
        if k:
            B_bar[rows, :k * m] = Ak @ B_bar[k * n - n:k * n, :k * m]
        B_bar[rows, k * m:(k + 1) * m] = Bk
        prev_A = Ak @ prev_A
        A_bar[rows] = prev_A
    return A_bar, B_bar


def rollout_states(model: AffineLpvModel, x0: np.ndarray, u_bar: np.ndarray,
                   schedule: np.ndarray) -> np.ndarray:
    """Propagate x_1..x_N under a frozen schedule; returns (N, n)."""
    N = u_bar.shape[0]
    x_bar = np.zeros((N, model.n))
    x = np.asarray(x0, dtype=float)
    for k in range(N):
        x = model.A(schedule[k]) @ x + model.B(schedule[k]) @ u_bar[k]
        x_bar[k] = x
    return x_bar


def stacked_cost(config: MpcConfig):
    """Cost matrix M = 2 blkdiag(I kron R, I kron Q) and linear term over z."""
    N, n, m = config.N, config.n, config.m
    M = np.zeros((N * (n + m), N * (n + m)))
    for k in range(N):
        M[k * m:(k + 1) * m, k * m:(k + 1) * m] = 2.0 * config.R
        ofs = N * m + k * n
        M[ofs:ofs + n, ofs:ofs + n] = 2.0 * config.Q
    f = np.zeros(N * (n + m))
    if config.reference is not None:
        for k in range(N):
            ofs = N * m + k * n
            f[ofs:ofs + n] = -2.0 * config.Q @ config.reference[k]
    return M, f


def stacked_constraints(config: MpcConfig):
    """(Gu_bar, hu_bar, Gx_bar, hx_bar): per-stage rows repeated over the horizon."""
    N, n, m = config.N, config.n, config.m
    ru = config.G_u.shape[0]
    rx = config.G_x.shape[0]
    rf = config.G_xf.shape[0]
    Gu_bar = np.zeros((N * ru, N * m))
    hu_bar = np.zeros(N * ru)
    for k in range(N):
        Gu_bar[k * ru:(k + 1) * ru, k * m:(k + 1) * m] = config.G_u
        hu_bar[k * ru:(k + 1) * ru] = config.h_u
    Gx_bar = np.zeros(((N - 1) * rx + rf, N * n))
    hx_bar = np.zeros((N - 1) * rx + rf)
    for k in range(N - 1):
        Gx_bar[k * rx:(k + 1) * rx, k * n:(k + 1) * n] = config.G_x
        hx_bar[k * rx:(k + 1) * rx] = config.h_x
    Gx_bar[(N - 1) * rx:, (N - 1) * n:] = config.G_xf
    hx_bar[(N - 1) * rx:] = config.h_xf
    return Gu_bar, hu_bar, Gx_bar, hx_bar


def dynamics_constraints(model: AffineLpvModel, config: MpcConfig,
                         x0: np.ndarray, schedule: np.ndarray):
    """Equality rows C(p_bar) z = b of the stacked form."""
    N, n, m = config.N, config.n, config.m
    schedule = np.asarray(schedule, dtype=float).reshape(N, model.n_p)
    C = np.zeros((N * n, N * (n + m)))
    b = np.zeros(N * n)
    x_ofs = N * m
    for k in range(N):
        rows = slice(k * n, (k + 1) * n)
        C[rows, k * m:(k + 1) * m] = model.B(schedule[k])
        if k == 0:
            b[rows] = -model.A(schedule[0]) @ np.asarray(x0, dtype=float)
        else:
            C[rows, x_ofs + (k - 1) * n:x_ofs + k * n] = model.A(schedule[k])
        C[rows, x_ofs + k * n:x_ofs + (k + 1) * n] = -np.eye(n)
    return C, b


def build_noncondensed(model: AffineLpvModel, config: MpcConfig,
                       x0: np.ndarray, schedule: np.ndarray) -> QpProblem:
    """Stacked-form QP over z for a frozen schedule."""
    M, f = stacked_cost(config)
    C, b = dynamics_constraints(model, config, x0, schedule)
    Gu_bar, hu_bar, Gx_bar, hx_bar = stacked_constraints(config)
    N, n, m = config.N, config.n, config.m
    rows_u = Gu_bar.shape[0]
    rows_x = Gx_bar.shape[0]
    G = np.zeros((rows_u + rows_x, N * (n + m)))
    G[:rows_u, :N * m] = Gu_bar
    G[rows_u:, N * m:] = Gx_bar
    h = np.concatenate([hu_bar, hx_bar])
    return QpProblem(H=M, f=f, A_eq=C, b_eq=b, A_in=G, b_in=h)


def build_condensed(model: AffineLpvModel, config: MpcConfig,
                    x0: np.ndarray, schedule: np.ndarray) -> QpProblem:
    """Condensed QP over u_bar for a frozen schedule (states eliminated)."""
    x0 = np.asarray(x0, dtype=float)
    A_bar, B_bar = prediction_matrices(model, config.N, schedule)
    N, n, m = config.N, config.n, config.m
    Q_bar = np.zeros((N * n, N * n))
    for k in range(N):
        Q_bar[k * n:(k + 1) * n, k * n:(k + 1) * n] = config.Q
    R_bar = np.zeros((N * m, N * m))
    for k in range(N):
        R_bar[k * m:(k + 1) * m, k * m:(k + 1) * m] = config.R
    QB = Q_bar @ B_bar
    H = 2.0 * (R_bar + B_bar.T @ QB)
    H = 0.5 * (H + H.T)  # symmetrize roundoff
    f = 2.0 * (B_bar.T @ (Q_bar @ (A_bar @ x0)))
    if config.reference is not None:
        f = f - 2.0 * (B_bar.T @ (Q_bar @ config.reference.ravel()))

    Gu_bar, hu_bar, Gx_bar, hx_bar = stacked_constraints(config)
    G = np.vstack([Gu_bar, Gx_bar @ B_bar])
    h = np.concatenate([hu_bar, hx_bar - Gx_bar @ (A_bar @ x0)])
    return QpProblem(H=H, f=f, A_in=G, b_in=h)


def cost_offset(model: AffineLpvModel, config: MpcConfig, x0: np.ndarray,
                schedule: np.ndarray, form: str) -> float:
    """Constant the QP objective drops relative to the full horizon cost.

    full cost = qp objective + cost_offset, where the full cost is
    sum_k (x_k - r_k)' Q (x_k - r_k) + u_k' R u_k under the frozen schedule.
    """
    x0 = np.asarray(x0, dtype=float)
    if form == "noncondensed":
        if config.reference is None:
            return 0.0
        return float(sum(r @ config.Q @ r for r in config.reference))
    if form == "condensed":
        A_bar, _ = prediction_matrices(model, config.N, schedule)
        free = (A_bar @ x0).reshape(config.N, config.n)
        if config.reference is not None:
            free = free - config.reference
        return float(sum(row @ config.Q @ row for row in free))
    raise ValueError(f"unknown form '{form}'")


def extract_schedule(model: AffineLpvModel, config: MpcConfig,
                     x0: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Schedule along a stacked iterate: p_0 = rho(x_0, u_0), then the z blocks."""
    u_bar, x_bar = split_decision(z, config.N, config.n, config.m)
    schedule = np.zeros((config.N, model.n_p))
    schedule[0] = model.schedule(np.asarray(x0, dtype=float), u_bar[0])
    for k in range(1, config.N):
        schedule[k] = model.schedule(x_bar[k - 1], u_bar[k])
    return schedule


def extract_schedule_condensed(model: AffineLpvModel, config: MpcConfig,
                               x0: np.ndarray, u_bar: np.ndarray,
                               prev_schedule: np.ndarray) -> np.ndarray:
    """Schedule for a condensed iterate; states come from a rollout under
    the previous schedule (the condensed form carries no state variables)."""
    u_bar = np.asarray(u_bar, dtype=float).reshape(config.N, config.m)
    x_bar = rollout_states(model, x0, u_bar, prev_schedule)
    schedule = np.zeros((config.N, model.n_p))
    schedule[0] = model.schedule(np.asarray(x0, dtype=float), u_bar[0])
    for k in range(1, config.N):
        schedule[k] = model.schedule(x_bar[k - 1], u_bar[k])
    return schedule
