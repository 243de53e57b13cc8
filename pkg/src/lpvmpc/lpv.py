"""Affine scheduling-parameter models and nonlinear plants.

An AffineLpvModel is a discrete-time system

    x+ = A(p) x + B(p) u,      p = rho(x, u)

where A(p) = A0 + sum_i p_i * A_i and B(p) = B0 + sum_i p_i * B_i. When the
scheduling map is built from the system's own nonlinearities the model step
reproduces the discretized nonlinear map exactly; embedding_exactness
measures that agreement over an operating box.

NonlinearPlant holds the continuous-time vector field and the sampling
time; integrate_plant advances it one sample with RK4 or explicit Euler.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np


@dataclass
class AffineLpvModel:
    """Discrete-time LPV model with affine dependence on the schedule."""

    A0: np.ndarray
    B0: np.ndarray
    A_terms: Sequence[np.ndarray] = ()
    B_terms: Sequence[np.ndarray] = ()
    rho: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    rho_jacobians: Optional[Callable] = None
    p_min: Optional[np.ndarray] = None
    p_max: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        self.A0 = np.asarray(self.A0, dtype=float)
        self.B0 = np.asarray(self.B0, dtype=float)
        if self.B0.ndim == 1:
            self.B0 = self.B0.reshape(-1, 1)
        self.A_terms = [np.asarray(a, dtype=float) for a in self.A_terms]
        self.B_terms = [np.asarray(b, dtype=float) for b in self.B_terms]
        if len(self.A_terms) != len(self.B_terms):
            # pad the shorter list with zero blocks so both have n_p entries
            n_p = max(len(self.A_terms), len(self.B_terms))
            while len(self.A_terms) < n_p:
                self.A_terms.append(np.zeros_like(self.A0))
            while len(self.B_terms) < n_p:
                self.B_terms.append(np.zeros_like(self.B0))
        # stacked copies for fast evaluation
        self._A_stack = (np.stack(self.A_terms) if self.A_terms
                         else np.zeros((0,) + self.A0.shape))
        self._B_stack = (np.stack(self.B_terms) if self.B_terms
                         else np.zeros((0,) + self.B0.shape))
        if self.p_min is not None:
            self.p_min = np.asarray(self.p_min, dtype=float)
        if self.p_max is not None:
            self.p_max = np.asarray(self.p_max, dtype=float)

    @property
    def n(self) -> int:
        return self.A0.shape[0]

    @property
    def m(self) -> int:
        return self.B0.shape[1]

    @property
    def n_p(self) -> int:
        return len(self.A_terms)

    def A(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.n_p:
            raise ValueError(f"schedule has size {p.size}, expected {self.n_p}")
        if self.n_p == 0:
            return self.A0.copy()
        return self.A0 + np.tensordot(p, self._A_stack, axes=1)

    def B(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float).ravel()
        if p.size != self.n_p:
            raise ValueError(f"schedule has size {p.size}, expected {self.n_p}")
        if self.n_p == 0:
            return self.B0.copy()
        return self.B0 + np.tensordot(p, self._B_stack, axes=1)

    def schedule(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Evaluate rho(x, u). Non-finite output means the operating box was left."""
        if self.n_p == 0:
            return np.zeros(0)
        try:
            raw = self.rho(np.asarray(x, dtype=float), np.asarray(u, dtype=float))
        except ZeroDivisionError as exc:
            raise ValueError("scheduling map is singular at this point; "
                             "the state/input left the model's operating region") from exc
        p = np.asarray(raw, dtype=float).ravel()
        if p.size != self.n_p:
            raise ValueError(f"rho returned size {p.size}, expected {self.n_p}")
        if not np.all(np.isfinite(p)):
            raise ValueError("scheduling map returned a non-finite value; "
                             "the state/input left the model's operating region")
        return p

    def clamp_schedule(self, p: np.ndarray) -> tuple[np.ndarray, bool]:
        """Clip a schedule to the declared bounds; flags whether clipping acted."""
        if self.p_min is None or self.p_max is None:
            return p, False
        clipped = np.clip(p, self.p_min, self.p_max)
        return clipped, bool(np.any(clipped != p))

    def schedule_in_bounds(self, p: np.ndarray, tol: float = 0.0) -> bool:
        if self.p_min is None or self.p_max is None:
            return True
        return bool(np.all(p >= self.p_min - tol) and np.all(p <= self.p_max + tol))

    def step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        p = self.schedule(x, u)
        return self.A(p) @ np.asarray(x, dtype=float) \
            + self.B(p) @ np.atleast_1d(np.asarray(u, dtype=float))

    def scheduling_jacobians(self, x: np.ndarray, u: np.ndarray):
        """d rho / dx and d rho / du, analytic when provided else central differences."""
        x = np.asarray(x, dtype=float)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.n_p == 0:
            return np.zeros((0, x.size)), np.zeros((0, u.size))
        if self.rho_jacobians is not None:
            try:
                Jx, Ju = self.rho_jacobians(x, u)
            except ZeroDivisionError as exc:
                raise ValueError("scheduling Jacobians are singular at this "
                                 "point") from exc
            Jx = np.asarray(Jx, dtype=float)
            Ju = np.asarray(Ju, dtype=float)
            if not (np.all(np.isfinite(Jx)) and np.all(np.isfinite(Ju))):
                raise ValueError("scheduling Jacobians are non-finite at this "
                                 "point")
            return Jx, Ju
        Jx = np.zeros((self.n_p, x.size))
        Ju = np.zeros((self.n_p, u.size))
        for i in range(x.size):
            h = 1e-6 * max(1.0, abs(x[i]))
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            Jx[:, i] = (self.schedule(xp, u) - self.schedule(xm, u)) / (2.0 * h)
        for j in range(u.size):
            h = 1e-6 * max(1.0, abs(u[j]))
            up, um = u.copy(), u.copy()
            up[j] += h
            um[j] -= h
            Ju[:, j] = (self.schedule(x, up) - self.schedule(x, um)) / (2.0 * h)
        return Jx, Ju


def lti_model(A: np.ndarray, B: np.ndarray, name: str = "lti") -> AffineLpvModel:
    """Wrap constant matrices as a model with an empty schedule."""
    return AffineLpvModel(A0=A, B0=B, rho=lambda x, u: np.zeros(0), name=name)


@dataclass
class NonlinearPlant:
    """Continuous-time dynamics xdot = f(x, u) sampled every t_s seconds.

    discretization names the map the companion LPV model reproduces exactly
    ('rk4' or 'euler'); closed-loop simulation always propagates with RK4.
    """

    f: Callable[[np.ndarray, np.ndarray], np.ndarray]
    n: int
    m: int
    t_s: float
    discretization: str = "rk4"
    name: str = ""

    def __post_init__(self):
        if self.discretization not in ("rk4", "euler"):
            raise ValueError(f"unknown discretization '{self.discretization}'")
        if self.t_s <= 0:
            raise ValueError("t_s must be positive")


def integrate_plant(plant: NonlinearPlant, x: np.ndarray, u: np.ndarray,
                    method: str | None = None) -> np.ndarray:
    """Advance the plant one sample with the requested one-step method."""
    method = plant.discretization if method is None else method
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    h = plant.t_s
    f = plant.f
    if method == "euler":
        return x + h * np.asarray(f(x, u), dtype=float)
    if method == "rk4":
        k1 = np.asarray(f(x, u), dtype=float)
        k2 = np.asarray(f(x + 0.5 * h * k1, u), dtype=float)
        k3 = np.asarray(f(x + 0.5 * h * k2, u), dtype=float)
        k4 = np.asarray(f(x + h * k3, u), dtype=float)
        return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    raise ValueError(f"unknown integration method '{method}'")


def embedding_exactness(model: AffineLpvModel, plant: NonlinearPlant,
                        x_low, x_high, u_low, u_high,
                        n_samples: int = 10000, seed: int = 0) -> float:
    """Max |model step - discretized plant step| over uniform samples.

    The plant side uses the plant's designated discretization, so an exact
    embedding of that map returns roundoff-level numbers.
    """
    rng = np.random.default_rng(seed)
    x_low = np.asarray(x_low, dtype=float)
    x_high = np.asarray(x_high, dtype=float)
    u_low = np.atleast_1d(np.asarray(u_low, dtype=float))
    u_high = np.atleast_1d(np.asarray(u_high, dtype=float))
    xs = rng.uniform(x_low, x_high, size=(n_samples, x_low.size))
    us = rng.uniform(u_low, u_high, size=(n_samples, u_low.size))
    worst = 0.0
    for k in range(n_samples):
        ref = integrate_plant(plant, xs[k], us[k])
        err = float(np.max(np.abs(model.step(xs[k], us[k]) - ref)))
        if err > worst:
            worst = err
    return worst
