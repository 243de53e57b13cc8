"""Dense active-set solver for strictly convex quadratic programs.

Problems have the form

    minimize    0.5 * d' H d + f' d
    subject to  A_eq d  = b_eq
                A_in d <= b_in

with H symmetric positive definite (a single 1e-10 * I regularization is
applied if the Cholesky pivots dip below 1e-10). The solver is a primal
active-set method: it maintains a feasible iterate and a working set of
inequality rows treated as equalities, solves the equality-constrained
subproblem through a dense KKT factorization, and adds/removes rows one at
a time. Ties in the ratio test and in multiplier removal are broken by the
lowest row index, which prevents cycling on the problem sizes this package
produces. Everything is deterministic: same problem, same answer.

An exhaustive active-set enumeration oracle is provided for cross-checking
on small problems, plus a plain-text dump/load format for reproducing
solver failures outside the calling code.
"""

from __future__ import annotations

from bisect import insort
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERATIONS = "max_iterations"
NUMERICAL_FAILURE = "numerical_failure"

# pivot threshold and shift used for the one-shot curvature regularization
_REG_PIVOT = 1e-10
_REG_SHIFT = 1e-10


def _as_vector(b, length=None):
    if b is None:
        return np.zeros(0 if length is None else length, dtype=float)
    arr = np.atleast_1d(np.asarray(b, dtype=float)).ravel()
    return arr


def _as_matrix(a, ncols):
    if a is None:
        return np.zeros((0, ncols), dtype=float)
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


@dataclass
class QpProblem:
    """Data of one QP. Treated as an immutable value after construction."""

    H: np.ndarray
    f: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    A_in: np.ndarray | None = None
    b_in: np.ndarray | None = None

    def __post_init__(self):
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        n = self.H.shape[0]
        self.f = _as_vector(self.f, n)
        if self.f.size != n:
            raise ValueError(f"f has size {self.f.size}, expected {n}")
        self.A_eq = _as_matrix(self.A_eq, n)
        self.b_eq = _as_vector(self.b_eq)
        self.A_in = _as_matrix(self.A_in, n)
        self.b_in = _as_vector(self.b_in)

    @property
    def n_d(self) -> int:
        return self.H.shape[0]

    @property
    def m_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def m_in(self) -> int:
        return self.A_in.shape[0]

    def validate(self):
        n = self.n_d
        if self.H.shape != (n, n):
            raise ValueError(f"H must be square, got {self.H.shape}")
        scale = max(1.0, float(np.max(np.abs(self.H))))
        if np.max(np.abs(self.H - self.H.T)) > 1e-12 * scale:
            raise ValueError("H must be symmetric")
        if self.A_eq.shape[1] != n or self.b_eq.size != self.m_eq:
            raise ValueError("equality constraint dimensions are inconsistent")
        if self.A_in.shape[1] != n or self.b_in.size != self.m_in:
            raise ValueError("inequality constraint dimensions are inconsistent")
        for name, arr in (("H", self.H), ("f", self.f), ("A_eq", self.A_eq),
                          ("b_eq", self.b_eq), ("A_in", self.A_in), ("b_in", self.b_in)):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")

    def objective(self, d: np.ndarray) -> float:
        d = np.asarray(d, dtype=float)
        return float(0.5 * d @ self.H @ d + self.f @ d)


@dataclass
class QpSolution:
    """Primal/dual result of one solve.

    x is meaningful only when status == "optimal" (a finite best-effort point
    is still returned otherwise so residuals stay computable). mu holds one
    multiplier per inequality row, zero off the active set.
    """

    x: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    active_set: np.ndarray
    status: str
    iterations: int
    regularized: bool = False
    phase1_used: bool = False


@dataclass
class KktResiduals:
    stationarity: float
    equality: float
    inequality: float
    complementarity: float
    dual: float

    @property
    def worst(self) -> float:
        return max(self.stationarity, self.equality, self.inequality,
                   self.complementarity, self.dual)


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> KktResiduals:
    """First-order optimality residuals of a candidate primal/dual point."""
    x = np.asarray(solution.x, dtype=float)
    lam = np.asarray(solution.lam, dtype=float)
    mu = np.asarray(solution.mu, dtype=float)
    if x.size != problem.n_d:
        raise ValueError(f"primal size {x.size} does not match n_d={problem.n_d}")
    if lam.size != problem.m_eq:
        raise ValueError(f"lam size {lam.size} does not match m_eq={problem.m_eq}")
    if mu.size != problem.m_in:
        raise ValueError(f"mu size {mu.size} does not match m_in={problem.m_in}")

    grad = problem.H @ x + problem.f
    if problem.m_eq:
        grad = grad + problem.A_eq.T @ lam
    if problem.m_in:
        grad = grad + problem.A_in.T @ mu
    stationarity = float(np.max(np.abs(grad), initial=0.0))

    equality = 0.0
    if problem.m_eq:
        equality = float(np.max(np.abs(problem.A_eq @ x - problem.b_eq)))

    inequality = 0.0
    complementarity = 0.0
    dual = 0.0
    if problem.m_in:
        slack = problem.b_in - problem.A_in @ x
        inequality = float(max(0.0, np.max(-slack)))
        complementarity = float(np.max(np.abs(mu * slack)))
        dual = float(max(0.0, -np.min(mu)))
    return KktResiduals(stationarity, equality, inequality, complementarity, dual)


def _row_violation(problem: QpProblem, x: np.ndarray) -> float:
    """Worst constraint violation, each row scaled by 1 + |b_row|."""
    worst = 0.0
    if problem.m_eq:
        r = np.abs(problem.A_eq @ x - problem.b_eq) / (1.0 + np.abs(problem.b_eq))
        worst = max(worst, float(np.max(r)))
    if problem.m_in:
        r = (problem.A_in @ x - problem.b_in) / (1.0 + np.abs(problem.b_in))
        worst = max(worst, float(np.max(r)))
    return worst


def _project_equalities(problem: QpProblem, x: np.ndarray) -> np.ndarray:
    A, b = problem.A_eq, problem.b_eq
    r = b - A @ x
    try:
        corr = A.T @ np.linalg.solve(A @ A.T, r)
    except np.linalg.LinAlgError:
        corr = np.linalg.lstsq(A, r, rcond=None)[0]
    return x + corr


def _phase1(problem: QpProblem, feas_tol: float):
    """Find a feasible point or decide infeasibility.

    Cheap candidates (origin, min-norm equality solution) are tried before
    falling back to an LP that minimizes the total inequality violation.
    Returns (point, None) on success or (None, "infeasible").
    """
    n, me, mi = problem.n_d, problem.m_eq, problem.m_in
    candidates = [np.zeros(n)]
    if me:
        x_ls = np.linalg.lstsq(problem.A_eq, problem.b_eq, rcond=None)[0]
        candidates.insert(0, x_ls)
    for cand in candidates:
        if _row_violation(problem, cand) <= feas_tol:
            return cand, None
    if mi == 0:
        # equalities only: the min-norm solution is as feasible as it gets
        return None, INFEASIBLE

    c = np.concatenate([np.zeros(n), np.ones(mi)])
    A_ub = np.hstack([problem.A_in, -np.eye(mi)])
    kwargs = {}
    if me:
        kwargs["A_eq"] = np.hstack([problem.A_eq, np.zeros((me, mi))])
        kwargs["b_eq"] = problem.b_eq
    res = linprog(c, A_ub=A_ub, b_ub=problem.b_in,
                  bounds=[(None, None)] * n + [(0, None)] * mi,
                  method="highs", **kwargs)
    if not res.success:
        return None, INFEASIBLE
    scale = 1.0 + float(np.max(np.abs(problem.b_in), initial=0.0))
    if res.fun > 10.0 * feas_tol * scale:
        return None, INFEASIBLE
    x = res.x[:n]
    if me:
        x = _project_equalities(problem, x)
    return x, None


def _eqp_step(H, g, A):
    """Solve min 0.5 d'Hd + g'd s.t. A d = 0; returns (d, multipliers)."""
    n = H.shape[0]
    ma = A.shape[0]
    if ma == 0:
        return -np.linalg.solve(H, g), np.zeros(0)
    K = np.zeros((n + ma, n + ma))
    K[:n, :n] = H
    K[:n, n:] = A.T
    K[n:, :n] = A
    rhs = np.concatenate([-g, np.zeros(ma)])
    sol = np.linalg.solve(K, rhs)
    return sol[:n], sol[n:]


def _needs_regularization(H) -> bool:
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return True
    return bool(np.min(np.diag(L)) ** 2 < _REG_PIVOT)


def _failed(problem, x, status, iterations, regularized, phase1_used) -> QpSolution:
    point = np.zeros(problem.n_d) if x is None else np.asarray(x, dtype=float)
    return QpSolution(x=point, lam=np.zeros(problem.m_eq), mu=np.zeros(problem.m_in),
                      active_set=np.zeros(0, dtype=int), status=status,
                      iterations=iterations, regularized=regularized,
                      phase1_used=phase1_used)


def solve_qp(problem: QpProblem, warm_start=None, *, kkt_tol: float = 1e-8,
             feas_tol: float = 1e-8, max_iterations: int | None = None) -> QpSolution:
    """Solve one strictly convex QP.

    warm_start is an optional (point, active_set) pair. The point is used
    when it is feasible within feas_tol (else phase 1 runs); active_set rows
    seed the working set when they are active at the start point. From the
    true optimal pair the method terminates in at most two iterations.
    """
    problem.validate()
    n, me, mi = problem.n_d, problem.m_eq, problem.m_in
    if max_iterations is None:
        max_iterations = 50 * (n + mi)

    H = problem.H
    regularized = False
    if _needs_regularization(H):
        H = H + _REG_SHIFT * np.eye(n)
        regularized = True

    row_norm = np.max(np.abs(problem.A_in), axis=1) if mi else np.zeros(0)

    # starting point and working set
    x = None
    working: list[int] = []
    phase1_used = False
    if warm_start is not None:
        point, seed_active = warm_start
        if point is not None:
            point = np.asarray(point, dtype=float).ravel()
            if point.size == n and np.all(np.isfinite(point)) \
                    and _row_violation(problem, point) <= feas_tol:
                x = point.copy()
                if me:
                    x = _project_equalities(problem, x)
        if x is not None and seed_active is not None and mi:
            slack = problem.b_in - problem.A_in @ x
            limit = max(0, n - me)
            for i in sorted(int(j) for j in np.atleast_1d(seed_active)):
                if 0 <= i < mi and slack[i] <= 10.0 * feas_tol * (1.0 + abs(problem.b_in[i])):
                    if len(working) < limit:
                        working.append(i)
    if x is None:
        x, fail = _phase1(problem, feas_tol)
        phase1_used = True
        if fail is not None:
            return _failed(problem, x, INFEASIBLE, 0, regularized, True)

    lam = np.zeros(me)
    mu = np.zeros(mi)
    status = MAX_ITERATIONS
    iterations = 0
    for _ in range(max_iterations):
        iterations += 1
        g = H @ x + problem.f
        if working:
            A_act = np.vstack([problem.A_eq, problem.A_in[working]])
        else:
            A_act = problem.A_eq
        try:
            d, nu = _eqp_step(H, g, A_act)
        except np.linalg.LinAlgError:
            if not regularized:
                H = H + _REG_SHIFT * np.eye(n)
                regularized = True
                try:
                    d, nu = _eqp_step(H, g, A_act)
                except np.linalg.LinAlgError:
                    return _failed(problem, x, NUMERICAL_FAILURE, iterations,
                                   regularized, phase1_used)
            else:
                return _failed(problem, x, NUMERICAL_FAILURE, iterations,
                               regularized, phase1_used)

        step = float(np.max(np.abs(d), initial=0.0))
        if step > 1e-11 * (1.0 + float(np.max(np.abs(x), initial=0.0))):
            # ratio test over rows not in the working set
            alpha = 1.0
            blocker = -1
            if mi:
                Ad = problem.A_in @ d
                slack = problem.b_in - problem.A_in @ x
                in_working = np.zeros(mi, dtype=bool)
                if working:
                    in_working[working] = True
                dnorm = step
                for i in range(mi):
                    if in_working[i]:
                        continue
                    den = Ad[i]
                    if den <= 1e-13 * max(1.0, row_norm[i] * dnorm):
                        continue
                    ratio = max(slack[i], 0.0) / den
                    if ratio < alpha - 1e-12 * (1.0 + alpha):
                        alpha = ratio
                        blocker = i
            x = x + alpha * d
            if blocker >= 0:
                insort(working, blocker)
                continue
            # Unblocked full step: x now sits at the minimizer over the
            # current working set and nu holds its multipliers. Fall through
            # to the multiplier test instead of re-solving the EQP; the
            # re-solve only measures KKT roundoff, which on badly scaled
            # problems stays above the step threshold and stalls the loop.

        lam = nu[:me]
        mu_w = nu[me:]
        if len(working) == 0 or np.min(mu_w) >= -kkt_tol:
            mu = np.zeros(mi)
            if working:
                mu[working] = mu_w
            status = OPTIMAL
            break
        # drop the most negative multiplier; argmin takes the lowest index on ties
        drop = int(np.argmin(mu_w))
        del working[drop]

    active = np.array(working, dtype=int)
    return QpSolution(x=x, lam=lam, mu=mu, active_set=active, status=status,
                      iterations=iterations, regularized=regularized,
                      phase1_used=phase1_used)


def enumerate_qp_oracle(problem: QpProblem, *, kkt_tol: float = 1e-8,
                        feas_tol: float = 1e-8) -> QpSolution:
    """Exhaustive reference solver: try every candidate active set.

    Only intended for small problems; guarded at n_d <= 10 and m_in <= 12.
    Each subset of inequality rows is solved as an equality-constrained QP
    and kept when it is primal feasible with nonnegative subset multipliers;
    the lowest objective wins. Fully independent of the active-set iteration.
    """
    problem.validate()
    n, me, mi = problem.n_d, problem.m_eq, problem.m_in
    if n > 10 or mi > 12:
        raise ValueError(f"enumeration oracle limited to n_d<=10, m_in<=12 "
                         f"(got n_d={n}, m_in={mi})")

    point, fail = _phase1(problem, feas_tol)
    if fail is not None:
        return _failed(problem, point, INFEASIBLE, 0, False, True)

    best = None
    best_obj = np.inf
    tried = 0
    max_size = min(mi, max(0, n - me))
    for size in range(max_size + 1):
        for subset in combinations(range(mi), size):
            tried += 1
            rows = list(subset)
            A = np.vstack([problem.A_eq, problem.A_in[rows]]) if (me or rows) \
                else np.zeros((0, n))
            b = np.concatenate([problem.b_eq, problem.b_in[rows]])
            ma = A.shape[0]
            K = np.zeros((n + ma, n + ma))
            K[:n, :n] = problem.H
            if ma:
                K[:n, n:] = A.T
                K[n:, :n] = A
            rhs = np.concatenate([-problem.f, b])
            try:
                sol = np.linalg.solve(K, rhs)
            except np.linalg.LinAlgError:
                continue
            x = sol[:n]
            nu = sol[n:]
            if not np.all(np.isfinite(x)):
                continue
            mu_s = nu[me:]
            if mu_s.size and np.min(mu_s) < -kkt_tol:
                continue
            if mi:
                viol = problem.A_in @ x - problem.b_in
                if np.max(viol / (1.0 + np.abs(problem.b_in))) > feas_tol:
                    continue
            obj = problem.objective(x)
            if obj < best_obj - 1e-12 * (1.0 + abs(obj)):
                mu = np.zeros(mi)
                if rows:
                    mu[rows] = mu_s
                best = QpSolution(x=x, lam=nu[:me], mu=mu,
                                  active_set=np.array(rows, dtype=int),
                                  status=OPTIMAL, iterations=tried,
                                  regularized=False, phase1_used=True)
                best_obj = obj
    if best is None:
        return _failed(problem, point, INFEASIBLE, tried, False, True)
    best.iterations = tried
    return best


def dump_qp(problem: QpProblem) -> str:
    """Serialize a QP to the plain-text debug format (header 'QP n_d m_eq m_in')."""
    lines = [f"QP {problem.n_d} {problem.m_eq} {problem.m_in}"]

    def emit(arr):
        arr = np.atleast_2d(arr)
        for row in arr:
            lines.append(" ".join(f"{v:.17g}" for v in row))

    emit(problem.H)
    emit(problem.f)
    if problem.m_eq:
        emit(problem.A_eq)
        emit(problem.b_eq)
    if problem.m_in:
        emit(problem.A_in)
        emit(problem.b_in)
    return "\n".join(lines) + "\n"


def load_qp(text: str) -> QpProblem:
    """Parse the dump_qp format back into a problem."""
    tokens = text.split()
    if not tokens or tokens[0] != "QP":
        raise ValueError("dump must start with 'QP'")
    n, me, mi = int(tokens[1]), int(tokens[2]), int(tokens[3])
    vals = [float(t) for t in tokens[4:]]
    need = n * n + n + me * n + me + mi * n + mi
    if len(vals) != need:
        raise ValueError(f"expected {need} values, got {len(vals)}")
    pos = 0

    def take(count):
        nonlocal pos
        out = np.array(vals[pos:pos + count])
        pos += count
        return out

    H = take(n * n).reshape(n, n)
    f = take(n)
    A_eq = take(me * n).reshape(me, n) if me else None
    b_eq = take(me) if me else None
    A_in = take(mi * n).reshape(mi, n) if mi else None
    b_in = take(mi) if mi else None
    return QpProblem(H=H, f=f, A_eq=A_eq, b_eq=b_eq, A_in=A_in, b_in=b_in)
