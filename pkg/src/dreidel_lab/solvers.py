"""Linear-system solvers for absorption times, hitting probabilities and
mean return times, with an exact-rational route for small chains."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .kernels import SparseKernel

try:
    from gmpy2 import mpq as _rational
except ImportError:  # pragma: no cover - gmpy2 is an optional speedup
    _rational = Fraction


class SolverError(RuntimeError):
    pass


def _refine(lu, a: sp.csr_matrix, b: np.ndarray, x: np.ndarray, rounds: int = 2) -> np.ndarray:
    for _ in range(rounds):
        r = b - a @ x
        if np.abs(r).max() < 1e-14 * max(1.0, np.abs(b).max()):
            break
        x = x + lu.solve(r)
    return x


def _solve_checked(a: sp.csr_matrix, b: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    lu = spla.splu(a.tocsc())
    x = lu.solve(b)
    x = _refine(lu, a, b, x)
    resid = float(np.abs(b - a @ x).max())
    if not np.isfinite(resid) or resid > tol * max(1.0, float(np.abs(x).max())):
        raise SolverError(f"linear solve residual {resid} above tolerance")
    return x


# ---------------------------------------------------------------------------
# absorption


@dataclass
class AbsorptionResult:
    kernel: SparseKernel
    transient: list
    times: np.ndarray
    absorb_probs: dict
    start: object

    @property
    def expected_time(self) -> float:
        return float(self.times[self._ti[self.kernel.index[self.start]]])

    def expected_time_from(self, state) -> float:
        return float(self.times[self._ti[self.kernel.index[state]]])

    def absorb_prob_from(self, state, label) -> float:
        return float(self.absorb_probs[label][self._ti[self.kernel.index[state]]])

    def __post_init__(self):
        self._ti = {i: t for t, i in enumerate(self.transient)}


def absorption_stats(kernel: SparseKernel, start) -> AbsorptionResult:
    """Expected absorption time and absorption split, exact linear solve.

    Solves t = 1 + Q t over the transient states; every transient state
    must reach an absorbing state.
    """
    absorbing = kernel.absorbing
    transient_idx = [i for i in range(kernel.n_states) if not absorbing[i]]
    pos = {i: t for t, i in enumerate(transient_idx)}
    m = len(transient_idx)
    data, ri, ci = [], [], []
    rhs_by_label: dict = {}
    for t, i in enumerate(transient_idx):
        for j, p in kernel.rows[i]:
            if absorbing[j]:
                label = kernel.states[j]
                rhs_by_label.setdefault(label, np.zeros(m))[t] += p
            else:
                ri.append(t)
                ci.append(pos[j])
                data.append(p)
    q = sp.csr_matrix((data, (ri, ci)), shape=(m, m))
    a = sp.identity(m, format="csr") - q
    lu = spla.splu(a.tocsc())
    ones = np.ones(m)
    times = _refine(lu, a, ones, lu.solve(ones))
    resid = float(np.abs(ones - a @ times).max())
    if not np.isfinite(resid) or resid > 1e-12 * max(1.0, float(np.abs(times).max())):
        raise SolverError(f"absorption solve residual {resid}")
    probs = {}
    for label, rhs in sorted(rhs_by_label.items(), key=lambda kv: str(kv[0])):
        probs[label] = _refine(lu, a, rhs, lu.solve(rhs))
    result = AbsorptionResult(
        kernel=kernel,
        transient=transient_idx,
        times=times,
        absorb_probs=probs,
        start=start,
    )
    return result


def absorption_time_exact(kernel: SparseKernel, start) -> Fraction:
    """Expected absorption time by exact rational elimination.

    Every transition probability is 1/4 or a sum of such, so the system
    is solved over the rationals with no rounding at all.
    """
    absorbing = kernel.absorbing
    transient_idx = [i for i in range(kernel.n_states) if not absorbing[i]]
    pos = {i: t for t, i in enumerate(transient_idx)}
    m = len(transient_idx)
    zero = _rational(0)
    rows = [[zero] * m for _ in range(m)]
    rhs = [_rational(1)] * m
    for t, i in enumerate(transient_idx):
        rows[t][t] = rows[t][t] + _rational(1)
        for j, p in kernel.rows[i]:
            if not absorbing[j]:
                # probabilities are dyadic multiples of 1/4
                frac = Fraction(p).limit_denominator(1 << 30)
                rows[t][pos[j]] = rows[t][pos[j]] - _rational(frac.numerator, frac.denominator)
    sol = solve_rational(rows, rhs)
    t = sol[pos[kernel.index[start]]]
    return Fraction(int(t.numerator), int(t.denominator))


def solve_rational(rows: list[list], rhs: list) -> list:
    """Gaussian elimination with exact rational arithmetic."""
    m = len(rows)
    a = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(m):
        piv = next((r for r in range(col, m) if a[r][col] != 0), None)
        if piv is None:
            raise SolverError("singular rational system")
        a[col], a[piv] = a[piv], a[col]
        inv = 1 / a[col][col]
        a[col] = [v * inv for v in a[col]]
        pivot_row = a[col]
        for r in range(m):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                row = a[r]
                a[r] = [v - f * pv for v, pv in zip(row, pivot_row)]
    return [a[r][m] for r in range(m)]


# ---------------------------------------------------------------------------
# hitting probabilities


@dataclass(frozen=True)
class HitQuery:
    start: object
    target: frozenset
    avoid: frozenset
    first_step_exempt: bool = False

    def __post_init__(self):
        if self.target & self.avoid:
            raise ValueError("target and avoid sets overlap")


class HitSolver:
    """Factors the hitting system for one (target, avoid) boundary once,
    then answers the probability from any start."""

    def __init__(self, kernel: SparseKernel, target: frozenset, avoid: frozenset,
                 tol: float = 1e-12):
        if target & avoid:
            raise ValueError("target and avoid sets overlap")
        self.kernel = kernel
        self.target = target
        self.avoid = avoid
        boundary = {kernel.index[s] for s in target | avoid}
        target_idx = {kernel.index[s] for s in target}
        unknown = [i for i in range(kernel.n_states) if i not in boundary]
        pos = {i: u for u, i in enumerate(unknown)}
        m = len(unknown)
        data, ri, ci = [], [], []
        b = np.zeros(m)
        for u, i in enumerate(unknown):
            for j, p in kernel.rows[i]:
                if j in target_idx:
                    b[u] += p
                elif j in boundary:
                    pass
                else:
                    ri.append(u)
                    ci.append(pos[j])
                    data.append(p)
        p_uu = sp.csr_matrix((data, (ri, ci)), shape=(m, m))
        a = sp.identity(m, format="csr") - p_uu
        h = _solve_checked(a, b, tol=tol)
        values = np.zeros(kernel.n_states)
        for s in target:
            values[kernel.index[s]] = 1.0
        for u, i in enumerate(unknown):
            values[i] = h[u]
        self.values = values

    def prob(self, start, first_step_exempt: bool = False) -> float:
        kernel = self.kernel
        if start in self.target:
            return 1.0
        if start in self.avoid and not first_step_exempt:
            return 0.0
        if first_step_exempt:
            i = kernel.index[start]
            return float(sum(p * self.values[j] for j, p in kernel.rows[i]))
        return float(self.values[kernel.index[start]])


def hit_prob(kernel: SparseKernel, query: HitQuery, tol: float = 1e-12) -> float:
    solver = HitSolver(kernel, query.target, query.avoid, tol=tol)
    return solver.prob(query.start, first_step_exempt=query.first_step_exempt)


# ---------------------------------------------------------------------------
# mean return time


def mean_return_time(kernel: SparseKernel, state, tol: float = 1e-12) -> float:
    """Expected number of steps to return to `state` (flow-through chain)."""
    s = kernel.index[state]
    unknown = [i for i in range(kernel.n_states) if i != s]
    pos = {i: u for u, i in enumerate(unknown)}
    m = len(unknown)
    data, ri, ci = [], [], []
    b = np.ones(m)
    for u, i in enumerate(unknown):
        for j, p in kernel.rows[i]:
            if j != s:
                ri.append(u)
                ci.append(pos[j])
                data.append(p)
    a = sp.identity(m, format="csr") - sp.csr_matrix((data, (ri, ci)), shape=(m, m))
    t = _solve_checked(a, b, tol=tol)
    return float(1.0 + sum(p * (t[pos[j]] if j != s else 0.0) for j, p in kernel.rows[s]))
