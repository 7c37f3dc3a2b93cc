"""Finite Markov kernels for the two-player analysis.

Three chains are built here:
  * the exact game chain (pot, P1 stack, turn) with absorbing losses,
  * the pot-size chain on {1..x_max},
  * the mod-Lambda chain on (pot, P1 stack mod Lambda, turn), in two
    flavors: "formal" applies the four transition maps verbatim on every
    spin; "game" updates the second coordinate only on P1's spins and on
    antes.

Pot overflow in the mod chain is truncated: a Shtel at the cap leaves
the pot coordinate in place (the other coordinates still update).
Reaching pot x from 2 needs at least x-2 Shtels, so the truncated tail
mass decays at least geometrically in the cap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .rng import GANZ, HALB, NISHT, SHTEL

P_LOSS_1 = ("loss", 1)  # P1 eliminated: P2 wins
P_LOSS_2 = ("loss", 2)


@dataclass
class SparseKernel:
    states: list
    index: dict
    rows: list[list[tuple[int, float]]]
    absorbing: np.ndarray

    @property
    def n_states(self) -> int:
        return len(self.states)

    def validate(self, tol: float = 1e-12) -> None:
        for i, row in enumerate(self.rows):
            if self.absorbing[i]:
                if row:
                    raise ValueError(f"absorbing state {self.states[i]} has successors")
                continue
            total = sum(p for _, p in row)
            if abs(total - 1.0) > tol:
                raise ValueError(f"row {self.states[i]} sums to {total}")
            if any(p <= 0 for _, p in row):
                raise ValueError(f"row {self.states[i]} has a nonpositive probability")

    def to_csr(self) -> sp.csr_matrix:
        data, ri, ci = [], [], []
        for i, row in enumerate(self.rows):
            for j, p in row:
                ri.append(i)
                ci.append(j)
                data.append(p)
        return sp.csr_matrix((data, (ri, ci)), shape=(self.n_states, self.n_states))

    def successors(self, state) -> list[tuple[object, float]]:
        i = self.index[state]
        return [(self.states[j], p) for j, p in self.rows[i]]


class _Builder:
    def __init__(self):
        self.states: list = []
        self.index: dict = {}
        self.rows: list[list[tuple[int, float]]] = []
        self.absorbing: list[bool] = []

    def add(self, state, absorbing: bool = False) -> int:
        if state in self.index:
            return self.index[state]
        i = len(self.states)
        self.index[state] = i
        self.states.append(state)
        self.rows.append([])
        self.absorbing.append(absorbing)
        return i

    def set_row(self, i: int, succ: dict) -> None:
        self.rows[i] = sorted(succ.items())

    def kernel(self) -> SparseKernel:
        k = SparseKernel(
            states=self.states,
            index=self.index,
            rows=self.rows,
            absorbing=np.array(self.absorbing, dtype=bool),
        )
        k.validate()
        return k


# ---------------------------------------------------------------------------
# exact two-player game chain


def game_chain_start(n: int) -> tuple[int, int, int]:
    return (2, n - 1, 1)


def build_game_chain(n: int) -> SparseKernel:
    """Exact chain over reachable (pot, P1 stack, turn) states, k=2.

    P2's stack is pot-conservation-implied (2n - pot - stack).  Loss
    states are absorbing and labelled by the eliminated player.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    b = _Builder()
    b.add(P_LOSS_1, absorbing=True)
    b.add(P_LOSS_2, absorbing=True)
    start = game_chain_start(n)
    frontier = [start]
    b.add(start)
    while frontier:
        state = frontier.pop()
        i = b.index[state]
        x, y, z = state
        p2 = 2 * n - x - y
        succ: dict[int, float] = {}
        for outcome in (NISHT, GANZ, HALB, SHTEL):
            nxt = _game_step(n, x, y, p2, z, outcome)
            absorbing = nxt in (P_LOSS_1, P_LOSS_2)
            known = nxt in b.index
            j = b.add(nxt, absorbing=absorbing)
            if not known and not absorbing:
                frontier.append(nxt)
            succ[j] = succ.get(j, 0.0) + 0.25
        b.set_row(i, succ)
    return b.kernel()


def _game_step(n, x, y, p2, z, outcome):
    spinner_stack = y if z == 1 else p2
    other_stack = p2 if z == 1 else y
    if outcome == NISHT:
        pass
    elif outcome == HALB:
        spinner_stack += x // 2
        x -= x // 2
    elif outcome == SHTEL:
        if spinner_stack == 0:
            return P_LOSS_1 if z == 1 else P_LOSS_2
        spinner_stack -= 1
        x += 1
    else:  # GANZ, ante folded in
        spinner_stack += x
        if other_stack == 0:
            return P_LOSS_2 if z == 1 else P_LOSS_1
        spinner_stack -= 1
        other_stack -= 1
        x = 2
    new_y = spinner_stack if z == 1 else other_stack
    return (x, new_y, 3 - z)


# ---------------------------------------------------------------------------
# pot chain


def build_pot_chain(x_max: int) -> SparseKernel:
    """Markov chain of pot sizes alone; Shtel at the cap self-loops."""
    if x_max < 4:
        raise ValueError("x_max >= 4 required")
    b = _Builder()
    for x in range(1, x_max + 1):
        b.add(x)
    for x in range(1, x_max + 1):
        succ: dict[int, float] = {}
        for nxt in (2, (x + 1) // 2, x, min(x + 1, x_max)):
            j = b.index[nxt]
            succ[j] = succ.get(j, 0.0) + 0.25
        b.set_row(b.index[x], succ)
    return b.kernel()


# ---------------------------------------------------------------------------
# mod-Lambda chain


@dataclass(frozen=True)
class ModChainSpec:
    n: int
    p_max: int
    flavor: str = "game"  # "game" | "formal"

    def __post_init__(self):
        if self.flavor not in ("game", "formal"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.p_max < 4:
            raise ValueError("p_max >= 4 required")

    @property
    def lam(self) -> int:
        return 2 * self.n + 3

    @property
    def start(self) -> tuple[int, int, int]:
        return (2, (self.n - 1) % self.lam, 1)

    def is_end_state(self, state: tuple[int, int, int]) -> bool:
        """Non-dreidel state: the y-residue read as a token count in
        [0, Lambda) is negative-by-wraparound or breaks conservation."""
        x, y, _ = state
        n = self.n
        return y in (2 * n + 1, 2 * n + 2) or x + y > 2 * n

    def end_states(self) -> list[tuple[int, int, int]]:
        return [
            (x, y, z)
            for x in range(1, self.p_max + 1)
            for y in range(self.lam)
            for z in (1, 2)
            if self.is_end_state((x, y, z))
        ]


def mod_chain_step(spec: ModChainSpec, state: tuple[int, int, int], outcome: int) -> tuple[int, int, int]:
    lam = spec.lam
    x, y, z = state
    zs = 3 - z
    cap = spec.p_max
    if spec.flavor == "formal" or z == 1:
        if outcome == NISHT:
            return (x, y, zs)
        if outcome == GANZ:
            return (2, (y + x - 1) % lam, zs)
        if outcome == HALB:
            return (x - x // 2, (y + x // 2) % lam, zs)
        return (min(x + 1, cap), (y - 1) % lam, zs)
    # game flavor, P2's spin: P1's stack moves only through antes
    if outcome == NISHT:
        return (x, y, zs)
    if outcome == GANZ:
        return (2, (y - 1) % lam, zs)
    if outcome == HALB:
        return (x - x // 2, y, zs)
    return (min(x + 1, cap), y, zs)


def build_mod_chain(spec: ModChainSpec) -> SparseKernel:
    b = _Builder()
    for x in range(1, spec.p_max + 1):
        for y in range(spec.lam):
            for z in (1, 2):
                b.add((x, y, z))
    for state in list(b.states):
        succ: dict[int, float] = {}
        for outcome in (NISHT, GANZ, HALB, SHTEL):
            j = b.index[mod_chain_step(spec, state, outcome)]
            succ[j] = succ.get(j, 0.0) + 0.25
        b.set_row(b.index[state], succ)
    return b.kernel()


def squared_slice_chain(kernel: SparseKernel, keep) -> tuple[sp.csr_matrix, list]:
    """Two-step chain restricted to the states selected by `keep`.

    For the period-2 mod chain with keep = (z == 1) this is the chain
    with transition probabilities q_ij = (P^2)_ij, which is aperiodic.
    """
    csr = kernel.to_csr()
    p2 = (csr @ csr).tocsr()
    idx = [i for i, s in enumerate(kernel.states) if keep(s)]
    sub = p2[idx, :][:, idx]
    return sp.csr_matrix(sub), [kernel.states[i] for i in idx]


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class ChainDiagnostics:
    irreducible: bool
    period: int
    stationary: np.ndarray | None = None
    mean_return: np.ndarray | None = None
    residual: float = float("nan")


def matrix_period(csr: sp.csr_matrix) -> int:
    """Period via BFS levels: gcd of level[u] + 1 - level[v] over edges."""
    n = csr.shape[0]
    level = np.full(n, -1, dtype=np.int64)
    level[0] = 0
    queue = [0]
    indptr, indices = csr.indptr, csr.indices
    while queue:
        u = queue.pop()
        for j in indices[indptr[u]:indptr[u + 1]]:
            if level[j] < 0:
                level[j] = level[u] + 1
                queue.append(j)
    g = 0
    rows, cols = csr.nonzero()
    for u, v in zip(rows, cols):
        if level[u] >= 0 and level[v] >= 0:
            g = gcd(g, abs(int(level[u]) + 1 - int(level[v])))
    return g if g else 1


def diagnostics(kernel_or_csr, compute_stationary: bool = False,
                tol: float = 1e-12, max_iter: int = 2_000_000) -> ChainDiagnostics:
    if isinstance(kernel_or_csr, SparseKernel):
        csr = kernel_or_csr.to_csr()
    else:
        csr = kernel_or_csr.tocsr()
    n_comp, _ = connected_components(csr, directed=True, connection="strong")
    irreducible = n_comp == 1
    period = matrix_period(csr) if irreducible else 0
    diag = ChainDiagnostics(irreducible=irreducible, period=period)
    if compute_stationary:
        pi, residual = power_iteration(csr, tol=tol, max_iter=max_iter)
        diag.stationary = pi
        diag.mean_return = 1.0 / pi
        diag.residual = residual
    return diag


def power_iteration(csr: sp.csr_matrix, tol: float = 1e-12, max_iter: int = 2_000_000) -> tuple[np.ndarray, float]:
    """Stationary row vector of an ergodic chain by repeated multiplication."""
    n = csr.shape[0]
    pi = np.full(n, 1.0 / n)
    pt = csr.T.tocsr()
    for _ in range(max_iter):
        nxt = pt @ pi
        nxt /= nxt.sum()
        residual = float(np.abs(nxt - pi).sum())
        pi = nxt
        if residual < tol:
            return pi, float(np.abs(pt @ pi - pi).sum())
    raise RuntimeError(f"power iteration did not reach {tol} in {max_iter} steps")
