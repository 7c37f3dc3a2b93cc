"""Gamelet signature enumeration and the counting-construction checks.

A gamelet of length p*k+1 ending in a Ganz starts from the canonical
configuration (pot = k, overdraft) and is summarized by the payoff
signature of the first k-1 roles; the last role's payoff is implied by
pot conservation.  Counting is exact (Python integers throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .game import GameConfig, Spin, apply_spin
from .epochs import new_custom
from .reporting import BoundReport
from .rng import GANZ, HALB, NISHT, SHTEL


@dataclass
class SignatureTable:
    k: int
    p: int
    counts: dict[tuple[int, ...], int] = field(default_factory=dict)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def occupied(self) -> int:
        return len(self.counts)

    def in_range_box(self) -> bool:
        lo = -self.p * self.k - 1
        hi = (self.k - 1) * (2 * self.p + 1)
        return all(lo <= u <= hi for sig in self.counts for u in sig)

    def rows(self) -> list[list[int]]:
        return [[*sig, c] for sig, c in sorted(self.counts.items())]


def _advance(pot: int, deltas: list[int], player: int, outcome: int, k: int) -> int:
    """One overdraft spin on the (pot, role deltas) summary; returns pot."""
    if outcome == GANZ:
        deltas[player] += pot
        for q in range(k):
            deltas[q] -= 1
        return k
    if outcome == HALB:
        deltas[player] += pot // 2
        return pot - pot // 2
    if outcome == SHTEL:
        deltas[player] -= 1
        return pot + 1
    return pot


def enumerate_signatures(k: int, p: int, max_pk: int = 14) -> SignatureTable:
    """Count all 4^(p*k) gamelets of length p*k+1 ending in a Ganz.

    Exact dynamic count over (pot, delta) summaries: sequences with the
    same running pot and per-role deltas are interchangeable, and the
    last role's delta is pot-implied, so the state space stays tiny.
    """
    if k < 2 or p < 1:
        raise ValueError("need k >= 2 and p >= 1")
    if p * k > max_pk:
        raise ValueError(f"p*k = {p * k} too large to enumerate")
    # state: (pot, deltas of roles 0..k-2); role k-1's delta = k - pot - sum
    layer: dict[tuple, int] = {(k, (0,) * (k - 1)): 1}
    for t in range(p * k):
        player = t % k
        nxt: dict[tuple, int] = {}
        for (pot, ds), cnt in layer.items():
            for outcome in (NISHT, GANZ, HALB, SHTEL):
                full = list(ds) + [k - pot - sum(ds)]
                pot2 = _advance(pot, full, player, outcome, k)
                key = (pot2, tuple(full[: k - 1]))
                nxt[key] = nxt.get(key, 0) + cnt
        layer = nxt
    # final spin: a Ganz by role (p*k) mod k
    player = (p * k) % k
    table = SignatureTable(k=k, p=p)
    for (pot, ds), cnt in layer.items():
        full = list(ds) + [k - pot - sum(ds)]
        _advance(pot, full, player, GANZ, k)
        sig = tuple(full[: k - 1])
        table.counts[sig] = table.counts.get(sig, 0) + cnt
    return table


def gamelet_signature(k: int, outcomes: list[int]) -> tuple[int, ...]:
    """Signature of one concrete gamelet (must end in a Ganz)."""
    if outcomes[-1] != GANZ:
        raise ValueError("gamelet must end with a Ganz")
    pot = k
    deltas = [0] * k
    for t, o in enumerate(outcomes):
        pot = _advance(pot, deltas, t % k, o, k)
    if sum(deltas) != 0:
        raise AssertionError("gamelet payoffs must be zero-sum")
    return tuple(deltas[: k - 1])


def minkowski_check(table: SignatureTable) -> BoundReport:
    """Power-mean and coarse-grid lower bounds on sums of k-th powers."""
    k, p = table.k, table.p
    rep = BoundReport(f"Minkowski counts, k={k}, p={p}")
    total = table.total
    power_sum = sum(c**k for c in table.counts.values())
    rep.check_ge("total == 4^pk", float(total == 4 ** (p * k)), 1.0)
    rep.check_ge("signatures inside range box", float(table.in_range_box()), 1.0)
    # exact integer comparisons, reported as 0/1 flags
    pm_ok = power_sum * table.occupied ** (k - 1) >= total**k
    rep.check_ge("sum x^k * cells^(k-1) >= total^k", float(pm_ok), 1.0)
    # the grid has at most (3pk)^(k-1) cells, so the power mean also gives
    # sum x^k >= total^k / ((3pk)^(k-1))^(k-1); the k=2 case collapses to
    # the simpler total^k / (3pk)^(k-1) form, which is hard-checked
    grid_ok = power_sum * ((3 * p * k) ** (k - 1)) ** (k - 1) >= total**k
    rep.check_ge("sum x^k * grid^(k-1) >= total^k", float(grid_ok), 1.0)
    coarse_ok = power_sum * (3 * p * k) ** (k - 1) >= (4 ** (p * k)) ** k
    if k == 2:
        rep.check_ge("sum x^k >= (4^pk)^k / (3pk)^(k-1)", float(coarse_ok), 1.0)
    else:
        rep.report_only("sum x^k >= (4^pk)^k / (3pk)^(k-1)", float(coarse_ok))
    rep.report_only("sum x^k (log10)", math.log10(power_sum))
    rep.report_only("occupied cells", float(table.occupied))
    return rep


def choose_alpha(k: int, grid_step: float = 1e-4) -> float:
    """Largest grid point in (0, 1/2) satisfying the epoch-density margin
    (alpha/64^k)^alpha (1-alpha)^(1-alpha) > 0.76."""
    if k < 2:
        raise ValueError("k >= 2 required")
    steps = int(0.5 / grid_step)
    for i in range(steps - 1, 0, -1):
        alpha = i * grid_step
        value = (alpha / 64.0**k) ** alpha * (1 - alpha) ** (1 - alpha)
        if value > 0.76:
            return alpha
    raise ValueError("no grid point satisfies the margin inequality")


def random_gamelet(k: int, p: int, rng) -> list[int]:
    codes = [int(c) for c in rng.integers(0, 4, size=p * k)]
    codes.append(GANZ)
    return codes


def concat_check(k: int, p: int, n_tuples: int, rng, pool_size: int = 4000) -> BoundReport:
    """Sample signature-matched k-tuples of gamelets and verify that each
    concatenation is legal and zero-payoff for every player.

    Legality is checked by replaying the concatenation through the real
    rules engine from a fresh dreidel start with n just above the block
    length: no player may ever be eliminated.
    """
    n = p * k * k + k + 1
    rep = BoundReport(f"gamelet concatenation, k={k}, p={p}, n={n}")
    pool: dict[tuple[int, ...], list[list[int]]] = {}
    for _ in range(pool_size):
        g = random_gamelet(k, p, rng)
        pool.setdefault(gamelet_signature(k, g), []).append(g)
    sigs = sorted(pool)
    failures = 0
    for t in range(n_tuples):
        sig = sigs[int(rng.integers(0, len(sigs)))]
        bucket = pool[sig]
        picks = [bucket[int(rng.integers(0, len(bucket)))] for _ in range(k)]
        block = [code for g in picks for code in g]
        if not _zero_payoff_and_legal(k, n, block):
            failures += 1
    rep.check_le("illegal or nonzero-payoff concatenations", float(failures), 0.0)
    rep.report_only("tuples checked", float(n_tuples))
    rep.report_only("distinct signatures in pool", float(len(sigs)))
    return rep


def _zero_payoff_and_legal(k: int, n: int, outcomes: list[int]) -> bool:
    config = GameConfig(k=k, n=n, overdraft=False)
    state = new_custom([n] * k, config)
    start_stacks = state.stacks
    for o in outcomes:
        state, events = apply_spin(state, Spin(o))
        if any(ev.kind == "eliminated" for ev in events):
            return False
    return state.stacks == start_stacks and state.pot == k
