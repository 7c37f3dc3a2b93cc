"""Deterministic long-game construction and low-epoch game counting.

The four-phase construction drives any overdraft configuration to a
balanced boundary, stacks up guaranteed epochs with all-Ganz rounds,
burns spins in zero-payoff gamelet blocks, and closes with a Shtel
staircase so the last player wins on the final spin of spin ks exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import GameConfig, GameState, Spin, apply_spin
from .epochs import new_custom
from .gamelets import choose_alpha, random_gamelet
from .rng import GANZ, HALB, NISHT, SHTEL


class ConstructionError(RuntimeError):
    pass


class InfeasibleError(ConstructionError):
    """The requested game length cannot accommodate the four phases."""


# ---------------------------------------------------------------------------
# restorative phase


@dataclass
class RestorativePlan:
    outcomes: list[int]
    end_state: GameState
    m: int  # minimum stack at the endpoint
    spins: int


def _endpoint_valid(state: GameState) -> bool:
    k = state.config.k
    return (
        state.pot == k
        and state.turn == 0
        and max(state.stacks) - min(state.stacks) <= 1
    )


def restorative_sequence(state: GameState) -> RestorativePlan:
    """Deterministic spin assignment to (pot = k, near-equal stacks, P1).

    Halbs shrink the pot to two tokens (a Shtel if it held only one),
    Nishts hand the turn back to P1, balancing rounds move one token per
    round from a richest to a poorest player, and k-2 single-Shtel
    rounds lift the pot from 2 to k.
    """
    cfg = state.config
    if not cfg.overdraft:
        raise ConstructionError("restorative phase assumes overdraft mode")
    if state.pot < 1:
        raise ConstructionError("restorative phase needs a nonempty pot")
    k = cfg.k
    outcomes: list[int] = []

    def spin(o: int) -> None:
        nonlocal state
        state, _ = apply_spin(state, Spin(o))
        outcomes.append(o)

    if not _endpoint_valid(state):
        if state.pot == 1:
            spin(SHTEL)
        while state.pot > 2:
            spin(HALB)
        while state.turn != 0:
            spin(NISHT)
        while max(state.stacks) - min(state.stacks) > 1:
            rich = state.stacks.index(max(state.stacks))
            poor = state.stacks.index(min(state.stacks))
            for seat in range(k):
                if seat == rich:
                    spin(SHTEL)
                elif seat == poor:
                    spin(HALB)
                else:
                    spin(NISHT)
        for _ in range(k - 2):
            rich = state.stacks.index(max(state.stacks))
            for seat in range(k):
                spin(SHTEL if seat == rich else NISHT)

    if not _endpoint_valid(state):
        raise ConstructionError("restorative endpoint validation failed")
    return RestorativePlan(
        outcomes=outcomes,
        end_state=state,
        m=min(state.stacks),
        spins=len(outcomes),
    )


# ---------------------------------------------------------------------------
# four-phase construction


@dataclass
class PhasePlan:
    k: int
    n: int
    s: int
    alpha: float
    t_s: int
    m: int
    phase_spins: tuple[int, int, int, int]

    @property
    def total_spins(self) -> int:
        return sum(self.phase_spins)


@dataclass
class ConstructedGame:
    plan: PhasePlan
    outcomes: list[int]
    epochs: int
    final_w: int

    @property
    def total_spins(self) -> int:
        return len(self.outcomes)


def construct_long_game(
    k: int,
    n: int,
    s: int,
    alpha: float | None = None,
    rng=None,
    start: GameState | None = None,
) -> ConstructedGame:
    """Assemble a legal metaslowdel game of exactly k*s spins with at
    least floor(alpha*s) epochs, ending with the last player winning."""
    if rng is None:
        rng = np.random.default_rng(0)
    if alpha is None:
        alpha = choose_alpha(k)
    p = (n - k - 1) // (k * k)
    if p < 1:
        raise InfeasibleError(f"n={n} too small for gamelet blocks with k={k}")
    config = GameConfig(k=k, n=n, overdraft=True)
    if start is None:
        start = new_custom([n] * k, config)
    plan1 = restorative_sequence(start)
    m = plan1.m
    t_s = math.floor(alpha * s)
    phase1 = plan1.spins
    phase2 = k * t_s
    phase4 = k * (m + 2)
    phase3 = k * (s - m - 2) - phase1 - phase2
    if phase3 < 0:
        raise InfeasibleError(
            f"s={s} too small: needs at least {m + 2 + t_s} rounds plus the "
            f"restorative phase ({phase1} spins)"
        )
    outcomes = list(plan1.outcomes)
    outcomes += [GANZ] * phase2

    block_len = k * (p * k + 1)
    n_blocks, fill = divmod(phase3, block_len)
    for _ in range(n_blocks):
        g = random_gamelet(k, p, rng)
        outcomes += g * k
    outcomes += [NISHT] * fill

    # closing staircase: simulate forward to know who still holds a token
    state = start
    for o in outcomes:
        state, _ = apply_spin(state, Spin(o))
    for _ in range(m):
        outcomes += [SHTEL] * k
        for _ in range(k):
            state, _ = apply_spin(state, Spin.SHTEL)
    cond_round = [SHTEL if state.stacks[seat] >= 1 else NISHT for seat in range(k)]
    outcomes += cond_round
    for o in cond_round:
        state, _ = apply_spin(state, Spin(o))
    outcomes += [NISHT] * (k - 1) + [GANZ]

    plan = PhasePlan(
        k=k, n=n, s=s, alpha=alpha, t_s=t_s, m=m,
        phase_spins=(phase1, phase2, phase3, phase4),
    )
    epochs, final_w = validate_constructed(start, n, outcomes, t_s)
    return ConstructedGame(plan=plan, outcomes=outcomes, epochs=epochs, final_w=final_w)


def validate_constructed(start: GameState, n: int, outcomes: list[int], t_s: int) -> tuple[int, int]:
    """Replay a constructed game and enforce its contract.

    Raises ConstructionError unless: the last player's token count stays
    inside [0, k(n-1)] and every player's stays nonnegative at every
    epoch end except the last, where the last player goes home; the
    epoch count is at least t_s.
    """
    k = start.config.k
    state = start
    epochs = 0
    total = len(outcomes)
    if total % k != 0:
        raise ConstructionError("spin count not a whole number of rounds")
    upper = k * (n - 1)
    went_home_at_end = False
    for t, o in enumerate(outcomes):
        state, _ = apply_spin(state, Spin(o))
        if t % k == k - 1 and o == GANZ:
            epochs += 1
            w = state.stacks[k - 1]
            gone = w < 0 or w > upper
            others_gone = any(stk < 0 for stk in state.stacks[: k - 1])
            if t == total - 1:
                went_home_at_end = gone
            elif gone or others_gone:
                raise ConstructionError(f"a player went home early, at spin {t + 1}")
    if not went_home_at_end:
        raise ConstructionError("last player did not go home on the final spin")
    if epochs < t_s:
        raise ConstructionError(f"only {epochs} epochs, need at least {t_s}")
    return epochs, state.stacks[k - 1]


# ---------------------------------------------------------------------------
# exhaustive low-epoch counting


@dataclass
class LowEpochCount:
    k: int
    s: int
    t_s: int
    n: int
    total_games: int
    low_epoch_games: int
    bound: int
    by_epochs: dict[int, int] = field(default_factory=dict)

    @property
    def bound_holds(self) -> bool:
        return self.low_epoch_games <= self.bound

    @property
    def mean_epochs(self) -> float:
        if not self.total_games:
            return float("nan")
        return sum(e * c for e, c in self.by_epochs.items()) / self.total_games


def low_epoch_bound(k: int, s: int, t_s: int) -> int:
    return 4 ** (s * (k - 1)) * sum(math.comb(s, r) * 3 ** (s - r) for r in range(t_s))


def count_low_epoch_games(k: int, s: int, t_s: int, n: int, max_ks: int = 12,
                          chunk: int = 1 << 20) -> LowEpochCount:
    """Brute-force every outcome sequence of k*s spins and count the
    games where the last player goes home exactly at spin k*s, split by
    epoch count.

    Enumeration runs in vectorized chunks over the base-4 encoding of
    the sequence; only the pot and the last player's stack matter.
    """
    ks = k * s
    if ks > max_ks:
        raise ValueError(f"k*s = {ks} too large to enumerate")
    upper = k * (n - 1)
    total_seqs = 4**ks
    by_epochs: dict[int, int] = {}
    for lo in range(0, total_seqs, chunk):
        size = min(chunk, total_seqs - lo)
        idx = np.arange(lo, lo + size, dtype=np.int64)
        pot = np.full(size, k, dtype=np.int64)
        w = np.full(size, n - 1, dtype=np.int64)
        epochs = np.zeros(size, dtype=np.int64)
        alive = np.ones(size, dtype=bool)
        went_home = np.zeros(size, dtype=bool)
        for t in range(ks):
            o = (idx >> (2 * t)) & 3
            last_player = t % k == k - 1
            gm = o == GANZ
            hm = o == HALB
            sm = o == SHTEL
            if last_player:
                w[gm] += pot[gm]
                w[hm] += pot[hm] // 2
                w[sm] -= 1
            w[gm] -= 1  # everyone antes after a Ganz
            pot[gm] = k
            pot[hm] -= pot[hm] // 2
            pot[sm] += 1
            if last_player:
                ends = gm & alive
                out = ends & ((w < 0) | (w > upper))
                if t == ks - 1:
                    went_home = out
                    epochs[ends] += 1
                else:
                    alive &= ~out  # game over before spin ks
                    epochs[ends & alive] += 1
        valid = went_home & alive
        counts = np.bincount(epochs[valid]) if valid.any() else np.array([], dtype=np.int64)
        for e, c in enumerate(counts):
            if c:
                by_epochs[e] = by_epochs.get(e, 0) + int(c)
    total = sum(by_epochs.values())
    low = sum(c for e, c in by_epochs.items() if e < t_s)
    return LowEpochCount(
        k=k, s=s, t_s=t_s, n=n,
        total_games=total,
        low_epoch_games=low,
        bound=low_epoch_bound(k, s, t_s),
        by_epochs=by_epochs,
    )
