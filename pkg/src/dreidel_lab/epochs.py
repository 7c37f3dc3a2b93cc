"""Epoch machinery for slowdel / metaslowdel and arbitrary-start games.

An epoch runs in rounds of k spins and closes on the first round whose
final spin (the last player's) is a Ganz; the ante that follows belongs
to the same epoch.  The last player's per-epoch payoff Y_i drives the
stopping-time analysis.
"""

from __future__ import annotations

from dataclasses import dataclass

from .game import GameConfig, GameState, GameError, Spin, apply_spin


class EpochBoundaryError(GameError):
    """An epoch operation was called off an epoch boundary."""


@dataclass(frozen=True)
class EpochRecord:
    epoch_index: int
    spins_in_epoch: int
    payoff: tuple[int, ...]
    end_stacks: tuple[int, ...]
    outcomes: tuple[Spin, ...]

    @property
    def rounds(self) -> int:
        return self.spins_in_epoch // len(self.payoff)


@dataclass(frozen=True)
class EpochFlags:
    landslide: bool
    rounds: int


@dataclass(frozen=True)
class StoppingRecord:
    w0: int
    t: int
    s_t: int
    u: int
    side: str  # "lower" (last player ruined) | "upper" (opponents ruined)
    payoffs: tuple[int, ...] = ()


def new_custom(stacks: tuple[int, ...] | list[int], config: GameConfig) -> GameState:
    """Metadreidel start: arbitrary stacks, opening ante already resolved."""
    stacks = tuple(stacks)
    if len(stacks) != config.k:
        raise ValueError(f"expected {config.k} stacks, got {len(stacks)}")
    if not config.overdraft and any(s < 1 for s in stacks):
        raise ValueError("every player needs a token for the opening ante")
    return GameState(
        config=config,
        pot=config.k,
        stacks=tuple(s - 1 for s in stacks),
        turn=0,
        alive=(True,) * config.k,
        spin_index=0,
    )


def at_epoch_boundary(state: GameState) -> bool:
    return state.pot == state.config.k and state.turn == 0 and all(state.alive)


def run_epoch(state: GameState, rng, epoch_index: int = 0) -> tuple[EpochRecord, GameState]:
    """Play one epoch of the free-running overdraft process."""
    cfg = state.config
    if not cfg.overdraft:
        raise EpochBoundaryError("epochs require overdraft mode")
    if not at_epoch_boundary(state):
        raise EpochBoundaryError("state is not at an epoch boundary")
    k = cfg.k
    start_stacks = state.stacks
    outcomes: list[Spin] = []
    while True:
        round_closed_epoch = False
        for j in range(k):
            outcome = Spin(int(rng.integers(0, 4)))
            outcomes.append(outcome)
            state, _ = apply_spin(state, outcome)
            if j == k - 1 and outcome is Spin.GANZ:
                round_closed_epoch = True
        if round_closed_epoch:
            break
        if len(outcomes) >= cfg.spin_cap:
            raise GameError(f"epoch exceeded {cfg.spin_cap} spins")
    record = EpochRecord(
        epoch_index=epoch_index,
        spins_in_epoch=len(outcomes),
        payoff=tuple(e - s for e, s in zip(state.stacks, start_stacks)),
        end_stacks=state.stacks,
        outcomes=tuple(outcomes),
    )
    return record, state


def classify_epoch(record: EpochRecord) -> EpochFlags:
    """Landslide: exactly one round of k-1 Shtels followed by a Ganz."""
    k = len(record.payoff)
    landslide = (
        record.spins_in_epoch == k
        and all(o is Spin.SHTEL for o in record.outcomes[: k - 1])
        and record.outcomes[-1] is Spin.GANZ
    )
    return EpochFlags(landslide=landslide, rounds=record.rounds)


def lost_players(record: EpochRecord) -> tuple[int, ...]:
    """Slowdel loss rule: players with a negative stack at the epoch end."""
    return tuple(p for p, s in enumerate(record.end_stacks) if s < 0)


def run_metaslowdel(
    start: GameState,
    n: int,
    rng,
    max_epochs: int = 10**7,
) -> StoppingRecord:
    """Run epochs until the last player's cumulative payoff leaves the window.

    The window for the partial sums S_j is (-W0, k(n-1) - W0]: below it
    the last player is ruined, above it the opponents are.
    """
    cfg = start.config
    if not cfg.overdraft:
        raise EpochBoundaryError("metaslowdel requires overdraft mode")
    k = cfg.k
    w0 = start.stacks[k - 1]
    lower = -w0
    upper = k * (n - 1) - w0
    state = start
    s = 0
    spins = 0
    payoffs: list[int] = []
    for t in range(1, max_epochs + 1):
        record, state = run_epoch(state, rng, epoch_index=t - 1)
        y = record.payoff[k - 1]
        payoffs.append(y)
        s += y
        spins += record.spins_in_epoch
        if s < lower:
            return StoppingRecord(w0=w0, t=t, s_t=s, u=spins, side="lower", payoffs=tuple(payoffs))
        if s > upper:
            return StoppingRecord(w0=w0, t=t, s_t=s, u=spins, side="upper", payoffs=tuple(payoffs))
    raise GameError(f"no stopping event within {max_epochs} epochs")
