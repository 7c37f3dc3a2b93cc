"""Rules engine for a single spin-by-spin dreidel game.

All operations are pure: a GameState is an immutable value and
apply_spin maps (state, outcome) to a new state plus the events that
fired. Token conservation (pot + sum of stacks = k * n) holds after
every spin in both modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum

from .rng import OUTCOME_LETTERS, CODE_BY_LETTER


class Spin(IntEnum):
    NISHT = 0
    GANZ = 1
    HALB = 2
    SHTEL = 3

    @property
    def letter(self) -> str:
        return OUTCOME_LETTERS[self]

    @classmethod
    def from_letter(cls, letter: str) -> "Spin":
        return cls(CODE_BY_LETTER[letter])


class GameError(Exception):
    pass


class GameOverError(GameError):
    """A spin was requested on a terminated game."""


class SpinCapExceeded(GameError):
    """A game ran past the configured spin cap."""


DEFAULT_SPIN_CAP = 10**9


@dataclass(frozen=True)
class GameConfig:
    k: int
    n: int
    overdraft: bool = False
    spin_cap: int = DEFAULT_SPIN_CAP

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"need at least two players, got k={self.k}")
        if self.n < 1:
            raise ValueError(f"need at least one starting token, got n={self.n}")


@dataclass(frozen=True)
class StepEvent:
    kind: str  # "ante" | "eliminated" | "won" | "no_survivor"
    player: int | None = None
    payers: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.player is not None:
            d["player"] = self.player
        if self.payers:
            d["payers"] = list(self.payers)
        return d


@dataclass(frozen=True)
class GameState:
    config: GameConfig
    pot: int
    stacks: tuple[int, ...]
    turn: int
    alive: tuple[bool, ...]
    spin_index: int = 0

    @property
    def num_alive(self) -> int:
        return sum(self.alive)

    @property
    def terminated(self) -> bool:
        return self.num_alive <= 1

    @property
    def winner(self) -> int | None:
        if self.num_alive == 1:
            return self.alive.index(True)
        return None

    def check_conservation(self) -> bool:
        return self.pot + sum(self.stacks) == self.config.k * self.config.n


@dataclass(frozen=True)
class TranscriptEntry:
    spin_index: int
    player: int
    outcome: Spin
    pot: int
    stacks: tuple[int, ...]
    events: tuple[StepEvent, ...]


@dataclass
class Transcript:
    config: GameConfig
    entries: list[TranscriptEntry] = field(default_factory=list)
    terminal: str = "running"  # "running" | "won:<player>" | "no_survivor"

    @property
    def duration(self) -> int:
        return len(self.entries)

    def to_json(self) -> str:
        doc = {
            "config": {
                "k": self.config.k,
                "n": self.config.n,
                "overdraft": self.config.overdraft,
            },
            "spins": [
                {
                    "i": e.spin_index,
                    "player": e.player,
                    "outcome": e.outcome.letter,
                    "pot": e.pot,
                    "stacks": list(e.stacks),
                    "events": [ev.to_dict() for ev in e.events],
                }
                for e in self.entries
            ],
            "terminal": self.terminal,
        }
        return json.dumps(doc, indent=None, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        doc = json.loads(text)
        cfg = GameConfig(**doc["config"])
        entries = []
        for s in doc["spins"]:
            events = tuple(
                StepEvent(
                    kind=ev["kind"],
                    player=ev.get("player"),
                    payers=tuple(ev.get("payers", ())),
                )
                for ev in s["events"]
            )
            entries.append(
                TranscriptEntry(
                    spin_index=s["i"],
                    player=s["player"],
                    outcome=Spin.from_letter(s["outcome"]),
                    pot=s["pot"],
                    stacks=tuple(s["stacks"]),
                    events=events,
                )
            )
        return cls(config=cfg, entries=entries, terminal=doc["terminal"])

    def replay_matches(self) -> bool:
        """Re-run the recorded outcomes and compare every intermediate state."""
        state = new_game(self.config)
        for e in self.entries:
            if state.turn != e.player:
                return False
            state, _ = apply_spin(state, e.outcome)
            if state.pot != e.pot or state.stacks != e.stacks:
                return False
        return True


def new_game(config: GameConfig) -> GameState:
    """Opening state: everyone antes one token, player 0 spins first."""
    return GameState(
        config=config,
        pot=config.k,
        stacks=(config.n - 1,) * config.k,
        turn=0,
        alive=(True,) * config.k,
        spin_index=0,
    )


def halb_split(pot: int) -> tuple[int, int]:
    """Split the pot for a Halb: (smaller half taken, larger half remaining)."""
    if pot < 0:
        raise ValueError("pot must be nonnegative")
    taken = pot // 2
    return taken, pot - taken


def _next_alive(alive: tuple[bool, ...], start: int) -> int:
    k = len(alive)
    for step in range(1, k + 1):
        cand = (start + step) % k
        if alive[cand]:
            return cand
    return start


def ante(state: GameState) -> tuple[GameState, list[StepEvent]]:
    """Everyone donates one token to the empty pot.

    In non-overdraft mode, players sitting on zero tokens are eliminated
    simultaneously and donate nothing.
    """
    if state.pot != 0:
        raise ValueError("ante requires an empty pot")
    events: list[StepEvent] = []
    stacks = list(state.stacks)
    alive = list(state.alive)
    payers = []
    for p in range(state.config.k):
        if not alive[p]:
            continue
        if state.config.overdraft or stacks[p] >= 1:
            stacks[p] -= 1
            payers.append(p)
        else:
            alive[p] = False
            events.append(StepEvent(kind="eliminated", player=p))
    pot = len(payers)
    events.insert(0, StepEvent(kind="ante", payers=tuple(payers)))
    new_state = GameState(
        config=state.config,
        pot=pot,
        stacks=tuple(stacks),
        turn=state.turn,
        alive=tuple(alive),
        spin_index=state.spin_index,
    )
    return new_state, events


def apply_spin(state: GameState, outcome: Spin | int) -> tuple[GameState, list[StepEvent]]:
    """Resolve one spin by the player on turn.

    Ganz empties the pot and the ante fires within the same spin, so the
    pot is never left empty. A Shtel by a broke player (non-overdraft)
    eliminates the spinner and leaves the pot unchanged.
    """
    if state.terminated:
        raise GameOverError("game already terminated")
    outcome = Spin(outcome)
    cfg = state.config
    spinner = state.turn
    pot = state.pot
    stacks = list(state.stacks)
    alive = list(state.alive)
    events: list[StepEvent] = []

    if outcome is Spin.NISHT:
        pass
    elif outcome is Spin.GANZ:
        stacks[spinner] += pot
        pot = 0
    elif outcome is Spin.HALB:
        taken, remaining = halb_split(pot)
        stacks[spinner] += taken
        pot = remaining
    else:  # SHTEL
        if cfg.overdraft or stacks[spinner] >= 1:
            stacks[spinner] -= 1
            pot += 1
        else:
            alive[spinner] = False
            events.append(StepEvent(kind="eliminated", player=spinner))

    mid = GameState(
        config=cfg,
        pot=pot,
        stacks=tuple(stacks),
        turn=spinner,
        alive=tuple(alive),
        spin_index=state.spin_index,
    )
    if pot == 0:
        mid, ante_events = ante(mid)
        events.extend(ante_events)

    alive = list(mid.alive)
    n_alive = sum(alive)
    if n_alive == 1:
        winner = alive.index(True)
        events.append(StepEvent(kind="won", player=winner))
        turn = winner
    elif n_alive == 0:
        events.append(StepEvent(kind="no_survivor"))
        turn = spinner
    else:
        turn = _next_alive(tuple(alive), spinner)

    final = GameState(
        config=cfg,
        pot=mid.pot,
        stacks=mid.stacks,
        turn=turn,
        alive=mid.alive,
        spin_index=state.spin_index + 1,
    )
    return final, events


def play_game(config: GameConfig, seed_or_rng) -> Transcript:
    """Play one full game with uniform spins and record the transcript."""
    if config.overdraft:
        raise ValueError("play_game requires a non-overdraft config")
    if isinstance(seed_or_rng, int):
        from .rng import make_generator

        rng = make_generator(seed_or_rng)
    else:
        rng = seed_or_rng
    state = new_game(config)
    transcript = Transcript(config=config)
    while not state.terminated:
        if state.spin_index >= config.spin_cap:
            raise SpinCapExceeded(f"game exceeded {config.spin_cap} spins")
        outcome = Spin(int(rng.integers(0, 4)))
        spinner = state.turn
        state, events = apply_spin(state, outcome)
        transcript.entries.append(
            TranscriptEntry(
                spin_index=state.spin_index - 1,
                player=spinner,
                outcome=outcome,
                pot=state.pot,
                stacks=state.stacks,
                events=tuple(events),
            )
        )
    if state.num_alive == 1:
        transcript.terminal = f"won:{state.winner}"
    else:
        transcript.terminal = "no_survivor"
    return transcript
