"""Epoch machinery: boundaries, payoffs, landslides, stopping records."""

import pytest
from hypothesis import given, settings, strategies as st

from dreidel_lab.epochs import (
    EpochBoundaryError,
    at_epoch_boundary,
    classify_epoch,
    lost_players,
    new_custom,
    run_epoch,
    run_metaslowdel,
)
from dreidel_lab.game import GameConfig, Spin
from dreidel_lab.rng import GANZ, NISHT, SHTEL, ScriptedSource, make_generator


def overdraft_start(k, n):
    return new_custom([n] * k, GameConfig(k=k, n=n, overdraft=True))


class TestNewCustom:
    def test_two_player(self):
        s = new_custom((3, 7), GameConfig(k=2, n=5))
        assert (s.pot, s.stacks, s.turn) == (2, (2, 6), 0)

    def test_three_minimal(self):
        s = new_custom((1, 1, 1), GameConfig(k=3, n=1))
        assert (s.pot, s.stacks) == (3, (0, 0, 0))

    def test_infeasible_ante(self):
        with pytest.raises(ValueError):
            new_custom((0, 5), GameConfig(k=2, n=3))

    def test_overdraft_allows_zero(self):
        s = new_custom((0, 5), GameConfig(k=2, n=3, overdraft=True))
        assert s.stacks == (-1, 4)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            new_custom((1, 1, 1), GameConfig(k=2, n=2))


class TestRunEpoch:
    def test_landslide_epoch(self):
        record, end = run_epoch(overdraft_start(2, 4), ScriptedSource([SHTEL, GANZ]))
        assert record.spins_in_epoch == 2
        assert record.payoff == (-2, 2)  # P2 payoff 2k-2 = 2
        assert at_epoch_boundary(end)
        assert classify_epoch(record).landslide

    def test_two_round_epoch(self):
        record, end = run_epoch(
            overdraft_start(2, 4), ScriptedSource([NISHT, NISHT, NISHT, GANZ])
        )
        assert record.spins_in_epoch == 4
        assert sum(record.payoff) == 0
        assert not classify_epoch(record).landslide
        assert at_epoch_boundary(end)

    def test_mid_round_ganz_does_not_close(self):
        # P1's Ganz is not P_k's round-final spin
        record, _ = run_epoch(overdraft_start(2, 4), ScriptedSource([GANZ, NISHT, NISHT, GANZ]))
        assert record.spins_in_epoch == 4

    def test_requires_overdraft(self):
        with pytest.raises(EpochBoundaryError):
            run_epoch(new_custom((4, 4), GameConfig(k=2, n=4)), make_generator(0))

    def test_requires_boundary(self):
        state = overdraft_start(2, 4)
        state, _ = __import__("dreidel_lab").apply_spin(state, Spin.NISHT)
        with pytest.raises(EpochBoundaryError):
            run_epoch(state, make_generator(0))

    def test_lost_players(self):
        record, _ = run_epoch(
            new_custom((1, 5), GameConfig(k=2, n=3, overdraft=True)),
            ScriptedSource([SHTEL, GANZ]),
        )
        assert record.end_stacks[0] < 0
        assert lost_players(record) == (0,)

    @settings(max_examples=40, deadline=None)
    @given(
        k=st.integers(min_value=2, max_value=4),
        seed=st.integers(min_value=0, max_value=10**6),
    )
    def test_epoch_invariants(self, k, seed):
        state = overdraft_start(k, 4)
        rng = make_generator(seed)
        for i in range(5):
            record, state = run_epoch(state, rng, epoch_index=i)
            assert sum(record.payoff) == 0
            assert record.spins_in_epoch % k == 0 and record.spins_in_epoch >= k
            assert record.outcomes[-1] is Spin.GANZ
            # no earlier round-final spin was a Ganz
            finals = record.outcomes[k - 1 : -1 : k]
            assert all(o is not Spin.GANZ for o in finals)
            assert at_epoch_boundary(state)


class TestRunMetaslowdel:
    def test_w0_zero_stops_on_first_loss(self):
        start = new_custom((4, 1), GameConfig(k=2, n=4, overdraft=True))
        rec = run_metaslowdel(start, 4, make_generator(3))
        assert rec.w0 == 0
        if rec.side == "lower":
            assert rec.t >= 1 and rec.s_t < 0

    def test_thresholds_and_path(self):
        start = new_custom((4, 4), GameConfig(k=2, n=4, overdraft=True))
        for seed in range(30):
            rec = run_metaslowdel(start, 4, make_generator(seed))
            lower, upper = -rec.w0, 2 * 3 - rec.w0
            partial = 0
            for i, y in enumerate(rec.payoffs):
                partial += y
                if i < rec.t - 1:
                    assert lower <= partial <= upper  # no early crossing
            assert partial == rec.s_t
            assert rec.s_t < lower or rec.s_t > upper
            assert rec.side == ("lower" if rec.s_t < lower else "upper")
            assert rec.u % 2 == 0 and rec.u >= 2 * rec.t

    def test_triangle_inequality_sanity(self):
        start = new_custom((4, 4), GameConfig(k=2, n=4, overdraft=True))
        recs = [run_metaslowdel(start, 4, make_generator(s)) for s in range(200)]
        mean_s = sum(r.s_t for r in recs) / len(recs)
        mean_abs = sum(abs(r.s_t) for r in recs) / len(recs)
        assert abs(mean_s) <= mean_abs
