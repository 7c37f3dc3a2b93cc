"""Monte Carlo estimators and bound-check reports for the epoch analysis.

The heavy samplers are vectorized over trials with numpy.  Epochs of the
free-running overdraft process are independent (the pot returns to k at
every boundary and stacks are unbounded), so a batch of epochs has the
same law as a consecutive run.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .game import GameConfig
from .reporting import BoundReport
from .rng import GANZ, HALB, SHTEL, make_generator

Z99 = 2.576
CHUNK = 1 << 15


# ---------------------------------------------------------------------------
# batch epoch engine


@dataclass
class EpochSample:
    k: int
    y: np.ndarray          # last player's payoff per epoch
    lengths: np.ndarray    # spins per epoch
    landslide: np.ndarray  # bool per epoch


def _epoch_batch(k: int, m: int, rng) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate m independent epochs; returns (payoff, length, landslide)."""
    y_out = np.zeros(m, dtype=np.int64)
    len_out = np.zeros(m, dtype=np.int64)
    ls_out = np.zeros(m, dtype=bool)
    pot = np.full(m, k, dtype=np.int64)
    y = np.zeros(m, dtype=np.int64)
    first_shtels = np.ones(m, dtype=bool)
    active = np.arange(m)
    r = 0
    while active.size:
        pa = pot[active]
        ya = y[active]
        done = None
        for j in range(k):
            o = np.asarray(rng.integers(0, 4, size=active.size))
            gm = o == GANZ
            hm = o == HALB
            sm = o == SHTEL
            if j < k - 1:
                # another player's spin: only the pot and antes touch P_k
                ya[gm] -= 1
                pa[gm] = k
                pa[hm] -= pa[hm] // 2
                pa[sm] += 1
                if r == 0:
                    first_shtels[active] &= sm
            else:
                ya[gm] += pa[gm] - 1  # take the pot, then pay the ante
                pa[gm] = k
                ya[hm] += pa[hm] // 2
                pa[hm] -= pa[hm] // 2
                ya[sm] -= 1
                pa[sm] += 1
                done = gm
        pot[active] = pa
        y[active] = ya
        idx = active[done]
        y_out[idx] = y[idx]
        len_out[idx] = k * (r + 1)
        if r == 0:
            ls_out[idx] = first_shtels[idx]
        active = active[~done]
        r += 1
    return y_out, len_out, ls_out


def sample_epochs(k: int, n_epochs: int, seed: int) -> EpochSample:
    ys, lens, lss = [], [], []
    for c, lo in enumerate(range(0, n_epochs, CHUNK)):
        m = min(CHUNK, n_epochs - lo)
        rng = make_generator(seed, c)
        y, ln, ls = _epoch_batch(k, m, rng)
        ys.append(y)
        lens.append(ln)
        lss.append(ls)
    return EpochSample(
        k=k,
        y=np.concatenate(ys),
        lengths=np.concatenate(lens),
        landslide=np.concatenate(lss),
    )


# ---------------------------------------------------------------------------
# payoff statistics


@dataclass
class PayoffStats:
    k: int
    count: int
    mean: float
    second_moment: float
    variance: float
    fourth_moment: float
    central_m4: float
    abs_y_hist: np.ndarray
    length_hist: np.ndarray
    landslide_count: int
    landslide_payoffs_exact: bool

    @classmethod
    def from_sample(cls, sample: EpochSample) -> "PayoffStats":
        y = sample.y.astype(np.float64)
        mean = float(y.mean())
        m2 = float((y**2).mean())
        var = m2 - mean**2
        m4 = float((y**4).mean())
        m4c = float(((y - mean) ** 4).mean())
        ls = sample.landslide
        exact = bool(np.all(sample.y[ls] == 2 * sample.k - 2)) if ls.any() else True
        return cls(
            k=sample.k,
            count=len(y),
            mean=mean,
            second_moment=m2,
            variance=var,
            fourth_moment=m4,
            central_m4=m4c,
            abs_y_hist=np.bincount(np.abs(sample.y)),
            length_hist=np.bincount(sample.lengths),
            landslide_count=int(ls.sum()),
            landslide_payoffs_exact=exact,
        )

    @property
    def se_mean(self) -> float:
        return math.sqrt(self.variance / self.count)

    @property
    def se_variance(self) -> float:
        return math.sqrt(max(self.central_m4 - self.variance**2, 0.0) / self.count)

    @property
    def se_second_moment(self) -> float:
        return math.sqrt(max(self.fourth_moment - self.second_moment**2, 0.0) / self.count)

    def tail_ge(self, threshold: int, hist: np.ndarray) -> float:
        """Empirical P(value >= threshold) from a bincount histogram."""
        if threshold >= len(hist):
            return 0.0
        return float(hist[threshold:].sum()) / self.count


def payoff_sample(k: int, n: int, epochs: int, seed: int) -> PayoffStats:
    """Statistics over consecutive epochs of the free-running process.

    The overdraft payoff law does not depend on n; the parameter is kept
    so callers can name the configuration they study.
    """
    del n
    sample = sample_epochs(k, epochs, seed)
    return PayoffStats.from_sample(sample)


# ---------------------------------------------------------------------------
# duration estimation


@dataclass(frozen=True)
class DurationEstimate:
    k: int
    n: int
    trials: int
    mean: float
    se: float
    ci99: tuple[float, float]

    @property
    def se_defined(self) -> bool:
        return self.trials > 1


def _durations_two_player(n: int, m: int, rng, spin_cap: int) -> np.ndarray:
    """Vectorized plain-dreidel durations for k=2 (non-overdraft)."""
    pot = np.full(m, 2, dtype=np.int64)
    s = np.zeros((2, m), dtype=np.int64)
    s[0] = n - 1
    s[1] = n - 1
    out = np.zeros(m, dtype=np.int64)
    active = np.arange(m)
    step = 0
    while active.size:
        if step >= spin_cap:
            raise RuntimeError(f"batch exceeded {spin_cap} spins")
        p = step % 2
        q = 1 - p
        o = np.asarray(rng.integers(0, 4, size=active.size))
        pa = pot[active]
        sp = s[p][active]
        sq = s[q][active]

        hm = o == HALB
        sp[hm] += pa[hm] // 2
        pa[hm] -= pa[hm] // 2

        sm = o == SHTEL
        s_dead = sm & (sp == 0)  # spinner cannot pay: eliminated
        pay = sm & ~s_dead
        sp[pay] -= 1
        pa[pay] += 1

        gm = o == GANZ
        sp[gm] += pa[gm]
        g_dead = gm & (sq == 0)  # opponent cannot ante: eliminated
        g_pay = gm & ~g_dead
        sp[g_pay] -= 1
        sq[g_pay] -= 1
        pa[g_pay] = 2

        pot[active] = pa
        s[p][active] = sp
        s[q][active] = sq

        dead = s_dead | g_dead
        out[active[dead]] = step + 1
        active = active[~dead]
        step += 1
    return out


def simulate_duration(config: GameConfig, rng) -> int:
    """Spin count of one plain-dreidel game, any k (no transcript)."""
    k = config.k
    pot = k
    stacks = [config.n - 1] * k
    alive = [True] * k
    n_alive = k
    turn = 0
    spins = 0
    while True:
        if spins >= config.spin_cap:
            raise RuntimeError(f"game exceeded {config.spin_cap} spins")
        o = int(rng.integers(0, 4))
        spins += 1
        if o == GANZ:
            stacks[turn] += pot
            pot = 0
            for p in range(k):
                if not alive[p]:
                    continue
                if stacks[p] >= 1:
                    stacks[p] -= 1
                    pot += 1
                else:
                    alive[p] = False
                    n_alive -= 1
        elif o == HALB:
            stacks[turn] += pot // 2
            pot -= pot // 2
        elif o == SHTEL:
            if stacks[turn] >= 1:
                stacks[turn] -= 1
                pot += 1
            else:
                alive[turn] = False
                n_alive -= 1
        if n_alive <= 1:
            return spins
        turn = (turn + 1) % k
        while not alive[turn]:
            turn = (turn + 1) % k


def _duration_chunk(args) -> np.ndarray:
    config, seed, chunk_index, m = args
    rng = make_generator(seed, chunk_index)
    if config.k == 2:
        return _durations_two_player(config.n, m, rng, config.spin_cap)
    return np.array([simulate_duration(config, rng) for _ in range(m)], dtype=np.int64)


def sample_durations(config: GameConfig, trials: int, seed: int, jobs: int = 1) -> np.ndarray:
    chunks = [
        (config, seed, c, min(CHUNK, trials - lo))
        for c, lo in enumerate(range(0, trials, CHUNK))
    ]
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_duration_chunk, chunks))
    else:
        parts = [_duration_chunk(c) for c in chunks]
    return np.concatenate(parts)


def estimate_mean_duration(config: GameConfig, trials: int, seed: int, jobs: int = 1) -> DurationEstimate:
    if trials < 1:
        raise ValueError("need at least one trial")
    durations = sample_durations(config, trials, seed, jobs=jobs)
    mean = float(durations.mean())
    if trials > 1:
        se = float(durations.std(ddof=1)) / math.sqrt(trials)
    else:
        se = float("nan")
    ci = (mean - Z99 * se, mean + Z99 * se)
    return DurationEstimate(k=config.k, n=config.n, trials=trials, mean=mean, se=se, ci99=ci)


# ---------------------------------------------------------------------------
# stopping records (vectorized metaslowdel)


@dataclass
class StoppingSample:
    k: int
    n: int
    w0: int
    t: np.ndarray
    s_t: np.ndarray
    u: np.ndarray
    side_upper: np.ndarray  # bool: True where the opponents were ruined


def sample_stopping(k: int, n: int, w0: int, runs: int, seed: int) -> StoppingSample:
    """Vectorized metaslowdel stopping records for the last player."""
    if not 0 <= w0 <= k * (n - 1):
        raise ValueError("w0 outside [0, k(n-1)]")
    lower = -w0
    upper = k * (n - 1) - w0
    s = np.zeros(runs, dtype=np.int64)
    t = np.zeros(runs, dtype=np.int64)
    u = np.zeros(runs, dtype=np.int64)
    s_out = np.zeros(runs, dtype=np.int64)
    t_out = np.zeros(runs, dtype=np.int64)
    u_out = np.zeros(runs, dtype=np.int64)
    up_out = np.zeros(runs, dtype=bool)
    active = np.arange(runs)
    epoch = 0
    while active.size:
        rng = make_generator(seed, epoch)
        y, lengths, _ = _epoch_batch(k, active.size, rng)
        s[active] += y
        t[active] += 1
        u[active] += lengths
        sa = s[active]
        stopped = (sa < lower) | (sa > upper)
        idx = active[stopped]
        s_out[idx] = s[idx]
        t_out[idx] = t[idx]
        u_out[idx] = u[idx]
        up_out[idx] = s[idx] > upper
        active = active[~stopped]
        epoch += 1
    return StoppingSample(k=k, n=n, w0=w0, t=t_out, s_t=s_out, u=u_out, side_upper=up_out)


# ---------------------------------------------------------------------------
# reports


def moment_report(stats: PayoffStats) -> BoundReport:
    """The three closed-form payoff-moment bounds."""
    k = stats.k
    rep = BoundReport(f"payoff moments, k={k}")
    rep.check_ge("E(Y1^2) >= 1/4", stats.second_moment, 0.25, slack=3 * stats.se_second_moment)
    rep.check_le("|mean(Y1)| <= 5k", abs(stats.mean), 5 * k, slack=3 * stats.se_mean)
    rep.check_le("var(Y1) <= 41k^2", stats.variance, 41 * k * k, slack=3 * stats.se_variance)
    rep.report_only("var identity residual",
                    abs(stats.variance - (stats.second_moment - stats.mean**2)))
    return rep


def landslide_report(stats: PayoffStats) -> BoundReport:
    k = stats.k
    rep = BoundReport(f"landslide epochs, k={k}")
    p_hat = stats.landslide_count / stats.count
    target = 4.0 ** (-k)
    se = math.sqrt(target * (1 - target) / stats.count)
    rep.check_le("|freq - 4^-k|", abs(p_hat - target), 3 * se)
    rep.check_ge("landslide payoffs all 2k-2", float(stats.landslide_payoffs_exact), 1.0)
    return rep


def tail_report(stats: PayoffStats, q_max: int = 15) -> BoundReport:
    """Epoch-length and |Y1| tails against the (3/4)-geometric bounds."""
    k = stats.k
    rep = BoundReport(f"tail bounds, k={k}")
    for q in range(0, q_max + 1):
        p_hat = stats.tail_ge(k * q + 1, stats.length_hist)
        bound = 0.75**q
        se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / stats.count)
        rep.check_le(f"P(len >= {k}q+1), q={q}", p_hat, bound, slack=3 * se)
    u_max = (len(stats.abs_y_hist) - 2) // k
    for u in range(1, max(u_max, 1) + 1):
        t = k * u + 1
        p_hat = stats.tail_ge(t, stats.abs_y_hist)
        bound = 0.75 ** (u - 1)
        se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / stats.count)
        rep.check_le(f"P(|Y1| >= {t})", p_hat, bound, slack=3 * se)
    return rep


def wald_report(sample: StoppingSample, stats: PayoffStats) -> BoundReport:
    """Wald's identities on a stopping sample, using moments from `stats`."""
    rep = BoundReport(f"Wald checks, k={sample.k}, n={sample.n}, W0={sample.w0}")
    r = len(sample.t)
    t = sample.t.astype(np.float64)
    s = sample.s_t.astype(np.float64)
    mu = stats.mean
    var = stats.variance

    # first Wald identity: E(S_T) = mu E(T)
    resid = s - mu * t
    d1 = float(resid.mean())
    se1 = math.sqrt(float(resid.var(ddof=1)) / r + float(t.mean()) ** 2 * stats.se_mean**2)
    rep.check_le("|E(S_T) - mu E(T)|", abs(d1), 3 * se1)

    # standard second form: E[(S_T - mu T)^2] = sigma^2 E(T)
    sq = resid**2
    d2_terms = sq - var * t
    d2 = float(d2_terms.mean())
    dmu = float((-2 * t * resid).mean())  # sensitivity of the LHS to mu error
    se2 = math.sqrt(
        float(d2_terms.var(ddof=1)) / r
        + float(t.mean()) ** 2 * stats.se_variance**2
        + (dmu * stats.se_mean) ** 2
    )
    rep.check_le("|E[(S_T - mu T)^2] - var E(T)|", abs(d2), 3 * se2)

    # alternative second-moment form, report-only
    lhs = float((s**2).mean())
    rhs = var * float(t.mean()) + mu**2 * float((t**2).mean())
    rep.report_only("E(S_T^2)", lhs)
    rep.report_only("var E(T) + mu^2 E(T^2)", rhs)

    # E(|S_T|) <= kn + k sum_{q>=n} (3/4)^q
    k, n = sample.k, sample.n
    abs_s = np.abs(s)
    bound = k * n + 4 * k * 0.75**n
    se_abs = float(abs_s.std(ddof=1)) / math.sqrt(r)
    rep.check_le("E(|S_T|) <= kn + tail", float(abs_s.mean()), bound, slack=3 * se_abs)
    return rep


# ---------------------------------------------------------------------------
# Ganz waiting time


@dataclass(frozen=True)
class GanzWaitEstimate:
    trials: int
    mean: float
    se: float
    ci99: tuple[float, float]
    counts: tuple[int, ...]  # histogram of waiting times, index = wait


def ganz_wait(trials: int, seed: int) -> GanzWaitEstimate:
    """Mean number of spins until the first Ganz (geometric, p = 1/4)."""
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = make_generator(seed)
    waits = rng.geometric(0.25, size=trials)
    mean = float(waits.mean())
    se = float(waits.std(ddof=1)) / math.sqrt(trials) if trials > 1 else float("nan")
    return GanzWaitEstimate(
        trials=trials,
        mean=mean,
        se=se,
        ci99=(mean - Z99 * se, mean + Z99 * se),
        counts=tuple(int(c) for c in np.bincount(waits)),
    )


# ---------------------------------------------------------------------------
# duration scaling


@dataclass
class ScalingRow:
    n: int
    mean: float
    se: float | None
    ratio_n2: float
    ratio_asymptotic: float


@dataclass
class ScalingFit:
    k: int
    mode: str
    rows: list[ScalingRow] = field(default_factory=list)
    slope: float = float("nan")


def scaling_report(
    k: int,
    ns: list[int],
    mode: str = "mc",
    trials: int = 10_000,
    seed: int = 0,
    jobs: int = 1,
) -> ScalingFit:
    """Log-log slope of mean game duration over n.

    mode="exact" (k=2 only) uses the absorbing-chain solver; mode="mc"
    uses Monte Carlo with `trials` games per n.
    """
    if len(ns) < 2:
        raise ValueError("need at least two n values")
    fit = ScalingFit(k=k, mode=mode)
    means = []
    for n in ns:
        if mode == "exact":
            if k != 2:
                raise ValueError("exact durations are only available for k=2")
            from .kernels import build_game_chain
            from .solvers import absorption_stats

            kernel = build_game_chain(n)
            mean = absorption_stats(kernel, (2, n - 1, 1)).expected_time
            se = None
        else:
            est = estimate_mean_duration(GameConfig(k=k, n=n), trials, seed, jobs=jobs)
            mean, se = est.mean, est.se
        means.append(mean)
        fit.rows.append(
            ScalingRow(
                n=n,
                mean=mean,
                se=se,
                ratio_n2=mean / n**2,
                ratio_asymptotic=mean / (104 * n**2 / 3),
            )
        )
    slope, _ = np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(means)), 1)
    fit.slope = float(slope)
    return fit
