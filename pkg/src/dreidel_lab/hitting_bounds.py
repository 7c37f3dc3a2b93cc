"""Hitting-probability tables, fast/slow decomposition bounds and the
algebraic identity checks on the mod-Lambda chain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import ModChainSpec, SparseKernel, build_game_chain, build_mod_chain, game_chain_start
from .reporting import BoundReport
from .solvers import HitSolver, absorption_stats, mean_return_time


class TruncationError(RuntimeError):
    """Reported quantities kept moving while the pot cap grew."""


def _quantities(spec: ModChainSpec) -> dict[str, float]:
    """Every bound-table quantity on one mod chain instance."""
    n = spec.n
    lam = spec.lam
    kernel = build_mod_chain(spec)
    y1 = (n - 1) % lam
    s0 = spec.start
    out: dict[str, float] = {}

    for m in range(1, n + 2):
        target = frozenset({(2, (y1 + m) % lam, 2)})
        avoid = frozenset({(2, (y1 - 1) % lam, 1)})
        out[f"A_{m}"] = HitSolver(kernel, target, avoid).prob((2, y1, 1))
        target = frozenset({(2, (y1 - m) % lam, 2)})
        avoid = frozenset({(2, (y1 + 1) % lam, 1)})
        out[f"B_{m}"] = HitSolver(kernel, target, avoid).prob((2, y1, 1))

    s1 = frozenset({(2, (n - 1) % lam, 1), (2, (n - 2) % lam, 1)})
    s2 = frozenset({(2, (n - 1) % lam, 1), (2, n % lam, 1)})
    out["omega1"] = HitSolver(kernel, frozenset({(2, n % lam, 1)}), s1).prob(
        s0, first_step_exempt=True
    )
    out["omega2"] = HitSolver(kernel, frozenset({(2, (n - 2) % lam, 1)}), s2).prob(
        s0, first_step_exempt=True
    )

    ends = frozenset(spec.end_states())
    out["p_f"] = HitSolver(kernel, ends, frozenset({s0})).prob(s0, first_step_exempt=True)
    out["mu0"] = mean_return_time(kernel, s0)
    return out


def stable_quantities(
    n: int,
    flavor: str = "game",
    tol: float = 1e-10,
    max_doublings: int = 6,
) -> tuple[dict[str, float], int, float]:
    """Grow the pot cap (doubling from 8n) until every quantity settles.

    Returns (quantities, final cap, worst step-to-step change).
    """
    p_max = 8 * n
    prev = _quantities(ModChainSpec(n=n, p_max=p_max, flavor=flavor))
    for _ in range(max_doublings):
        p_max *= 2
        cur = _quantities(ModChainSpec(n=n, p_max=p_max, flavor=flavor))
        drift = max(abs(cur[k] - prev[k]) for k in cur)
        if drift < tol:
            return cur, p_max, drift
        prev = cur
    raise TruncationError(f"quantities unstable after cap {p_max}")


def bound_tables(n: int, flavor: str = "game", tol: float = 1e-10) -> BoundReport:
    """Every inequality of the fast/slow Markov analysis, with verdicts."""
    q, p_max, drift = stable_quantities(n, flavor=flavor, tol=tol)
    rep = BoundReport(f"hitting bounds, n={n}, flavor={flavor}, cap={p_max}")
    for m in range(1, n + 2):
        rep.check_ge(f"A_{m} >= 1/(m+3)", q[f"A_{m}"], 1.0 / (m + 3))
        rep.check_ge(f"B_{m} >= 1/(m+63)", q[f"B_{m}"], 1.0 / (m + 63))
    rep.check_ge("omega1 >= 1/8", q["omega1"], 0.125)
    rep.check_ge("omega2 >= 1/8", q["omega2"], 0.125)
    rep.check_ge("p_f >= 1/(4(n+63))", q["p_f"], 1.0 / (4 * (n + 63)))
    rep.check_le("mu0 <= 13(2n+3)/3", q["mu0"], 13 * (2 * n + 3) / 3, slack=1e-6)

    game = build_game_chain(n)
    mu_d = absorption_stats(game, game_chain_start(n)).expected_time
    rep.check_le("mu_d <= mu0/p_f", mu_d, q["mu0"] / q["p_f"], slack=1e-6)
    rep.report_only("mu_d", mu_d)
    rep.check_le("cap stability drift", drift, tol)
    return rep


# ---------------------------------------------------------------------------
# identity checks


@dataclass
class IdentityResiduals:
    n: int
    flavor: str
    complementarity: np.ndarray
    translation: np.ndarray
    duality: np.ndarray

    @property
    def max_complementarity(self) -> float:
        return float(np.max(self.complementarity))

    @property
    def max_translation(self) -> float:
        return float(np.max(self.translation))

    @property
    def max_duality(self) -> float:
        return float(np.max(self.duality))


def _pot2_prob(kernel: SparseKernel, y1z1, y2z2, y3z3) -> float:
    target = frozenset({(2, *y2z2)})
    avoid = frozenset({(2, *y3z3)})
    return HitSolver(kernel, target, avoid).prob((2, *y1z1))


def identity_checks(
    n: int,
    flavor: str = "game",
    n_queries: int = 100,
    seed: int = 0,
    p_max: int | None = None,
) -> IdentityResiduals:
    """Complementarity / translation-invariance / duality residuals on a
    grid of random pot-2 hitting queries.

    The first two are algebraic identities of the truncated chain and
    must vanish to solver precision; duality is reported as measured.
    """
    spec = ModChainSpec(n=n, p_max=p_max or 8 * n, flavor=flavor)
    lam = spec.lam
    kernel = build_mod_chain(spec)
    flavor_tag = {"game": 0, "formal": 1}[flavor]
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, n, flavor_tag))))
    comp, trans, dual = [], [], []
    count = 0
    while count < n_queries:
        y1, y2, y3 = (int(v) for v in rng.integers(0, lam, size=3))
        z1, z2, z3 = (int(v) for v in rng.integers(1, 3, size=3))
        if (y2, z2) == (y3, z3) or (y1, z1) in ((y2, z2), (y3, z3)):
            continue
        count += 1
        p = _pot2_prob(kernel, (y1, z1), (y2, z2), (y3, z3))
        p_swap = _pot2_prob(kernel, (y1, z1), (y3, z3), (y2, z2))
        comp.append(abs(p + p_swap - 1.0))

        m = int(rng.integers(1, lam))
        p_shift = _pot2_prob(
            kernel,
            ((y1 + m) % lam, z1),
            ((y2 + m) % lam, z2),
            ((y3 + m) % lam, z3),
        )
        trans.append(abs(p_shift - p))

        def conj(y, z):
            return ((-y - 2) % lam, 3 - z)

        p_dual = _pot2_prob(kernel, conj(y1, z1), conj(y2, z2), conj(y3, z3))
        dual.append(abs(p_dual - p))
    return IdentityResiduals(
        n=n,
        flavor=flavor,
        complementarity=np.array(comp),
        translation=np.array(trans),
        duality=np.array(dual),
    )
