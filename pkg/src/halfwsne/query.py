"""The payoff-query model: the algorithm sees the game only through single-cell queries.

:class:`CountingOracle` charges every query to the phase that is active
when it is made. :func:`approximate_wsne_query` runs the query-efficient
variant of the main algorithm on top of it: approximate zero-sum solves,
sampling the row (or column) strategy down to a small support, and
querying only the subgame spanned by that support.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Protocol, Sequence, Union

import numpy as np

from .game import BimatrixGame, MixedStrategy, StrategyProfile, wsne_report
from .lp import SolverConfig, find_low_threat_mixture, solve_zero_sum
from .wsne import (
    TIGHT_PASS_BUDGET,
    SearchExhausted,
    kappa,
    scan_k_uniform,
    threshold_acceptance,
    tight_pass_allowed,
)

PHASES = ("zero_sum_R", "zero_sum_C", "subgame", "audit")
IMPLS = ("exact", "mwu")

Seed = Union[int, np.random.SeedSequence, np.random.Generator, None]


class UnqueriedEntryError(LookupError):
    """A payoff was read before it was revealed by a query."""


class PayoffOracle(Protocol):
    def dims(self) -> tuple[int, int]: ...

    def query(self, i: int, j: int) -> tuple[float, float]: ...


class MatrixOracle:
    """Answers queries from a fully known game."""

    def __init__(self, game: BimatrixGame):
        self.game = game

    def dims(self) -> tuple[int, int]:
        return self.game.shape

    def query(self, i: int, j: int) -> tuple[float, float]:
        return float(self.game.R[i, j]), float(self.game.C[i, j])


@dataclass(frozen=True)
class QueryStats:
    total: int = 0
    phase_zero_sum_R: int = 0
    phase_zero_sum_C: int = 0
    phase_subgame: int = 0
    phase_audit: int = 0
    memoized: bool = False

    def __sub__(self, other: "QueryStats") -> "QueryStats":
        return QueryStats(
            self.total - other.total,
            self.phase_zero_sum_R - other.phase_zero_sum_R,
            self.phase_zero_sum_C - other.phase_zero_sum_C,
            self.phase_subgame - other.phase_subgame,
            self.phase_audit - other.phase_audit,
            self.memoized,
        )


class CountingOracle:
    """Wraps an oracle and counts queries per phase.

    With ``memoize=True`` a repeated query of the same cell is answered from
    a cache and not charged. Queries made outside a phase are rejected so
    that every query is attributed.
    """

    def __init__(self, inner: PayoffOracle, memoize: bool = False):
        self.inner = inner
        self.memoize = memoize
        self._counts = dict.fromkeys(PHASES, 0)
        self._cache: dict[tuple[int, int], tuple[float, float]] = {}
        self._phase: Optional[str] = None

    def dims(self) -> tuple[int, int]:
        return self.inner.dims()

    @contextlib.contextmanager
    def phase(self, name: str):
        if name not in PHASES:
            raise ValueError(f"unknown phase {name!r}")
        prev, self._phase = self._phase, name
        try:
            yield self
        finally:
            self._phase = prev

    def query(self, i: int, j: int) -> tuple[float, float]:
        if self._phase is None:
            raise RuntimeError("query made outside of a counting phase")
        key = (int(i), int(j))
        if self.memoize and key in self._cache:
            return self._cache[key]
        value = self.inner.query(*key)
        self._counts[self._phase] += 1
        if self.memoize:
            self._cache[key] = value
        return value

    @property
    def stats(self) -> QueryStats:
        c = self._counts
        return QueryStats(
            sum(c.values()), c["zero_sum_R"], c["zero_sum_C"], c["subgame"], c["audit"], self.memoize
        )


class _Transposed:
    """View of an oracle with the players' roles swapped: cell (j, i) answers (C_ij, R_ij)."""

    def __init__(self, inner):
        self.inner = inner

    def dims(self):
        m, n = self.inner.dims()
        return n, m

    def query(self, i, j):
        r, c = self.inner.query(j, i)
        return c, r

    def phase(self, name):
        return self.inner.phase(name)


class PartialGame:
    """The payoffs revealed so far; reading an unrevealed cell raises."""

    def __init__(self, m: int, n: int):
        self.m, self.n = m, n
        self.known = np.zeros((m, n), dtype=bool)
        self._R = np.zeros((m, n))
        self._C = np.zeros((m, n))

    def reveal(self, i: int, j: int, r: float, c: float) -> None:
        self.known[i, j] = True
        self._R[i, j] = r
        self._C[i, j] = c

    def block(self, rows: Sequence[int], cols: Optional[Sequence[int]] = None) -> tuple[np.ndarray, np.ndarray]:
        rows = list(rows)
        cols = list(range(self.n)) if cols is None else list(cols)
        mask = self.known[np.ix_(rows, cols)]
        if not mask.all():
            bad = np.argwhere(~mask)[0]
            raise UnqueriedEntryError(f"cell ({rows[bad[0]]}, {cols[bad[1]]}) was never queried")
        return self._R[np.ix_(rows, cols)].copy(), self._C[np.ix_(rows, cols)].copy()

    def entry(self, i: int, j: int) -> tuple[float, float]:
        R, C = self.block([i], [j])
        return float(R[0, 0]), float(C[0, 0])

    def to_game(self) -> BimatrixGame:
        R, C = self.block(range(self.m))
        return BimatrixGame(R, C)


def _rng(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sampling_size(n: int, eps: float, c_s: float = 12.0) -> int:
    """Number of draws ``ceil(c_s * ln(2n + 2) / eps^2)`` for sampled strategies."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps!r}")
    return max(1, math.ceil(c_s * math.log(2 * n + 2) / eps ** 2))


def sample_k_uniform(x: MixedStrategy, k: int, seed: Seed = None) -> MixedStrategy:
    """Empirical distribution of ``k`` independent draws from ``x``."""
    if k < 1:
        raise ValueError("k must be positive")
    p = np.where(x.probs > x.support_tol, x.probs, 0.0)
    counts = _rng(seed).multinomial(k, p / p.sum())
    return MixedStrategy(counts / k, x.support_tol)


def build_queried_subgame(
    oracle, row_support: Iterable[int], known: Optional[PartialGame] = None
) -> tuple[PartialGame, QueryStats]:
    """Query every cell in the given rows; returns the revealed game and the queries spent."""
    rows = sorted(set(int(i) for i in row_support))
    if not rows:
        raise ValueError("row_support must be nonempty")
    counting = oracle if hasattr(oracle, "phase") else CountingOracle(oracle)
    base = counting.inner if isinstance(counting, _Transposed) else counting
    m, n = counting.dims()
    known = PartialGame(m, n) if known is None else known
    before = base.stats
    with counting.phase("subgame"):
        for i in rows:
            for j in range(n):
                known.reveal(i, j, *counting.query(i, j))
    return known, base.stats - before


@dataclass(frozen=True)
class ZeroSumEstimate:
    """Approximate equilibrium of (R, -R) or (-C, C), in original coordinates."""

    profile: StrategyProfile
    value: float
    # WSNE epsilon of the profile in the zero-sum game, when computable from queried cells
    achieved_epsilon: Optional[float]
    low_confidence: bool = False
    rounds: int = 0


class _ZeroSumView:
    """The maximizer's payoff matrix of one orientation, read one cell at a time."""

    def __init__(self, oracle, orientation: str, known: PartialGame):
        self.oracle, self.orientation, self.known = oracle, orientation, known
        m, n = oracle.dims()
        self.shape = (m, n) if orientation == "row" else (n, m)

    def cell(self, a: int, b: int) -> float:
        if self.orientation == "row":
            r, c = self.oracle.query(a, b)
            self.known.reveal(a, b, r, c)
            return r
        r, c = self.oracle.query(b, a)
        self.known.reveal(b, a, r, c)
        return c


def _exact_full(view: _ZeroSumView, cfg: SolverConfig):
    a, b = view.shape
    M = np.array([[view.cell(i, j) for j in range(b)] for i in range(a)])
    sol = solve_zero_sum(M, cfg)
    return sol.x, sol.y, sol.value, 0.0, False, 0


def _sampled_mwu(view: _ZeroSumView, eps: float, rng: np.random.Generator, c_t: float, c_q: float):
    """Hedge self-play where each round reveals one sampled column and one sampled row.

    The empirical play frequencies are k-uniform strategies whose payoff
    vectors are exactly known from the revealed lines, so the final
    profile's zero-sum WSNE epsilon is computed exactly, not estimated.
    """
    a, b = view.shape
    size = max(a, b, 2)
    budget = math.ceil(c_q * size * math.log(size) / eps ** 4)
    rounds = math.ceil(c_t * math.log(a + b) / eps ** 2)
    low = False
    if rounds * (a + b) > budget:
        rounds, low = max(1, budget // (a + b)), True
    eta_a = math.sqrt(8 * math.log(max(a, 2)) / rounds)
    eta_b = math.sqrt(8 * math.log(max(b, 2)) / rounds)
    gain_a = np.zeros(a)  # cumulative payoff of each maximizer action
    loss_b = np.zeros(b)  # cumulative payoff conceded by each minimizer action
    cnt_a = np.zeros(a)
    cnt_b = np.zeros(b)
    cols: dict[int, np.ndarray] = {}
    rows: dict[int, np.ndarray] = {}
    for _ in range(rounds):
        p = np.exp(eta_a * (gain_a - gain_a.max()))
        q = np.exp(-eta_b * (loss_b - loss_b.min()))
        i = int(rng.choice(a, p=p / p.sum()))
        j = int(rng.choice(b, p=q / q.sum()))
        # revisits are queried again; only a memoizing oracle makes them free
        cols[j] = np.array([view.cell(r, j) for r in range(a)])
        rows[i] = np.array([view.cell(i, c) for c in range(b)])
        gain_a += cols[j]
        loss_b += rows[i]
        cnt_a[i] += 1
        cnt_b[j] += 1
    x = cnt_a / rounds
    y = cnt_b / rounds
    row_pay = gain_a / rounds  # M @ y, exact
    col_pay = loss_b / rounds  # x @ M, exact
    keep_x = (x > 0) & (row_pay >= row_pay.max() - eps / 2)
    keep_y = (y > 0) & (col_pay <= col_pay.min() + eps / 2)
    x = np.where(keep_x, x, 0.0)
    y = np.where(keep_y, y, 0.0)
    x, y = x / x.sum(), y / y.sum()
    Mx = np.array([rows[i] for i in np.flatnonzero(x)])  # revealed rows
    My = np.array([cols[j] for j in np.flatnonzero(y)]).T  # revealed columns
    xr = x[x > 0] @ Mx
    ry = My @ y[y > 0]
    value = float(x[x > 0] @ Mx[:, y > 0] @ y[y > 0])
    achieved = max(ry.max() - ry[x > 0].min(), xr[y > 0].max() - xr.min())
    return x, y, value, float(achieved), bool(low or achieved > eps), rounds


def zero_sum_wsne_via_queries(
    oracle,
    orientation: str,
    eps: float,
    seed: Seed = None,
    impl: str = "exact",
    cfg: SolverConfig = SolverConfig(),
    known: Optional[PartialGame] = None,
    c_t: float = 2.0,
    c_q: float = 1.0,
) -> ZeroSumEstimate:
    """Approximate equilibrium of (R, -R) (``orientation="row"``) or (-C, C) (``"col"``).

    ``impl="exact"`` reveals every cell and solves the LP (epsilon 0,
    exactly m*n queries). ``impl="mwu"`` runs sampled multiplicative-weights
    self-play under a budget of ``c_q * n log n / eps^4`` queries; its
    output carries no formal guarantee and is flagged ``low_confidence``
    when the achieved epsilon exceeds ``eps`` or the budget ran out.
    """
    if orientation not in ("row", "col"):
        raise ValueError("orientation must be 'row' or 'col'")
    if impl not in IMPLS:
        raise ValueError(f"impl must be one of {IMPLS}")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    m, n = oracle.dims()
    known = PartialGame(m, n) if known is None else known
    view = _ZeroSumView(oracle, orientation, known)
    if impl == "exact":
        u, v, value, achieved, low, rounds = _exact_full(view, cfg)
        u, v = u.probs, v.probs
    else:
        u, v, value, achieved, low, rounds = _sampled_mwu(view, eps, _rng(seed), c_t, c_q)
    # u plays the maximizer's actions, v the minimizer's
    if orientation == "row":
        x, y = u, v
    else:
        x, y = v, u
    profile = StrategyProfile(MixedStrategy.from_noisy(x), MixedStrategy.from_noisy(y))
    return ZeroSumEstimate(profile, value, achieved, low, rounds)


@dataclass
class QueryDiagnostics:
    row_value: float
    col_value: float
    sample_size: int
    sampled_support: tuple[int, ...] = ()
    kappa: Optional[int] = None
    profiles_enumerated: int = 0
    attempts: int = 1
    zero_sum_low_confidence: bool = False


@dataclass
class QueryOutcome:
    profile: StrategyProfile
    branch: str
    # guarantee of the branch taken, capped at 1
    bound: float
    diagnostics: QueryDiagnostics
    audited_epsilon: Optional[float] = None
    stats: QueryStats = field(default_factory=QueryStats)


def branch_bound(branch: str, eps: float, delta: float, zs_eps: float = 0.0, tier: Optional[float] = None) -> float:
    """Guaranteed WSNE epsilon of the profile a branch returns (w.h.p. where sampling is involved)."""
    kind = branch[-1]
    if kind == "a":
        b = 0.5 + zs_eps
    elif kind == "b":
        b = max(0.5, 3 * eps)
    else:
        b = 0.5 if tier == 0.5 else 0.5 + 3 * eps + delta
    return min(1.0, b)


def _sampled_step(view, zs_row, zs_col, eps, delta, k, kap, rng_attempts, cfg, prefix):
    """Cases (a)-(c) of the query variant, with the row player's value the larger one."""
    m, n = view.dims()
    x_star, y_star = zs_row.profile.row, zs_row.profile.col
    x_hat = zs_col.profile.row
    last = None
    for attempt, rng in enumerate(rng_attempts, start=1):
        xs = sample_k_uniform(x_star, k, rng)
        ys = sample_k_uniform(y_star, k, rng)
        supp = xs.support
        known, _ = build_queried_subgame(view, supp)
        info = dict(support=supp, attempts=attempt)
        if zs_row.value <= 0.5:
            return StrategyProfile(x_hat, y_star), prefix + "a", info, None
        R_sub, C_sub = known.block(supp)
        x_sub = find_low_threat_mixture(C_sub, range(len(supp)), 0.5, cfg)
        if x_sub is not None:
            return StrategyProfile(x_sub.lift(supp, m), ys), prefix + "b", info, None
        floor = 0.5 - 3 * eps - delta
        tiers = [floor]
        if floor < 0.5 and tight_pass_allowed(n, kap):
            tiers.insert(0, 0.5)
        checked = 0
        for tier in tiers:
            limit = TIGHT_PASS_BUDGET if tier != floor else None
            hit, c = scan_k_uniform(R_sub, C_sub, kap, threshold_acceptance(tier), limit=limit)
            checked += c
            if hit is not None:
                w, z = hit
                info.update(kappa=kap, enumerated=checked)
                w = MixedStrategy(w).lift(supp, m)
                return StrategyProfile(w, MixedStrategy(z)), prefix + "c", info, tier
        last = checked
    raise SearchExhausted(
        f"no {kap}-uniform profile passed in {len(rng_attempts)} sampling attempts ({last} checked)"
    )


def approximate_wsne_query(
    oracle: PayoffOracle,
    eps: float,
    delta: float,
    seed: Seed = 0,
    impl: str = "exact",
    audit: bool = False,
    retries: int = 3,
    c_s: float = 12.0,
    kappa_override: Optional[int] = None,
    cfg: SolverConfig = SolverConfig(),
    memoize: bool = False,
) -> tuple[QueryOutcome, QueryStats]:
    """Query-efficient (1/2 + 3 eps + delta)-WSNE.

    ``retries`` bounds how many fresh samples are drawn when the
    kappa-uniform scan of case (c) finds nothing, which the sampling
    guarantee allows with small probability.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError("eps and delta must lie in (0, 1)")
    if retries < 1:
        raise ValueError("retries must be at least 1")
    counting = oracle if isinstance(oracle, CountingOracle) else CountingOracle(oracle, memoize)
    m, n = counting.dims()
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    s_row, s_col, s_sample = ss.spawn(3)
    known = PartialGame(m, n)
    with counting.phase("zero_sum_R"):
        zs_row = zero_sum_wsne_via_queries(counting, "row", eps, s_row, impl, cfg, known)
    with counting.phase("zero_sum_C"):
        zs_col = zero_sum_wsne_via_queries(counting, "col", eps, s_col, impl, cfg, known)
    k = sampling_size(max(m, n), eps, c_s)
    kap = kappa_override if kappa_override is not None else kappa(delta)
    attempts = [np.random.default_rng(s) for s in s_sample.spawn(retries)]
    if zs_row.value >= zs_col.value:
        profile, branch, info, tier = _sampled_step(
            counting, zs_row, zs_col, eps, delta, k, kap, attempts, cfg, "3")
    else:
        rowT = ZeroSumEstimate(StrategyProfile(zs_col.profile.col, zs_col.profile.row),
                               zs_col.value, zs_col.achieved_epsilon)
        colT = ZeroSumEstimate(StrategyProfile(zs_row.profile.col, zs_row.profile.row),
                               zs_row.value, zs_row.achieved_epsilon)
        pT, branch, info, tier = _sampled_step(
            _Transposed(counting), rowT, colT, eps, delta, k, kap, attempts, cfg, "4")
        profile = StrategyProfile(pT.col, pT.row)
    zs_eps = max(zs_row.achieved_epsilon or 0.0, zs_col.achieved_epsilon or 0.0)
    diag = QueryDiagnostics(
        zs_row.value, zs_col.value, k, tuple(info["support"]),
        info.get("kappa"), info.get("enumerated", 0), info["attempts"],
        zs_row.low_confidence or zs_col.low_confidence,
    )
    outcome = QueryOutcome(profile, branch, branch_bound(branch, eps, delta, zs_eps, tier), diag)
    if audit:
        full = PartialGame(m, n)
        with counting.phase("audit"):
            for i in range(m):
                for j in range(n):
                    full.reveal(i, j, *counting.query(i, j))
        outcome.audited_epsilon = wsne_report(full.to_game(), profile).wsne_epsilon
    outcome.stats = counting.stats
    return outcome, counting.stats
