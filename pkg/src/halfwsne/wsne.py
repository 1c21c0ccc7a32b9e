"""The (1/2 + delta)-WSNE algorithm for bimatrix games.

The algorithm solves the two zero-sum games (R, -R) and (-C, C) and then
dispatches on their values:

* (a) the larger value is at most 1/2: the cross profile ``(x_hat, y_star)``
  is a 1/2-WSNE;
* (b) some mixture over ``supp(x_star)`` keeps every column payoff at most
  1/2: pair it with ``y_star``;
* (c) otherwise exhaustively scan kappa-uniform profiles whose row part is
  supported inside ``supp(x_star)``.

When the column game has the strictly larger value the same steps run on
the transposed game and the resulting profile is swapped back (branches
4a-4c).
"""

from __future__ import annotations

import functools
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .game import (
    BimatrixGame,
    GameError,
    MixedStrategy,
    StrategyProfile,
    wsne_report,
)
from .lp import SolverConfig, ZeroSumSolution, find_low_threat_mixture, solve_zero_sum

logger = logging.getLogger(__name__)

BRANCHES = ("3a", "3b", "3c", "4a", "4b", "4c", "3a-degenerate")
CERTIFY_TOL = 1e-6
# z-grids up to this many profiles are materialized once and reused for every w
_MAX_CACHED_PROFILES = 200_000
_BLOCK = 4096
# profile checks allowed for the optional tighter 1/2 pass before relaxing the target
TIGHT_PASS_BUDGET = 5_000_000


class SearchExhausted(RuntimeError):
    """No kappa-uniform profile met the acceptance test."""


@dataclass(frozen=True)
class Subgame:
    game: BimatrixGame
    row_index_map: tuple[int, ...]

    def lift_row(self, w: MixedStrategy, rows: int) -> MixedStrategy:
        return w.lift(self.row_index_map, rows)


@dataclass
class Diagnostics:
    row_value: float
    col_value: float
    row_support_size: int
    col_support_size: int
    kappa: Optional[int] = None
    profiles_enumerated: int = 0


@dataclass
class AlgorithmOutcome:
    profile: StrategyProfile
    branch: str
    certified_epsilon: float
    diagnostics: Diagnostics
    # the low-threat mixture of branch b, in original coordinates
    low_threat: Optional[MixedStrategy] = field(default=None, repr=False)


def kappa(delta: float) -> int:
    """Grid resolution ``max(1, ceil(2 ln(1/delta) / delta^2))``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    return max(1, math.ceil(2 * math.log(1 / delta) / delta ** 2))


def compositions(d: int, k: int) -> Iterator[tuple[int, ...]]:
    """All ways to write ``k`` as an ordered sum of ``d`` nonnegative parts.

    Ordered lexicographically from largest first part down, so the first
    composition is ``(k, 0, ..., 0)``.
    """
    if d == 1:
        yield (k,)
        return
    for first in range(k, -1, -1):
        for rest in compositions(d - 1, k - first):
            yield (first,) + rest


def count_k_uniform(d: int, k: int) -> int:
    return math.comb(d + k - 1, k)


def enumerate_k_uniform(d: int, k: int) -> Iterator[MixedStrategy]:
    """Every k-uniform strategy over ``d`` actions, each exactly once."""
    if d < 1 or k < 1:
        raise ValueError("d and k must be positive")
    for counts in compositions(d, k):
        yield MixedStrategy(np.array(counts, dtype=float) / k)


def _composition_blocks(d: int, k: int, size: int = _BLOCK) -> Iterator[np.ndarray]:
    it = compositions(d, k)
    while True:
        block = list(itertools.islice(it, size))
        if not block:
            return
        yield np.array(block, dtype=float) / k


@functools.lru_cache(maxsize=16)
def _composition_array(d: int, k: int) -> np.ndarray:
    arr = np.array(list(compositions(d, k)), dtype=float) / k
    arr.setflags(write=False)
    return arr


def restrict_rows(game: BimatrixGame, rows: Iterable[int]) -> Subgame:
    """The subgame in which the row player may only use ``rows`` (kept in the given order)."""
    idx = tuple(int(i) for i in rows)
    if not idx:
        raise GameError("row set must be nonempty")
    if min(idx) < 0 or max(idx) >= game.rows:
        raise GameError(f"row index out of range for a game with {game.rows} rows")
    return Subgame(BimatrixGame(game.R[list(idx)], game.C[list(idx)]), idx)


def estimate_search_size(support_size: int, cols: int, k: int) -> int:
    return count_k_uniform(support_size, k) * count_k_uniform(cols, k)


# Acceptance tests for the scan. Each receives, for one w and a block of z's:
# the worst supported row payoff per z, the best row payoff per z, the
# worst supported column payoff per z and the best column payoff against w.
Accept = Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]


def wsne_acceptance(target_eps: float) -> Accept:
    def accept(row_worst, row_best, col_worst, col_best):
        return np.maximum(row_best - row_worst, col_best - col_worst) <= target_eps
    return accept


def threshold_acceptance(floor: float) -> Accept:
    def accept(row_worst, row_best, col_worst, col_best):
        return (row_worst >= floor) & (col_worst >= floor)
    return accept


def scan_k_uniform(
    R_rows: np.ndarray,
    C_rows: np.ndarray,
    k: int,
    accept: Accept,
    R_best: Optional[np.ndarray] = None,
    limit: Optional[int] = None,
) -> tuple[Optional[tuple[np.ndarray, np.ndarray]], int]:
    """Find the first (w, z) in lexicographic order passing ``accept``.

    ``R_rows``/``C_rows`` are the payoff rows available to w. ``R_best`` is
    the matrix whose rows define the row player's best response (defaults to
    ``R_rows``). Stops unsuccessfully once ``limit`` profiles have been
    checked. Returns ``((w, z), profiles_checked)`` or ``(None, checked)``.
    """
    s, n = R_rows.shape
    if R_best is None:
        R_best = R_rows
    cache = None
    if count_k_uniform(n, k) <= _MAX_CACHED_PROFILES:
        cache = []
        grid = _composition_array(n, k)
        for start in range(0, grid.shape[0], _BLOCK):
            Z = grid[start:start + _BLOCK]
            RZ = R_rows @ Z.T
            cache.append((Z, RZ, (R_best @ Z.T).max(axis=0), Z > 0))

    def blocks():
        if cache is not None:
            yield from cache
            return
        for Z in _composition_blocks(n, k):
            yield Z, R_rows @ Z.T, (R_best @ Z.T).max(axis=0), Z > 0

    checked = 0
    for w in _composition_blocks(s, k, size=1):
        w = w[0]
        w_supp = w > 0
        col_pay = w @ C_rows
        col_best = float(col_pay.max())
        for Z, RZ, row_best, z_supp in blocks():
            row_worst = RZ[w_supp].min(axis=0)
            col_worst = np.where(z_supp, col_pay, np.inf).min(axis=1)
            hits = np.flatnonzero(accept(row_worst, row_best, col_worst, col_best))
            if hits.size:
                checked += int(hits[0]) + 1
                return (w, Z[hits[0]].copy()), checked
            checked += Z.shape[0]
            if limit is not None and checked >= limit:
                return None, checked
    return None, checked


def tight_pass_allowed(cols: int, k: int) -> bool:
    """Whether the extra 1/2-target pass is cheap enough to try (the z-grid fits in memory)."""
    return count_k_uniform(cols, k) <= _MAX_CACHED_PROFILES


def _search(game, row_support, k, target_eps, limit=None):
    sub = restrict_rows(game, row_support)
    hit, checked = scan_k_uniform(sub.game.R, sub.game.C, k,
                                  wsne_acceptance(target_eps), R_best=game.R, limit=limit)
    if hit is None:
        return None, checked
    w, z = hit
    profile = StrategyProfile(sub.lift_row(MixedStrategy(w), game.rows), MixedStrategy(z))
    return profile, checked


def search_k_uniform_wsne(
    game: BimatrixGame, row_support: Sequence[int], k: int, target_eps: float
) -> Optional[StrategyProfile]:
    """First kappa-uniform profile, row part inside ``row_support``, that is a ``target_eps``-WSNE."""
    if k < 1:
        raise ValueError("k must be positive")
    profile, _ = _search(game, sorted(row_support), k, target_eps)
    return profile


def _step3(game, zs_row, zs_col, delta, cfg, k, prefix):
    """Cases (a)-(c) when the row player's zero-sum value is the larger one."""
    x_star, y_star = zs_row.x, zs_row.y
    x_hat = zs_col.x
    if zs_row.value <= 0.5:
        return StrategyProfile(x_hat, y_star), prefix + "a", None, None, 0
    supp = x_star.support
    x_prime = find_low_threat_mixture(game.C, supp, 0.5, cfg)
    if x_prime is not None:
        return StrategyProfile(x_prime, y_star), prefix + "b", x_prime, None, 0
    target = 0.5 + delta
    profile, checked = None, 0
    if target > 0.5 and tight_pass_allowed(game.cols, k):
        # a 1/2-WSNE on the grid also meets the target; look for one first
        profile, checked = _search(game, supp, k, 0.5, limit=TIGHT_PASS_BUDGET)
    if profile is None:
        profile, more = _search(game, supp, k, target)
        checked += more
    if profile is None:
        logger.warning("restricted kappa-uniform scan failed; scanning all rows")
        profile, more = _search(game, range(game.rows), k, target)
        checked += more
    if profile is None:
        raise SearchExhausted(
            f"no {k}-uniform profile is a {target}-WSNE; this contradicts the case analysis"
        )
    return profile, prefix + "c", None, k, checked


def approximate_wsne(
    game: BimatrixGame,
    delta: float,
    cfg: SolverConfig = SolverConfig(),
    kappa_override: Optional[int] = None,
) -> AlgorithmOutcome:
    """Compute a (1/2 + delta)-WSNE of ``game`` and certify it."""
    k = kappa_override if kappa_override is not None else kappa(delta)
    if k < 1:
        raise ValueError("kappa must be positive")
    if 0.5 + delta > 1:
        # every profile is a 1-WSNE
        profile = StrategyProfile(MixedStrategy.pure(0, game.rows), MixedStrategy.pure(0, game.cols))
        eps = wsne_report(game, profile).wsne_epsilon
        return AlgorithmOutcome(profile, "3a-degenerate", eps, Diagnostics(float("nan"), float("nan"), 1, 1))

    zs_row = solve_zero_sum(game.R, cfg)
    # (-C, C): the column player maximizes C, i.e. the row player of C^T
    zs_colT = solve_zero_sum(game.C.T, cfg)
    zs_col = ZeroSumSolution(x=zs_colT.y, y=zs_colT.x, value=zs_colT.value)

    if zs_row.value >= zs_col.value:
        profile, branch, low, k_used, checked = _step3(game, zs_row, zs_col, delta, cfg, k, "3")
    else:
        gT = game.transpose()
        # in the transposed game the old column solution plays the row role
        rowT = ZeroSumSolution(x=zs_col.y, y=zs_col.x, value=zs_col.value)
        colT = ZeroSumSolution(x=zs_row.y, y=zs_row.x, value=zs_row.value)
        pT, branch, low, k_used, checked = _step3(gT, rowT, colT, delta, cfg, k, "4")
        profile = StrategyProfile(pT.col, pT.row)
    diag = Diagnostics(zs_row.value, zs_col.value, len(zs_row.x.support),
                       len(zs_col.y.support), k_used, checked)
    eps = wsne_report(game, profile).wsne_epsilon
    return AlgorithmOutcome(profile, branch, eps, diag, low)
