"""Brute-force ground truth for small games.

Nothing here touches the LP backend or the kappa-uniform scanner of the
algorithm, so these routines can be used to check both.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .game import BimatrixGame, MixedStrategy, StrategyProfile, wsne_report

MAX_ORACLE_DIM = 8
MAX_GRID_PROFILES = 10_000_000
BR_TOL = 1e-8


class OracleSizeError(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class NashCertificate:
    profile: StrategyProfile
    row_payoff: float
    col_payoff: float
    row_support: tuple[int, ...]
    col_support: tuple[int, ...]


@dataclass
class SubgamePayoffCheck:
    holds: bool
    equilibria: int
    witnesses: list[NashCertificate] = field(default_factory=list)


def _indifference(A: np.ndarray, own: tuple, opp: tuple) -> Optional[np.ndarray]:
    """Mixture over ``own`` that makes every action in ``opp`` pay the same under ``A``.

    ``A[i, j]`` is the opponent's payoff for action j when this player plays i.
    Returns the full-length vector, or None if the square system is singular.
    """
    s = len(own)
    M = np.zeros((s + 1, s + 1))
    M[:s, :s] = A[list(own)][:, list(opp)].T
    M[:s, s] = -1.0
    M[s, :s] = 1.0
    rhs = np.zeros(s + 1)
    rhs[s] = 1.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(sol)) or np.abs(M @ sol - rhs).max() > 1e-9:
        return None
    p = np.zeros(A.shape[0])
    p[list(own)] = sol[:s]
    return p


def _best_set(payoffs: np.ndarray) -> set:
    return set(np.flatnonzero(payoffs >= payoffs.max() - BR_TOL).tolist())


def _certify(game: BimatrixGame, x: np.ndarray, y: np.ndarray) -> Optional[NashCertificate]:
    if x.min() < -BR_TOL or y.min() < -BR_TOL:
        return None
    x = np.clip(x, 0, None)
    y = np.clip(y, 0, None)
    x, y = x / x.sum(), y / y.sum()
    xs = set(np.flatnonzero(x > BR_TOL).tolist())
    ys = set(np.flatnonzero(y > BR_TOL).tolist())
    if not xs <= _best_set(game.R @ y) or not ys <= _best_set(x @ game.C):
        return None
    x[x <= BR_TOL] = 0
    y[y <= BR_TOL] = 0
    xm = MixedStrategy(x / x.sum())
    ym = MixedStrategy(y / y.sum())
    return NashCertificate(
        StrategyProfile(xm, ym),
        float(xm.probs @ game.R @ ym.probs),
        float(xm.probs @ game.C @ ym.probs),
        tuple(sorted(xs)),
        tuple(sorted(ys)),
    )


def _vertices(A: np.ndarray) -> list[tuple[np.ndarray, set]]:
    """Extreme mixtures of one player: each is pinned down by its support and the
    opponent's best-response set, so unequal supports in degenerate games are covered."""
    m, n = A.shape
    found = []
    for s in range(1, m + 1):
        for own in itertools.combinations(range(m), s):
            for t in range(s, n + 1):
                for opp in itertools.combinations(range(n), t):
                    K = np.zeros((t + 1, s + 1))
                    K[:t, :s] = A[list(own)][:, list(opp)].T
                    K[:t, s] = -1.0
                    K[t, :s] = 1.0
                    rhs = np.zeros(t + 1)
                    rhs[t] = 1.0
                    sol, _, rank, _ = np.linalg.lstsq(K, rhs, rcond=None)
                    if rank < s + 1 or np.abs(K @ sol - rhs).max() > 1e-9:
                        continue
                    if sol[:s].min() <= BR_TOL:
                        continue
                    p = np.zeros(m)
                    p[list(own)] = sol[:s]
                    pay = p @ A
                    if pay.max() > sol[s] + BR_TOL:
                        continue
                    if not any(np.abs(p - q).max() <= 1e-9 for q, _ in found):
                        found.append((p, _best_set(pay)))
    return found


def _dedup(certs: Iterable[NashCertificate]) -> list[NashCertificate]:
    out: list[NashCertificate] = []
    for c in certs:
        if not any(
            np.abs(c.profile.row.probs - d.profile.row.probs).max() <= 1e-7
            and np.abs(c.profile.col.probs - d.profile.col.probs).max() <= 1e-7
            for d in out
        ):
            out.append(c)
    return sorted(out, key=lambda c: (c.row_support, c.col_support))


def exact_nash_support_enumeration(
    game: BimatrixGame, max_support: Optional[int] = None
) -> list[NashCertificate]:
    """All equilibria found by solving indifference systems on equal-size supports.

    Singular systems mark the game as degenerate; for those games (or when
    nothing is found) the extreme equilibria are additionally enumerated from
    vertex pairs, which does not rely on equal supports.
    """
    m, n = game.shape
    if m > MAX_ORACLE_DIM or n > MAX_ORACLE_DIM:
        raise OracleSizeError(f"{m}x{n} exceeds the {MAX_ORACLE_DIM}x{MAX_ORACLE_DIM} oracle guard")
    top = min(m, n) if max_support is None else min(max_support, m, n)
    found = []
    degenerate = False
    for s in range(1, top + 1):
        for rows in itertools.combinations(range(m), s):
            for cols in itertools.combinations(range(n), s):
                x = _indifference(game.C, rows, cols)
                y = _indifference(game.R.T, cols, rows)
                if x is None or y is None:
                    degenerate = True
                    continue
                cert = _certify(game, x, y)
                if cert is not None:
                    found.append(cert)
    if degenerate or not found:
        xs = _vertices(game.C)
        ys = _vertices(game.R.T)
        for x, col_br in xs:
            for y, row_br in ys:
                if set(np.flatnonzero(x > 0)) <= row_br and set(np.flatnonzero(y > 0)) <= col_br:
                    cert = _certify(game, x, y)
                    if cert is not None:
                        found.append(cert)
    return _dedup(found)


def _grid(d: int, k: int) -> np.ndarray:
    """k-uniform strategies over d actions via stars and bars."""
    rows = []
    for bars in itertools.combinations(range(k + d - 1), d - 1):
        edges = (-1,) + bars + (k + d - 1,)
        rows.append([edges[i + 1] - edges[i] - 1 for i in range(d)])
    return np.array(rows, dtype=float) / k


def min_wsne_epsilon_over_grid(game: BimatrixGame, k: int) -> tuple[float, StrategyProfile]:
    """Smallest WSNE epsilon among all k-uniform profiles, and a profile attaining it."""
    m, n = game.shape
    size = math.comb(m + k - 1, k) * math.comb(n + k - 1, k)
    if size > MAX_GRID_PROFILES:
        raise OracleSizeError(f"{size} grid profiles exceeds the {MAX_GRID_PROFILES} guard")
    X, Y = _grid(m, k), _grid(n, k)
    RY = game.R @ Y.T
    row_best = RY.max(axis=0)
    y_supp = Y > 0
    best = (np.inf, 0, 0)
    for a, x in enumerate(X):
        row_worst = RY[x > 0].min(axis=0)
        cp = x @ game.C
        col_worst = np.where(y_supp, cp, np.inf).min(axis=1)
        eps = np.maximum(row_best - row_worst, cp.max() - col_worst)
        b = int(np.argmin(eps))
        if eps[b] < best[0]:
            best = (float(eps[b]), a, b)
    profile = StrategyProfile(MixedStrategy(X[best[1]]), MixedStrategy(Y[best[2]]))
    return wsne_report(game, profile).wsne_epsilon, profile


def check_subgame_payoff_lemma(game: BimatrixGame, row_support: Iterable[int]) -> SubgamePayoffCheck:
    """Check that every equilibrium of the row-restricted subgame pays both players above 1/2."""
    rows = sorted(set(int(i) for i in row_support))
    sub = BimatrixGame(game.R[rows], game.C[rows])
    eqs = exact_nash_support_enumeration(sub)
    bad = [c for c in eqs if not (c.row_payoff > 0.5 - 1e-6 and c.col_payoff > 0.5 - 1e-6)]
    return SubgamePayoffCheck(holds=not bad and bool(eqs), equilibria=len(eqs), witnesses=bad)
