"""Bimatrix games, mixed strategies and the regret verifier.

Every algorithm in this package returns a :class:`StrategyProfile`; the
:func:`wsne_report` function is the single place where approximation
quality is measured, so every certified number flows through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_SUPPORT_TOL = 1e-9
SIMPLEX_SUM_TOL = 1e-9


class GameError(ValueError):
    """Raised on malformed games, strategies or dimension mismatches."""


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BimatrixGame:
    """Payoff matrices ``R`` (row player) and ``C`` (column player), entries in [0, 1]."""

    R: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        R = _frozen(self.R)
        C = _frozen(self.C)
        if R.ndim != 2 or C.ndim != 2:
            raise GameError("payoff matrices must be two-dimensional")
        if R.shape != C.shape:
            raise GameError(f"R has shape {R.shape} but C has shape {C.shape}")
        if R.shape[0] < 1 or R.shape[1] < 1:
            raise GameError("games need at least one row and one column")
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(C))):
            raise GameError("payoffs must be finite")
        if R.min() < 0 or R.max() > 1 or C.min() < 0 or C.max() > 1:
            raise GameError("payoffs must lie in [0, 1]; use normalize() on raw input")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "C", C)

    @property
    def rows(self) -> int:
        return self.R.shape[0]

    @property
    def cols(self) -> int:
        return self.R.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.R.shape

    def transpose(self) -> "BimatrixGame":
        """The game with the players' roles swapped, ``(C^T, R^T)``."""
        return BimatrixGame(self.C.T, self.R.T)


@dataclass(frozen=True)
class NormalizationRecord:
    row_shift: float
    row_scale: float
    col_shift: float
    col_scale: float
    degenerate_row: bool
    degenerate_col: bool


@dataclass(frozen=True)
class MixedStrategy:
    """A probability vector together with the threshold that defines its support."""

    probs: np.ndarray
    support_tol: float = DEFAULT_SUPPORT_TOL

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size == 0:
            raise GameError("a mixed strategy is a nonempty vector")
        if not np.all(np.isfinite(p)) or p.min() < 0:
            raise GameError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > SIMPLEX_SUM_TOL:
            raise GameError(f"probabilities sum to {p.sum()!r}, not 1")
        if self.support_tol <= 0:
            raise GameError("support_tol must be positive")
        object.__setattr__(self, "probs", p)
        if not np.any(p > self.support_tol):
            raise GameError("strategy has empty support")

    @classmethod
    def pure(cls, index: int, dim: int) -> "MixedStrategy":
        p = np.zeros(dim)
        p[index] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, dim: int) -> "MixedStrategy":
        return cls(np.full(dim, 1.0 / dim))

    @classmethod
    def from_noisy(cls, values, support_tol: float = DEFAULT_SUPPORT_TOL) -> "MixedStrategy":
        """Build a strategy from solver output: clip tiny negatives, zero sub-threshold mass, renormalize."""
        v = np.clip(np.asarray(values, dtype=float), 0.0, None)
        v[v <= support_tol] = 0.0
        total = v.sum()
        if total <= 0:
            raise GameError("no mass above the support threshold")
        return cls(v / total, support_tol)

    @property
    def dim(self) -> int:
        return self.probs.size

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.probs > self.support_tol))

    def lift(self, index_map: Sequence[int], dim: int) -> "MixedStrategy":
        """Embed a strategy over a subset of actions into ``dim`` actions, zero elsewhere."""
        if len(index_map) != self.dim:
            raise GameError("index map length does not match strategy dimension")
        p = np.zeros(dim)
        p[list(index_map)] = self.probs
        return MixedStrategy(p, self.support_tol)

    def to_list(self) -> list[float]:
        return [float(v) for v in self.probs]


@dataclass(frozen=True)
class StrategyProfile:
    row: MixedStrategy
    col: MixedStrategy

    def check_dims(self, game: BimatrixGame) -> None:
        if self.row.dim != game.rows or self.col.dim != game.cols:
            raise GameError(
                f"profile of shape ({self.row.dim}, {self.col.dim}) "
                f"does not fit a {game.rows}x{game.cols} game"
            )


@dataclass(frozen=True)
class RegretReport:
    row_best: float
    row_worst_support: float
    row_regret: float
    col_best: float
    col_worst_support: float
    col_regret: float
    wsne_epsilon: float
    ne_epsilon: float
    row_payoff: float = field(default=0.0)
    col_payoff: float = field(default=0.0)


def _normalize_matrix(raw: np.ndarray) -> tuple[np.ndarray, float, float, bool]:
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        return np.zeros_like(raw), lo, 1.0, True
    scale = hi - lo
    out = np.clip((raw - lo) / scale, 0.0, 1.0)
    return out, lo, scale, False


def normalize(raw_R, raw_C) -> tuple[BimatrixGame, NormalizationRecord]:
    """Map each payoff matrix affinely onto [0, 1] by its own min and range.

    A constant matrix becomes all zeros with ``scale = 1`` and the matching
    degeneracy flag set. Per-player positive affine maps leave best
    responses, and therefore WSNE supports, unchanged.
    """
    R = np.asarray(raw_R, dtype=float)
    C = np.asarray(raw_C, dtype=float)
    if R.ndim != 2 or R.shape != C.shape:
        raise GameError(f"dimension mismatch: {R.shape} vs {C.shape}")
    if R.size == 0:
        raise GameError("empty payoff matrix")
    if not (np.all(np.isfinite(R)) and np.all(np.isfinite(C))):
        raise GameError("payoffs must be finite")
    Rn, rs, rk, rdeg = _normalize_matrix(R)
    Cn, cs, ck, cdeg = _normalize_matrix(C)
    record = NormalizationRecord(rs, rk, cs, ck, rdeg, cdeg)
    return BimatrixGame(Rn, Cn), record


def pure_row_payoffs(game: BimatrixGame, y: MixedStrategy) -> np.ndarray:
    """``R @ y``: the row player's payoff for each pure row against ``y``."""
    if y.dim != game.cols:
        raise GameError(f"column strategy has dimension {y.dim}, game has {game.cols} columns")
    return game.R @ y.probs


def pure_col_payoffs(game: BimatrixGame, x: MixedStrategy) -> np.ndarray:
    """``x @ C``: the column player's payoff for each pure column against ``x``."""
    if x.dim != game.rows:
        raise GameError(f"row strategy has dimension {x.dim}, game has {game.rows} rows")
    return x.probs @ game.C


def expected_payoffs(game: BimatrixGame, p: StrategyProfile) -> tuple[float, float]:
    p.check_dims(game)
    x, y = p.row.probs, p.col.probs
    return float(x @ game.R @ y), float(x @ game.C @ y)


def wsne_report(game: BimatrixGame, p: StrategyProfile) -> RegretReport:
    """Measure how far ``p`` is from an exact equilibrium.

    ``wsne_epsilon`` is the smallest eps for which every supported pure
    strategy of either player is an eps-best response; ``ne_epsilon`` is the
    usual expected-payoff regret. No tolerance is applied to the result.
    """
    p.check_dims(game)
    row_pay = pure_row_payoffs(game, p.col)
    col_pay = pure_col_payoffs(game, p.row)
    row_best = float(row_pay.max())
    col_best = float(col_pay.max())
    row_worst = float(row_pay[list(p.row.support)].min())
    col_worst = float(col_pay[list(p.col.support)].min())
    rpay = float(p.row.probs @ row_pay)
    cpay = float(col_pay @ p.col.probs)
    row_regret = row_best - row_worst
    col_regret = col_best - col_worst
    # sub-threshold mass can push the expected regret a hair above the support regret
    ne_eps = min(max(row_best - rpay, col_best - cpay, 0.0), max(row_regret, col_regret))
    return RegretReport(
        row_best=row_best,
        row_worst_support=row_worst,
        row_regret=row_regret,
        col_best=col_best,
        col_worst_support=col_worst,
        col_regret=col_regret,
        wsne_epsilon=max(row_regret, col_regret),
        ne_epsilon=ne_eps,
        row_payoff=rpay,
        col_payoff=cpay,
    )
