"""Linear programs used by the algorithms: zero-sum equilibria and low-threat mixtures.

Both programs are solved with the HiGHS dual simplex through
``scipy.optimize.linprog``; dual simplex returns vertex solutions, which keeps
supports small and results deterministic for a given input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import linprog

from .game import MixedStrategy


class SolverError(RuntimeError):
    """The LP backend failed for a reason other than infeasibility."""


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = 1e-9
    value_tol: float = 1e-6
    max_iterations: int = 100_000

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.value_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass(frozen=True)
class ZeroSumSolution:
    x: MixedStrategy
    y: MixedStrategy
    value: float


def _options(cfg: SolverConfig) -> dict:
    return {
        "maxiter": cfg.max_iterations,
        "primal_feasibility_tolerance": 1e-10,
        "dual_feasibility_tolerance": 1e-10,
    }


def _maxmin(M: np.ndarray, cfg: SolverConfig) -> tuple[np.ndarray, float]:
    """max_x min_j (x^T M)_j over the simplex. Variables are (x_1..x_m, v)."""
    m, n = M.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    # v - (x^T M)_j <= 0
    A_ub = np.hstack([-M.T, np.ones((n, 1))])
    b_ub = np.zeros(n)
    A_eq = np.zeros((1, m + 1))
    A_eq[0, :m] = 1.0
    bounds = [(0, None)] * m + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs-ds", options=_options(cfg))
    if res.status != 0:
        raise SolverError(f"zero-sum LP failed: {res.message}")
    return res.x[:m], float(res.x[-1])


def solve_zero_sum(M, cfg: SolverConfig = SolverConfig()) -> ZeroSumSolution:
    """Equilibrium of the zero-sum game where the row player receives ``M``.

    ``x`` is a max-min strategy of the row player, ``y`` a min-max strategy
    of the column player (the max-min of ``-M^T``), and ``value`` the row
    player's guaranteed payoff.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0 or not np.all(np.isfinite(M)):
        raise ValueError("zero-sum payoff matrix must be a finite nonempty 2-D array")
    lo, hi = float(M.min()), float(M.max())
    if hi == lo:
        m, n = M.shape
        return ZeroSumSolution(MixedStrategy.uniform(m), MixedStrategy.uniform(n), lo)
    x_raw, v_row = _maxmin(M, cfg)
    y_raw, v_col = _maxmin(-M.T, cfg)
    x = MixedStrategy.from_noisy(x_raw)
    y = MixedStrategy.from_noisy(y_raw)
    if abs(v_row + v_col) > 2 * cfg.value_tol:
        raise SolverError(f"duality gap {v_row + v_col:.3g} exceeds tolerance")
    # report the value actually attained by the cleaned strategies
    value = float(x.probs @ M @ y.probs)
    return ZeroSumSolution(x, y, value)


def find_low_threat_mixture(
    C,
    allowed_rows: Iterable[int],
    threshold: float,
    cfg: SolverConfig = SolverConfig(),
) -> Optional[MixedStrategy]:
    """A row mixture over ``allowed_rows`` giving every column payoff at most ``threshold``.

    Minimizes the largest column payoff over mixtures supported on
    ``allowed_rows`` and accepts the minimizer when it is within
    ``cfg.feasibility_tol`` of the threshold. Returns ``None`` when no such
    mixture exists.
    """
    C = np.asarray(C, dtype=float)
    rows = sorted(set(int(i) for i in allowed_rows))
    if not rows:
        raise ValueError("allowed_rows must be nonempty")
    if rows[0] < 0 or rows[-1] >= C.shape[0]:
        raise ValueError("allowed_rows out of range")
    sub = C[rows]
    k, n = sub.shape
    c = np.zeros(k + 1)
    c[-1] = 1.0
    # (x^T C)_j - t <= 0
    A_ub = np.hstack([sub.T, -np.ones((n, 1))])
    A_eq = np.zeros((1, k + 1))
    A_eq[0, :k] = 1.0
    bounds = [(0, None)] * k + [(None, None)]
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(n), A_eq=A_eq, b_eq=[1.0],
                  bounds=bounds, method="highs-ds", options=_options(cfg))
    if res.status != 0:
        raise SolverError(f"low-threat LP failed: {res.message}")
    x_sub = MixedStrategy.from_noisy(res.x[:k])
    if float((x_sub.probs @ sub).max()) > threshold + cfg.feasibility_tol:
        return None
    return x_sub.lift(rows, C.shape[0])
