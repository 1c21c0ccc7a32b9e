"""Game and profile files, seeded instance generation and benchmark records.

Games are JSON objects ``{"rows": m, "cols": n, "R": [[...]], "C": [[...]]}``
and profiles are ``{"x": [...], "y": [...]}``. Floats are written with
``repr`` precision so a write/read round trip is bit-exact. All randomness
comes from numpy's PCG64 generator seeded with a single integer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .game import BimatrixGame, GameError, MixedStrategy, StrategyProfile, normalize

KINDS = ("uniform", "zero-sum", "constant", "force-3c")
PRNG = "numpy.PCG64"


class GameFileError(ValueError):
    """Malformed game or profile file."""


def _reject_constant(name):
    raise GameFileError(f"non-finite number {name} in input")


def _load_json(source: Union[str, Path]) -> dict:
    try:
        text = Path(source).read_text()
        data = json.loads(text, parse_constant=_reject_constant)
    except (OSError, json.JSONDecodeError) as exc:
        raise GameFileError(f"cannot read {source}: {exc}") from exc
    if not isinstance(data, dict):
        raise GameFileError("top-level JSON value must be an object")
    return data


def _matrix(data: dict, key: str, m: int, n: int) -> np.ndarray:
    raw = data.get(key)
    if not isinstance(raw, list) or len(raw) != m or any(
        not isinstance(r, list) or len(r) != n for r in raw
    ):
        raise GameFileError(f"{key} must be a {m}x{n} array")
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise GameFileError(f"{key} contains a non-number") from exc
    if any(isinstance(v, bool) for row in raw for v in row):
        raise GameFileError(f"{key} contains a boolean")
    if not np.all(np.isfinite(arr)):
        raise GameFileError(f"{key} contains a non-finite value")
    return arr


def game_from_dict(data: dict, force_normalize: bool = False):
    """Parse a game object. Payoffs outside [0, 1] are normalized per player.

    Returns ``(game, record)`` where ``record`` is the normalization record,
    or None when the payoffs were used as given.
    """
    m, n = data.get("rows"), data.get("cols")
    if not (isinstance(m, int) and isinstance(n, int)) or isinstance(m, bool) or m < 1 or n < 1:
        raise GameFileError("rows and cols must be positive integers")
    R = _matrix(data, "R", m, n)
    C = _matrix(data, "C", m, n)
    in_range = min(R.min(), C.min()) >= 0 and max(R.max(), C.max()) <= 1
    if in_range and not force_normalize:
        return BimatrixGame(R, C), None
    return normalize(R, C)


def read_game(path: Union[str, Path], force_normalize: bool = False):
    return game_from_dict(_load_json(path), force_normalize)


def game_to_dict(game: BimatrixGame) -> dict:
    return {
        "rows": game.rows,
        "cols": game.cols,
        "R": game.R.tolist(),
        "C": game.C.tolist(),
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False) + "\n"


def write_game(path: Union[str, Path], game: BimatrixGame) -> None:
    Path(path).write_text(dumps(game_to_dict(game)))


def profile_to_dict(profile: StrategyProfile) -> dict:
    return {"x": profile.row.to_list(), "y": profile.col.to_list()}


def read_profile(path: Union[str, Path]) -> StrategyProfile:
    data = _load_json(path)
    try:
        x = np.array(data["x"], dtype=float)
        y = np.array(data["y"], dtype=float)
        return StrategyProfile(MixedStrategy(x), MixedStrategy(y))
    except KeyError as exc:
        raise GameFileError(f"profile file lacks {exc}") from exc
    except (TypeError, ValueError, GameError) as exc:
        raise GameFileError(f"invalid profile: {exc}") from exc


def generate(kind: str, m: int, n: int, seed: int, value: Optional[float] = None) -> BimatrixGame:
    """Seeded random instance.

    ``uniform``: i.i.d. payoffs on [0, 1]. ``zero-sum``: ``C = 1 - R``.
    ``constant``: every payoff equals ``value`` (drawn when omitted).
    ``force-3c``: payoffs on [0.55, 1], so both zero-sum values exceed 1/2
    and no mixture can hold the opponent to 1/2; the algorithm must take
    branch 3c or 4c.
    """
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.Generator(np.random.PCG64(seed))
    if kind == "uniform":
        return BimatrixGame(rng.random((m, n)), rng.random((m, n)))
    if kind == "zero-sum":
        R = rng.random((m, n))
        return BimatrixGame(R, 1.0 - R)
    if kind == "constant":
        v = float(rng.random()) if value is None else float(value)
        return BimatrixGame(np.full((m, n), v), np.full((m, n), v))
    return BimatrixGame(rng.uniform(0.55, 1.0, (m, n)), rng.uniform(0.55, 1.0, (m, n)))


def instance_seed(seed: int, instance_id: int) -> int:
    """Per-instance 64-bit seed derived from the run seed."""
    return int(np.random.SeedSequence([seed, instance_id]).generate_state(1, np.uint64)[0])


@dataclass
class BenchRecord:
    instance_id: int
    m: int
    n: int
    delta: float
    epsilon: Optional[float]
    branch: str
    certified_epsilon: Optional[float]
    wall_time_ms: Optional[float]
    q_total: Optional[int]
    q_zero_sum_R: Optional[int]
    q_zero_sum_C: Optional[int]
    q_subgame: Optional[int]
    q_audit: Optional[int]
    seed: int
    mode: str

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list[str]:
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            out.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
        return out
