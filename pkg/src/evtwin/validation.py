"""Input validation helpers and deterministic random substreams."""
from __future__ import annotations

import hashlib
from collections.abc import Mapping, Sequence

import numpy as np

PROB_TOL = 1e-9


def check_probability_vector(p, name: str = "probabilities") -> np.ndarray:
    """Return ``p`` as a float array after checking it is a distribution."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    if abs(arr.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"{name} must sum to 1 (got {arr.sum():.12g})")
    return arr


def check_distribution(dist: Mapping, name: str = "distribution") -> tuple[list, np.ndarray]:
    """Split a ``{outcome: probability}`` mapping into sorted outcomes and weights."""
    if not dist:
        raise ValueError(f"{name} is empty")
    keys = sorted(dist)
    probs = check_probability_vector([dist[k] for k in keys], name)
    return keys, probs


def check_unit_interval(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x}")
    return x


def check_positive(x: float, name: str) -> float:
    x = float(x)
    if not x > 0:
        raise ValueError(f"{name} must be > 0, got {x}")
    return x


def check_nonnegative(x: float, name: str) -> float:
    x = float(x)
    if not x >= 0:
        raise ValueError(f"{name} must be >= 0, got {x}")
    return x


def check_power_values(values: Sequence[float], name: str = "series") -> np.ndarray:
    """Reject NaN and negative power samples, naming the first offending rows."""
    arr = np.asarray(values, dtype=float)
    bad = np.flatnonzero(~np.isfinite(arr) | (arr < 0))
    if bad.size:
        rows = ", ".join(str(i) for i in bad[:5])
        raise ValueError(f"{name}: invalid (NaN or negative) values at rows {rows}")
    return arr


def _name_key(name) -> int:
    digest = hashlib.blake2b(str(name).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(seed: int, *names) -> np.random.Generator:
    """Independent generator for a named part of a run.

    The stream depends only on ``seed`` and ``names``, never on call order,
    so per-vehicle or per-building work can run in any order.
    """
    return np.random.default_rng([int(seed) & (2**64 - 1), *(_name_key(n) for n in names)])
