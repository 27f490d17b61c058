"""Influence and symmetric influence: exact closed forms and query estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .boolfn import (
    BooleanFunction,
    nwords,
    position_mask,
    random_points,
)
from .oracle import Oracle

MAX_EXACT_VARS = 20


def varset(J, n: int) -> tuple[int, ...]:
    """Validate a variable set and return it as a sorted tuple."""
    J = tuple(int(j) for j in J)
    if len(set(J)) != len(J):
        raise ValueError(f"variable set has repeated indices: {J}")
    if any(j < 0 or j >= n for j in J):
        raise ValueError(f"variable set {J} out of range for n={n}")
    return tuple(sorted(J))


@dataclass(frozen=True)
class EstimatorParams:
    delta: float
    eta: float

    def __post_init__(self):
        if not (0 < self.delta < 1 and 0 < self.eta < 1):
            raise ValueError("delta and eta must lie in (0, 1)")

    @property
    def q(self) -> int:
        return math.ceil(math.log(2 / self.eta) / (2 * self.delta**2))


# ---------------------------------------------------------------------------
# exact


def _completion_matrix(f: BooleanFunction, J) -> np.ndarray:
    """f's table as rows = assignments outside J, columns = assignments to J."""
    n = f.n
    if n > MAX_EXACT_VARS:
        raise ValueError(f"exact path supports n <= {MAX_EXACT_VARS}, got n={n}")
    J = varset(J, n)
    vals = f.materialize().table.astype(np.float64)
    # C-order axis a of the reshaped table is variable n-1-a
    inside = [n - 1 - j for j in J]
    outside = [a for a in range(n) if a not in inside]
    arr = vals.reshape((2,) * n).transpose(outside + inside)
    return arr.reshape(1 << (n - len(J)), 1 << len(J))


def influence_exact(f: BooleanFunction, J) -> float:
    """Pr_{x,y}[f(x) != f(x with J resampled from y)], n <= 20."""
    ones = _completion_matrix(f, J).mean(axis=1)
    return float(np.mean(2 * ones * (1 - ones)))


def symmetric_influence_exact(f: BooleanFunction, J) -> float:
    """Pr_{x, pi in S_J}[f(x) != f(pi x)], n <= 20.

    Given the bits outside J and the weight w of x_J, pi x_J is uniform on the
    weight-w layer, so each layer contributes 2 p_w (1 - p_w).
    """
    arr = _completion_matrix(f, J)
    m = arr.shape[1].bit_length() - 1
    layer = np.bitwise_count(np.arange(1 << m, dtype=np.uint64)).astype(np.int64)
    total = np.zeros(arr.shape[0])
    for w in range(m + 1):
        p = arr[:, layer == w].mean(axis=1)
        total += comb(m, w, exact=True) / 2**m * 2 * p * (1 - p)
    return float(total.mean())


# ---------------------------------------------------------------------------
# query points
#
# Every estimator round is a pair of points drawn up front, so all rounds can
# be submitted to a batch oracle before any answer is seen.


def influence_pairs(n: int, J, q: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Packed (x, x_{~J} y_J) pairs for ``q`` influence rounds."""
    x = random_points(q, n, rng)
    y = random_points(q, n, rng)
    if len(J) == 0:
        return x, x.copy()
    mask = position_mask(J, n)
    return x, (x & ~mask) | (y & mask)


def shuffle_columns(planes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Independently shuffle each column of an (m, count) array, in place.

    Column ``c`` is permuted by its own uniform permutation, drawn with the
    unbiased Fisher-Yates shuffle (vectorized across columns).
    """
    m, count = planes.shape
    flat = planes.reshape(-1)
    cols = np.arange(count, dtype=np.int64)
    for i in range(m - 1, 0, -1):
        idx = rng.integers(0, i + 1, count) * count + cols
        row = flat[i * count:(i + 1) * count]
        picked = flat.take(idx)
        flat[idx] = row
        row[:] = picked
    return planes


def random_permutations(m: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent uniform permutations of range(m), one per row."""
    planes = np.repeat(np.arange(m, dtype=np.int64)[:, None], count, axis=1)
    return shuffle_columns(planes, rng).T.copy()


def bit_planes(words: np.ndarray, positions) -> np.ndarray:
    """(len(positions), B) uint8 array: row t holds bit ``positions[t]`` of every point."""
    planes = np.empty((len(positions), words.shape[0]), dtype=np.uint8)
    for t, p in enumerate(positions):
        planes[t] = (words[:, p >> 6] >> np.uint64(p & 63)) & np.uint64(1)
    return planes


def pack_planes(planes: np.ndarray, positions, n: int) -> np.ndarray:
    """Packed points carrying ``planes[t]`` at variable ``positions[t]`` and zeros elsewhere."""
    out = np.zeros((planes.shape[1], nwords(n)), dtype=np.uint64)
    for t, p in enumerate(positions):
        out[:, p >> 6] |= planes[t].astype(np.uint64) << np.uint64(p & 63)
    return out


def pack_columns(bits: np.ndarray, positions, n: int) -> np.ndarray:
    """Packed points carrying ``bits[:, t]`` at variable ``positions[t]`` and zeros elsewhere."""
    return pack_planes(np.asarray(bits).T, positions, n)


def symmetric_pairs(n: int, J, q: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Packed (x, pi x) pairs, pi uniform over permutations moving only J."""
    x = random_points(q, n, rng)
    J = [int(j) for j in J]
    if len(J) < 2:
        return x, x.copy()
    planes = shuffle_columns(bit_planes(x, J), rng)
    mask = position_mask(J, n)
    return x, (x & ~mask) | pack_planes(planes, J, n)


# ---------------------------------------------------------------------------
# estimators


def _estimate(oracle: Oracle, x: np.ndarray, x2: np.ndarray) -> float:
    with oracle.session() as s:
        a = s.add_packed(x)
        b = s.add_packed(x2)
        s.submit_all()
        return float(np.mean(s.answers(a) != s.answers(b)))


def estimate_influence(oracle: Oracle, J, params: EstimatorParams, rng: np.random.Generator) -> float:
    """Fraction of ``params.q`` random rounds where resampling J changes g (2 queries per round)."""
    J = varset(J, oracle.n)
    return _estimate(oracle, *influence_pairs(oracle.n, J, params.q, rng))


def estimate_symmetric_influence(oracle: Oracle, J, params: EstimatorParams, rng: np.random.Generator) -> float:
    """Fraction of ``params.q`` rounds where a random permutation of J changes g."""
    J = varset(J, oracle.n)
    return _estimate(oracle, *symmetric_pairs(oracle.n, J, params.q, rng))


def symmetric_influence_sampled(f: BooleanFunction, J, samples: int, rng: np.random.Generator) -> float:
    """Monte-Carlo symmetric influence of ``f`` itself (no oracle, no counting)."""
    J = varset(J, f.n)
    x, px = symmetric_pairs(f.n, J, samples, rng)
    return float(np.mean(f.evaluate_packed(x) != f.evaluate_packed(px)))
