"""Random partitions and query distributions that are constant on partition blocks.

Three samplers are provided, all returning packed points (see
:mod:`localcorrect.boolfn`):

* :func:`sample_balanced`: pick a uniformly random half of the blocks and set
  every variable in them to 1.
* :func:`sample_merged`: independent balanced draws on two partitions of
  complementary ground sets, merged into one point.
* :func:`sample_workspace`: draw a weight ``w ~ B(n, 1/2)`` and return a
  uniformly random point of weight ``w`` that is constant on every block
  except the workspace, or the zero vector if none exists.

Uniformity of the workspace sampler rests on exact integer counting; no
floating-point probabilities are involved.
"""

from __future__ import annotations

import random
from math import comb

import numpy as np

from .boolfn import nwords, pack_bits, position_mask
from .influence import pack_columns

_INT64_SAFE = 2**63 - 1


class Partition:
    """Disjoint blocks of variables (empty blocks allowed) with an optional workspace block."""

    __slots__ = ("n", "blocks", "workspace", "block_of", "_masks")

    def __init__(self, n: int, blocks, workspace: int | None = None):
        blocks = tuple(tuple(sorted(int(i) for i in b)) for b in blocks)
        block_of = np.full(n, -1, dtype=np.int64)
        for b, members in enumerate(blocks):
            for i in members:
                if not 0 <= i < n:
                    raise ValueError(f"variable {i} out of range for n={n}")
                if block_of[i] != -1:
                    raise ValueError(f"variable {i} appears in more than one block")
                block_of[i] = b
        if workspace is not None and not 0 <= workspace < len(blocks):
            raise ValueError("workspace must name one of the blocks")
        block_of.flags.writeable = False
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "workspace", workspace)
        object.__setattr__(self, "block_of", block_of)
        object.__setattr__(self, "_masks", {})

    def __setattr__(self, name, value):
        raise AttributeError("Partition is immutable")

    def __len__(self):
        return len(self.blocks)

    @property
    def ground(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.block_of >= 0))

    def nonempty(self, include_workspace: bool = True) -> list[int]:
        return [
            b for b, members in enumerate(self.blocks)
            if members and (include_workspace or b != self.workspace)
        ]

    def union(self, block_ids) -> tuple[int, ...]:
        """Variables lying in any of ``block_ids``."""
        chosen = np.zeros(len(self.blocks) + 1, dtype=bool)
        chosen[np.asarray(list(block_ids), dtype=np.int64)] = True
        return tuple(int(i) for i in np.flatnonzero(chosen[self.block_of]))

    def mask(self, b: int) -> np.ndarray:
        """Packed indicator of block ``b`` (cached)."""
        if b not in self._masks:
            self._masks[b] = position_mask(self.blocks[b], self.n)
        return self._masks[b]

    def separates(self, variables) -> bool:
        """True iff the given variables all lie in distinct blocks (and none in the workspace)."""
        ids = [int(self.block_of[v]) for v in variables]
        if any(b < 0 or b == self.workspace for b in ids):
            return False
        return len(set(ids)) == len(ids)

    @classmethod
    def merge(cls, *parts: Partition, workspace=None) -> Partition:
        """Concatenate the blocks of partitions over disjoint ground sets.

        If ``workspace`` (a collection of variables) is given it is appended
        as the last block and designated the workspace.
        """
        n = parts[0].n
        blocks = [b for p in parts for b in p.blocks]
        ws = None
        if workspace is not None:
            blocks.append(tuple(workspace))
            ws = len(blocks) - 1
        return cls(n, blocks, workspace=ws)

    def to_dict(self) -> dict:
        return {"n": self.n, "blocks": [list(b) for b in self.blocks if b], "workspace": self.workspace,
                "num_blocks": len(self.blocks)}

    def __eq__(self, other):
        return (isinstance(other, Partition) and self.n == other.n and self.blocks == other.blocks
                and self.workspace == other.workspace)

    def __hash__(self):
        return hash((self.n, self.blocks, self.workspace))

    def __repr__(self):
        return f"Partition(n={self.n}, blocks={len(self.blocks)}, nonempty={len(self.nonempty())}, workspace={self.workspace})"


def random_partition(ground, s: int, n: int, rng: np.random.Generator) -> Partition:
    """Assign each element of ``ground`` to one of ``s`` blocks uniformly and independently."""
    if s < 1:
        raise ValueError("need at least one block")
    ground = np.asarray(list(ground), dtype=np.int64)
    labels = rng.integers(0, s, ground.size)
    blocks = [[] for _ in range(s)]
    for i, lab in zip(ground.tolist(), labels.tolist()):
        blocks[lab].append(i)
    return Partition(n, blocks)


# ---------------------------------------------------------------------------
# balanced block-constant vectors


def _fill_blocks(p: Partition, ids, chosen: np.ndarray) -> np.ndarray:
    """Packed points with block ``ids[j]`` set wherever ``chosen[:, j]``."""
    out = np.zeros((chosen.shape[0], nwords(p.n)), dtype=np.uint64)
    for j, b in enumerate(ids):
        out |= chosen[:, j, None].astype(np.uint64) * p.mask(b)
    return out


def balanced_indicators(num_blocks: int, ids_count: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """First ``ids_count`` coordinates of uniform weight-``num_blocks/2`` vectors in Z_2^num_blocks.

    Coordinates are drawn sequentially with exact integer odds, so only the
    coordinates actually needed are ever materialized.
    """
    ones_left = np.full(size, num_blocks // 2, dtype=np.int64)
    z = np.zeros((size, ids_count), dtype=bool)
    for j in range(ids_count):
        u = rng.integers(0, num_blocks - j, size)
        z[:, j] = u < ones_left
        ones_left -= z[:, j]
    return z


def sample_balanced(p: Partition, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` draws of y: a random half of the blocks set to 1, the rest 0."""
    if p.workspace is not None:
        raise ValueError("balanced sampling takes a partition without workspace")
    if len(p.blocks) % 2:
        raise ValueError(f"balanced sampling needs an even number of blocks, got {len(p.blocks)}")
    ids = p.nonempty()
    return _fill_blocks(p, ids, balanced_indicators(len(p.blocks), len(ids), size, rng))


def sample_balanced_fresh(ground, s: int, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` draws of y, each from its own random ``s``-block partition of ``ground``.

    Same law as ``sample_balanced(random_partition(ground, s, n, rng), rng)``
    repeated ``size`` times, computed in one pass.
    """
    if s % 2:
        raise ValueError(f"balanced sampling needs an even number of blocks, got {s}")
    ground = np.asarray(list(ground), dtype=np.int64)
    labels = rng.integers(0, s, (size, ground.size))
    z = balanced_indicators(s, s, size, rng)
    return pack_columns(np.take_along_axis(z, labels, axis=1), ground, n)


def sample_merged(p0: Partition, p1: Partition, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Independent balanced draws on two partitions of disjoint ground sets, merged."""
    if p0.n != p1.n:
        raise ValueError("partitions live on different dimensions")
    if np.any((p0.block_of >= 0) & (p1.block_of >= 0)):
        raise ValueError("merged partitions must have disjoint ground sets")
    return sample_balanced(p0, rng, size) | sample_balanced(p1, rng, size)


# ---------------------------------------------------------------------------
# workspace distribution


class WeightCountTable:
    """Exact counts of block-subsets by total size, over the given block sizes.

    ``prefix[i][t]`` counts subsets of the first ``i`` blocks with total size
    ``t``; ``counts`` is the last row.
    """

    def __init__(self, sizes):
        self.sizes = tuple(int(a) for a in sizes)
        total = sum(self.sizes)
        row = [1] + [0] * total
        self.prefix = [row]
        for a in self.sizes:
            nxt = row[:]
            for t in range(a, total + 1):
                nxt[t] += row[t - a]
            self.prefix.append(nxt)
            row = nxt

    @property
    def counts(self) -> list[int]:
        return self.prefix[-1]

    def __getitem__(self, t: int) -> int:
        c = self.counts
        return c[t] if 0 <= t < len(c) else 0


def _workspace_parts(p: Partition):
    if p.workspace is None:
        raise ValueError("partition has no workspace")
    ids = p.nonempty(include_workspace=False)
    table = WeightCountTable(len(p.blocks[b]) for b in ids)
    return ids, table, p.blocks[p.workspace]


def count_weighted(p: Partition, w: int) -> int:
    """Number of weight-``w`` points constant on every non-workspace block."""
    _, table, ws = _workspace_parts(p)
    c = len(ws)
    return sum(table[t] * comb(c, w - t) for t in range(max(0, w - c), w + 1))


def sample_workspace(p: Partition, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """``size`` draws from the workspace distribution (see module docstring)."""
    ids, table, ws = _workspace_parts(p)
    if len(p.blocks) % 2 == 0:
        raise ValueError(f"workspace sampling needs an odd number of blocks, got {len(p.blocks)}")
    n = p.n
    w = rng.binomial(n, 0.5, size)
    if comb(n, n // 2) <= _INT64_SAFE:
        return _sample_workspace_int64(p, ids, table, ws, w, rng)
    return _sample_workspace_bigint(p, ids, table, ws, w, rng)


def _sample_workspace_int64(p, ids, table, ws, w, rng):
    size = w.size
    c = len(ws)
    L = len(ids)
    T = len(table.counts)
    prefix = np.array(table.prefix, dtype=np.int64)  # (L+1, T)
    ws_comb = np.array([comb(c, j) for j in range(c + 1)], dtype=np.int64)

    t_grid = np.arange(T, dtype=np.int64)
    j = w[:, None] - t_grid[None, :]
    ok = (j >= 0) & (j <= c)
    weight = np.where(ok, prefix[L][None, :] * ws_comb[np.clip(j, 0, c)], 0)
    total = weight.sum(axis=1)
    live = total > 0

    u = np.zeros(size, dtype=np.int64)
    u[live] = rng.integers(0, total[live])
    t = np.argmax(np.cumsum(weight, axis=1) > u[:, None], axis=1).astype(np.int64)
    t[~live] = 0

    chosen = np.zeros((size, L), dtype=bool)
    left = t.copy()
    for i in range(L, 0, -1):
        a = table.sizes[i - 1]
        denom = prefix[i][left]
        take = np.where(left >= a, prefix[i - 1][np.maximum(left - a, 0)], 0)
        draw = rng.integers(0, np.maximum(denom, 1))
        inc = live & (draw < take)
        chosen[:, i - 1] = inc
        left -= a * inc

    out = _fill_blocks(p, ids, chosen)
    if c:
        k_ws = np.where(live, w - t, 0)
        ranks = np.argsort(np.argsort(rng.random((size, c)), axis=1), axis=1)
        out |= pack_columns(ranks < k_ws[:, None], ws, p.n)
    return out


def _sample_workspace_bigint(p, ids, table, ws, w, rng):
    # same algorithm with Python integers, for n where binomials overflow int64
    py = random.Random(int(rng.integers(0, 2**63)))
    c = len(ws)
    L = len(ids)
    rows = np.zeros((w.size, p.n), dtype=np.uint8)
    for r, wr in enumerate(w.tolist()):
        weights = [table[t] * comb(c, wr - t) if 0 <= wr - t <= c else 0 for t in range(len(table.counts))]
        total = sum(weights)
        if total == 0:
            continue
        u = py.randrange(total)
        t = 0
        while u >= weights[t]:
            u -= weights[t]
            t += 1
        left = t
        for i in range(L, 0, -1):
            a = table.sizes[i - 1]
            take = table.prefix[i - 1][left - a] if left >= a else 0
            if py.randrange(table.prefix[i][left]) < take:
                rows[r, list(p.blocks[ids[i - 1]])] = 1
                left -= a
        for i in py.sample(ws, wr - t):
            rows[r, i] = 1
    return pack_bits(rows)
