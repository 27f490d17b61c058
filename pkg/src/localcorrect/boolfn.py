"""Boolean functions over Z_2^n: explicit tables, juntas and partially symmetric functions.

Conventions used throughout the package:

* Variables are 0-based. Variable ``i`` is bit ``i`` of a truth-table index,
  i.e. ``index(x) = sum(x[i] << i)`` (variable 0 is the least-significant bit).
* A single point is a length-``n`` array of 0/1 values; a batch is an
  ``(B, n)`` array.
* Hot paths work on *packed* points: ``(B, nwords(n))`` arrays of ``uint64``
  where variable ``i`` sits in word ``i // 64`` at bit ``i % 64``. Padding
  bits above ``n`` are always zero.
"""

from __future__ import annotations

import functools
import itertools
import json
import math
from pathlib import Path

import numpy as np

MAX_TABLE_VARS = 24

_ONE = np.uint64(1)


# ---------------------------------------------------------------------------
# bit plumbing


def nwords(n: int) -> int:
    return max(1, (n + 63) // 64)


def pack_bits(bits) -> np.ndarray:
    """Pack a (B, n) or (n,) 0/1 array into (B, nwords(n)) uint64 words."""
    bits = np.asarray(bits)
    if bits.ndim == 1:
        bits = bits[None, :]
    n = bits.shape[1]
    packed = np.packbits(bits.astype(bool, copy=False), axis=1, bitorder="little")
    width = nwords(n) * 8
    if packed.shape[1] < width:
        packed = np.pad(packed, ((0, 0), (0, width - packed.shape[1])))
    return np.ascontiguousarray(packed).view("<u8").astype(np.uint64, copy=False)


def unpack_bits(words, n: int) -> np.ndarray:
    """Inverse of :func:`pack_bits`; returns a (B, n) uint8 array."""
    words = np.ascontiguousarray(np.asarray(words, dtype="<u8"))
    if words.ndim == 1:
        words = words[None, :]
    raw = words.view(np.uint8)
    return np.unpackbits(raw, axis=1, count=n, bitorder="little")


def get_bits(words: np.ndarray, positions) -> np.ndarray:
    """Bits of packed points at the given variable positions, shape (B, len(positions))."""
    pos = np.asarray(positions, dtype=np.int64)
    if pos.size == 0:
        return np.zeros((words.shape[0], 0), dtype=np.uint64)
    shifts = (pos & 63).astype(np.uint64)
    return (words[:, pos >> 6] >> shifts) & _ONE


def position_mask(positions, n: int) -> np.ndarray:
    """Packed mask (1-D, nwords(n) words) with ones at ``positions``."""
    mask = np.zeros(n, dtype=bool)
    mask[np.asarray(positions, dtype=np.int64)] = True
    return pack_bits(mask)[0]


def weights(words: np.ndarray) -> np.ndarray:
    """Hamming weight of each packed point."""
    return np.bitwise_count(words).sum(axis=1, dtype=np.int64)


def index_to_bits(index, n: int) -> np.ndarray:
    idx = np.asarray(index, dtype=np.int64)
    return ((idx[..., None] >> np.arange(n, dtype=np.int64)) & 1).astype(np.uint8)


def bits_to_index(bits) -> np.ndarray | int:
    bits = np.asarray(bits, dtype=np.int64)
    idx = bits @ (np.int64(1) << np.arange(bits.shape[-1], dtype=np.int64))
    return int(idx) if np.ndim(idx) == 0 else idx


def _assignment_index(bits: np.ndarray) -> np.ndarray:
    # bits: (B, k) uint64 -> core index sum(bits[:, j] << j)
    k = bits.shape[1]
    if k == 0:
        return np.zeros(bits.shape[0], dtype=np.int64)
    shifts = np.arange(k, dtype=np.uint64)
    return (bits << shifts).sum(axis=1).astype(np.int64)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.uint8, copy=True)
    if arr.size and arr.max(initial=0) > 1:
        raise ValueError("truth tables hold 0/1 entries only")
    arr.flags.writeable = False
    return arr


# ---------------------------------------------------------------------------
# isomorphisms


class Isomorphism:
    """A permutation ``sigma`` of the variables; ``perm[i] == sigma(i)``."""

    __slots__ = ("perm",)

    def __init__(self, perm):
        perm = tuple(int(p) for p in perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"not a permutation: {perm}")
        object.__setattr__(self, "perm", perm)

    def __setattr__(self, name, value):
        raise AttributeError("Isomorphism is immutable")

    @property
    def n(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> Isomorphism:
        return cls(range(n))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> Isomorphism:
        return cls(rng.permutation(n))

    def compose(self, inner: Isomorphism) -> Isomorphism:
        """``self ∘ inner``: the map ``i -> self(inner(i))``."""
        if inner.n != self.n:
            raise ValueError("dimension mismatch")
        return Isomorphism(self.perm[i] for i in inner.perm)

    def inverse(self) -> Isomorphism:
        inv = [0] * self.n
        for i, p in enumerate(self.perm):
            inv[p] = i
        return Isomorphism(inv)

    def __eq__(self, other):
        return isinstance(other, Isomorphism) and self.perm == other.perm

    def __hash__(self):
        return hash(self.perm)

    def __repr__(self):
        return f"Isomorphism({list(self.perm)})"


# ---------------------------------------------------------------------------
# cores


class JuntaCore:
    """Truth table of a k-junta restricted to its k variables (2^k entries)."""

    __slots__ = ("k", "table")

    def __init__(self, table):
        table = _frozen(np.ravel(table))
        k = int(round(math.log2(table.size))) if table.size else -1
        if k < 0 or table.size != 1 << k:
            raise ValueError(f"junta core needs 2^k entries, got {table.size}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "table", table)

    def __setattr__(self, name, value):
        raise AttributeError("JuntaCore is immutable")

    @classmethod
    def random(cls, k: int, rng: np.random.Generator) -> JuntaCore:
        return cls(rng.integers(0, 2, 1 << k, dtype=np.uint8))

    def __call__(self, bits) -> int:
        return int(self.table[bits_to_index(bits)])

    def permuted(self, pi) -> JuntaCore:
        """Core of ``x -> core(x[pi[0]], ..., x[pi[k-1]])``."""
        idx = np.arange(1 << self.k, dtype=np.int64)
        src = np.zeros_like(idx)
        for j, p in enumerate(pi):
            src |= ((idx >> p) & 1) << j
        return JuntaCore(self.table[src])

    def __eq__(self, other):
        return isinstance(other, JuntaCore) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.table.tobytes())

    def __repr__(self):
        return f"JuntaCore(k={self.k})"


class PsfCore:
    """Core of an (n-k)-symmetric function: table[a, w] with a in Z_2^k, w in 0..m."""

    __slots__ = ("k", "m", "table")

    def __init__(self, table):
        table = _frozen(table)
        if table.ndim != 2:
            raise ValueError("psf core table must be 2-D (2^k, m+1)")
        rows, cols = table.shape
        k = int(round(math.log2(rows))) if rows else -1
        if k < 0 or rows != 1 << k or cols < 1:
            raise ValueError(f"psf core needs shape (2^k, m+1), got {table.shape}")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "m", cols - 1)
        object.__setattr__(self, "table", table)

    def __setattr__(self, name, value):
        raise AttributeError("PsfCore is immutable")

    @classmethod
    def random(cls, k: int, m: int, rng: np.random.Generator) -> PsfCore:
        return cls(rng.integers(0, 2, (1 << k, m + 1), dtype=np.uint8))

    def __call__(self, bits, weight: int) -> int:
        return int(self.table[bits_to_index(bits) if len(bits) else 0, weight])

    def permuted(self, pi) -> PsfCore:
        idx = np.arange(1 << self.k, dtype=np.int64)
        src = np.zeros_like(idx)
        for j, p in enumerate(pi):
            src |= ((idx >> p) & 1) << j
        return PsfCore(self.table[src])

    def __eq__(self, other):
        return isinstance(other, PsfCore) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash((self.table.shape, self.table.tobytes()))

    def __repr__(self):
        return f"PsfCore(k={self.k}, m={self.m})"


@functools.lru_cache(maxsize=16)
def permutation_index_maps(k: int) -> tuple[np.ndarray, np.ndarray]:
    """All permutations of range(k) in lexicographic order, and for each one
    the index map ``a -> sum(bit_{pi[j]}(a) << j)`` over a in [0, 2^k).

    ``table[maps[p]]`` is the core ``x -> core(x[pi[0]], ..., x[pi[k-1]])``.
    """
    perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64).reshape(-1, k)
    a = np.arange(1 << k, dtype=np.int64)
    maps = np.zeros((perms.shape[0], a.size), dtype=np.int64)
    for j in range(k):
        maps |= ((a[None, :] >> perms[:, j, None]) & 1) << j
    perms.flags.writeable = False
    maps.flags.writeable = False
    return perms, maps


# ---------------------------------------------------------------------------
# function views


class BooleanFunction:
    """Common evaluation facade. Subclasses are immutable."""

    kind = "abstract"
    n: int

    def evaluate_packed(self, words: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate(self, points) -> np.ndarray:
        points = np.asarray(points)
        if points.shape[-1] != self.n:
            raise ValueError(f"point has {points.shape[-1]} variables, function has {self.n}")
        return self.evaluate_packed(pack_bits(points))

    def __call__(self, x) -> int:
        x = np.asarray(x)
        if x.ndim != 1:
            raise ValueError("call with a single point; use evaluate() for batches")
        return int(self.evaluate(x)[0])

    def permuted(self, sigma: Isomorphism) -> BooleanFunction:
        raise NotImplementedError

    def _check_sigma(self, sigma: Isomorphism):
        if sigma.n != self.n:
            raise ValueError(f"isomorphism on {sigma.n} variables, function has {self.n}")

    def materialize(self) -> TableFunction:
        """Explicit truth table (n <= 24)."""
        if self.n > MAX_TABLE_VARS:
            raise ValueError(f"cannot materialize a table with n={self.n} > {MAX_TABLE_VARS}")
        out = np.empty(1 << self.n, dtype=np.uint8)
        for start, stop, words in _index_chunks(self.n):
            out[start:stop] = self.evaluate_packed(words)
        return TableFunction(out)


class TableFunction(BooleanFunction):
    kind = "table"
    __slots__ = ("n", "table")

    def __init__(self, table):
        table = _frozen(np.ravel(table))
        n = int(round(math.log2(table.size))) if table.size else -1
        if n < 0 or table.size != 1 << n:
            raise ValueError(f"table length must be a power of two, got {table.size}")
        if n > MAX_TABLE_VARS:
            raise ValueError(f"explicit tables are capped at n={MAX_TABLE_VARS}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "table", table)

    def __setattr__(self, name, value):
        raise AttributeError("TableFunction is immutable")

    @classmethod
    def from_callable(cls, fn, n: int) -> TableFunction:
        bits = index_to_bits(np.arange(1 << n), n)
        return cls([int(fn(row)) & 1 for row in bits])

    def evaluate_packed(self, words):
        if self.n == 0:
            return np.full(words.shape[0], self.table[0], dtype=np.uint8)
        idx = (words[:, 0] & np.uint64((1 << self.n) - 1)).astype(np.int64)
        return self.table[idx]

    def permuted(self, sigma):
        self._check_sigma(sigma)
        idx = np.arange(1 << self.n, dtype=np.int64)
        src = np.zeros_like(idx)
        for i, p in enumerate(sigma.perm):
            src |= ((idx >> p) & 1) << i
        return TableFunction(self.table[src])

    def materialize(self):
        return self

    def __eq__(self, other):
        return isinstance(other, TableFunction) and np.array_equal(self.table, other.table)

    def __hash__(self):
        return hash(self.table.tobytes())

    def __repr__(self):
        return f"TableFunction(n={self.n})"


class _PositionedFunction(BooleanFunction):
    __slots__ = ("n", "core", "positions")

    def __init__(self, core, positions, n: int):
        positions = tuple(int(p) for p in positions)
        if len(positions) != core.k:
            raise ValueError(f"core has arity {core.k} but {len(positions)} positions given")
        if len(set(positions)) != len(positions):
            raise ValueError("positions must be distinct")
        if any(p < 0 or p >= n for p in positions):
            raise ValueError(f"positions must lie in [0, {n})")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "positions", positions)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    def permuted(self, sigma):
        self._check_sigma(sigma)
        return type(self)(self.core, [sigma.perm[p] for p in self.positions], self.n)

    def __eq__(self, other):
        return (
            type(other) is type(self)
            and self.n == other.n
            and self.positions == other.positions
            and self.core == other.core
        )

    def __hash__(self):
        return hash((self.kind, self.n, self.positions, hash(self.core)))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, k={self.core.k}, positions={self.positions})"


class JuntaFunction(_PositionedFunction):
    """``f(x) = core(x[positions[0]], ..., x[positions[k-1]])``."""

    kind = "junta"
    __slots__ = ()

    def __init__(self, core: JuntaCore, positions, n: int):
        super().__init__(core, positions, n)

    def evaluate_packed(self, words):
        idx = _assignment_index(get_bits(words, self.positions))
        return self.core.table[idx]


class PsfFunction(_PositionedFunction):
    """``f(x) = core(x[positions], |x outside positions|)``."""

    kind = "psf"
    __slots__ = ()

    def __init__(self, core: PsfCore, positions, n: int):
        if core.m != n - core.k:
            raise ValueError(f"psf core covers m={core.m} symmetric variables, expected {n - core.k}")
        super().__init__(core, positions, n)

    def evaluate_packed(self, words):
        bits = get_bits(words, self.positions)
        idx = _assignment_index(bits)
        rest = weights(words) - bits.sum(axis=1, dtype=np.int64)
        return self.core.table[idx, rest]


def dictator(n: int, i: int) -> JuntaFunction:
    return JuntaFunction(JuntaCore([0, 1]), [i], n)


def constant(n: int, value: int = 0) -> JuntaFunction:
    return JuntaFunction(JuntaCore([value]), [], n)


# ---------------------------------------------------------------------------
# distance


def _index_chunks(n: int, chunk: int = 1 << 18):
    total = 1 << n
    for start in range(0, total, chunk):
        stop = min(total, start + chunk)
        idx = np.arange(start, stop, dtype=np.uint64)
        words = np.zeros((stop - start, nwords(n)), dtype=np.uint64)
        words[:, 0] = idx
        yield start, stop, words


def random_points(count: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform packed points in Z_2^n."""
    words = rng.integers(0, np.iinfo(np.uint64).max, (count, nwords(n)), dtype=np.uint64, endpoint=True)
    tail = n % 64
    if tail:
        words[:, -1] &= np.uint64((1 << tail) - 1)
    elif n == 0:
        words[:] = 0
    return words


def distance(f: BooleanFunction, g: BooleanFunction, mode: str = "exact", samples: int = 100_000, seed=None) -> float:
    """Fraction of inputs where ``f`` and ``g`` disagree.

    ``mode="exact"`` enumerates all 2^n points (n <= 24); ``mode="sampled"``
    uses ``samples`` uniform points drawn from ``seed``.
    """
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    if mode == "exact":
        if f.n > MAX_TABLE_VARS:
            raise ValueError(f"exact distance needs n <= {MAX_TABLE_VARS}")
        diff = 0
        for _, _, words in _index_chunks(f.n):
            diff += int(np.count_nonzero(f.evaluate_packed(words) != g.evaluate_packed(words)))
        return diff / (1 << f.n)
    if mode == "sampled":
        rng = np.random.default_rng(seed)
        words = random_points(samples, f.n, rng)
        return float(np.mean(f.evaluate_packed(words) != g.evaluate_packed(words)))
    raise ValueError(f"unknown distance mode {mode!r}")


# ---------------------------------------------------------------------------
# descriptor files
#
# JSON object: {"format": "localcorrect-function", "version": 1, "kind", "n",
# "k", "m" (psf only), "table_hex", "positions", "sigma"}. Table entry i is bit
# (i % 8) of byte (i // 8) of the hex-decoded stream (least-significant bit
# first). psf tables are flattened row-major: entry a * (m + 1) + w. Variable
# indices (positions, sigma) are 0-based; table index bit i is variable i.

DESCRIPTOR_FORMAT = "localcorrect-function"


def table_to_hex(table) -> str:
    return np.packbits(np.ravel(table).astype(bool), bitorder="little").tobytes().hex()


def table_from_hex(text: str, size: int) -> np.ndarray:
    raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
    if raw.size * 8 < size:
        raise ValueError(f"hex table too short for {size} entries")
    return np.unpackbits(raw, count=size, bitorder="little")


def to_descriptor(f: BooleanFunction, sigma: Isomorphism | None = None) -> dict:
    if isinstance(f, TableFunction):
        d = {"kind": "table", "n": f.n, "k": f.n, "table_hex": table_to_hex(f.table), "positions": []}
    elif isinstance(f, JuntaFunction):
        d = {"kind": "junta", "n": f.n, "k": f.core.k, "table_hex": table_to_hex(f.core.table),
             "positions": list(f.positions)}
    elif isinstance(f, PsfFunction):
        d = {"kind": "psf", "n": f.n, "k": f.core.k, "m": f.core.m,
             "table_hex": table_to_hex(f.core.table), "positions": list(f.positions)}
    else:
        raise TypeError(f"cannot serialize {type(f).__name__}")
    if sigma is not None:
        d["sigma"] = list(sigma.perm)
    return {"format": DESCRIPTOR_FORMAT, "version": 1, **d}


def from_descriptor(d: dict) -> tuple[BooleanFunction, Isomorphism | None]:
    if d.get("format", DESCRIPTOR_FORMAT) != DESCRIPTOR_FORMAT:
        raise ValueError(f"not a function descriptor: {d.get('format')!r}")
    kind, n, k = d["kind"], int(d["n"]), int(d["k"])
    if kind == "table":
        f = TableFunction(table_from_hex(d["table_hex"], 1 << n))
    elif kind == "junta":
        f = JuntaFunction(JuntaCore(table_from_hex(d["table_hex"], 1 << k)), d["positions"], n)
    elif kind == "psf":
        m = int(d.get("m", n - k))
        table = table_from_hex(d["table_hex"], (1 << k) * (m + 1)).reshape(1 << k, m + 1)
        f = PsfFunction(PsfCore(table), d["positions"], n)
    else:
        raise ValueError(f"unknown function kind {kind!r}")
    sigma = Isomorphism(d["sigma"]) if d.get("sigma") is not None else None
    return f, sigma


def save_function(path, f: BooleanFunction, sigma: Isomorphism | None = None) -> None:
    Path(path).write_text(json.dumps(to_descriptor(f, sigma), indent=1) + "\n")


def load_function(path) -> tuple[BooleanFunction, Isomorphism | None]:
    try:
        return from_descriptor(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read function descriptor {path}: {exc}") from exc
