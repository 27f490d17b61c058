"""Counted black-box access to a noisy isomorphic copy ``g`` of ``f_sigma``.

The oracle composes the isomorphism first and the noise second, so that
``g(x) = f_sigma(x) XOR flip(x)``.  Three noise models are supported:

``exact``
    flips exactly ``floor(eps * 2^n)`` distinct uniformly chosen points
    (needs an explicit table, n <= 24).
``procedural``
    flips ``x`` iff a keyed 64-bit hash of ``(seed, x)`` maps below ``eps``;
    works at any n and is pure, so no state is stored per point.
``adversarial``
    flips exactly the listed points.

Queries are answered either one at a time (:meth:`Oracle.query`) or through a
:class:`BatchSession`, which releases no answer before every point has been
submitted.  A *strict* oracle refuses single queries altogether, which makes
non-adaptivity of a caller structurally checkable.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .boolfn import (
    MAX_TABLE_VARS,
    BooleanFunction,
    Isomorphism,
    nwords,
    pack_bits,
)

NOISE_MODES = ("exact", "procedural", "adversarial")

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = 0x9E3779B97F4A7C15


class PhaseError(RuntimeError):
    """An answer was requested while the batch discipline forbids it."""


def _mix64(z: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer, in place; uint64 arithmetic wraps modulo 2^64
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z


def keyed_hash(seed: int, words: np.ndarray) -> np.ndarray:
    """64-bit keyed hash of each packed point (rows of ``words``)."""
    key = _mix64(np.array([(int(seed) * _GOLDEN + 0x632BE59BD9B4E019) % (1 << 64)], dtype=np.uint64))
    h = words[:, 0] ^ key[0]
    _mix64(h)
    for j in range(1, words.shape[1]):
        h ^= words[:, j]
        _mix64(h)
    return h


def hash_uniform(seed: int, words: np.ndarray) -> np.ndarray:
    """Map each point to a float in [0, 1) with 53 bits of resolution."""
    return (keyed_hash(seed, words) >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class NoiseSpec:
    epsilon: float = 0.0
    mode: str = "procedural"
    seed: int = 0
    points: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.mode not in NOISE_MODES:
            raise ValueError(f"unknown noise mode {self.mode!r}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")

    @classmethod
    def adversarial(cls, points) -> NoiseSpec:
        """Noise flipping exactly ``points`` (iterable of 0/1 vectors)."""
        return cls(epsilon=0.0, mode="adversarial", points=tuple(tuple(int(b) for b in p) for p in points))

    def to_dict(self) -> dict:
        d = {"epsilon": self.epsilon, "mode": self.mode, "seed": self.seed}
        if self.mode == "adversarial":
            d["points"] = len(self.points)
        return d


def read_flip_file(path, n: int) -> NoiseSpec:
    """Adversarial noise from a file of hex-encoded points, one per line.

    Each line is the little-endian packing of a point: bit i of the decoded
    byte stream (LSB first) is variable i.
    """
    points = []
    try:
        lines = Path(path).read_text().split()
    except OSError as exc:
        raise ValueError(f"cannot read flip file {path}: {exc}") from exc
    for line in lines:
        raw = np.frombuffer(bytes.fromhex(line), dtype=np.uint8)
        bits = np.unpackbits(raw, bitorder="little")
        if bits.size < n or bits[n:].any():
            raise ValueError(f"flip point {line!r} does not fit {n} variables")
        points.append(bits[:n])
    return NoiseSpec.adversarial(points)


def write_flip_file(path, points) -> None:
    lines = [np.packbits(np.asarray(p, dtype=bool), bitorder="little").tobytes().hex() for p in points]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


class _Corruption:
    """Pure flip(x) for a given noise spec; shared between oracle handles."""

    def __init__(self, n: int, noise: NoiseSpec):
        self.n = n
        self.noise = noise
        self.mask = None
        self.points = None
        if noise.mode == "exact":
            if n > MAX_TABLE_VARS:
                raise ValueError(f"exact-fraction noise needs n <= {MAX_TABLE_VARS}, got {n}")
            size = 1 << n
            count = math.floor(noise.epsilon * size)
            mask = np.zeros(size, dtype=bool)
            if count:
                rng = np.random.default_rng(noise.seed)
                mask[rng.choice(size, count, replace=False)] = True
            mask.flags.writeable = False
            self.mask = mask
        elif noise.mode == "adversarial":
            if any(len(p) != n for p in noise.points):
                raise ValueError("adversarial points have the wrong dimension")
            packed = pack_bits(np.array(noise.points, dtype=np.uint8).reshape(-1, n))
            self.points = np.unique(packed, axis=0)

    def flips(self, words: np.ndarray) -> np.ndarray:
        mode = self.noise.mode
        if mode == "procedural":
            if self.noise.epsilon == 0.0:
                return np.zeros(words.shape[0], dtype=bool)
            return hash_uniform(self.noise.seed, words) < self.noise.epsilon
        if mode == "exact":
            if self.n == 0:
                return np.full(words.shape[0], bool(self.mask[0]))
            return self.mask[words[:, 0].astype(np.int64)]
        if self.points.shape[0] == 0:
            return np.zeros(words.shape[0], dtype=bool)
        row = np.dtype((np.void, self.points.dtype.itemsize * self.points.shape[1]))
        probe = np.ascontiguousarray(words).view(row).ravel()
        return np.isin(probe, self.points.view(row).ravel())


class Oracle:
    """Query access to ``g``; see the module docstring for the phase discipline."""

    def __init__(self, target: BooleanFunction, noise: NoiseSpec, strict: bool = False, _corruption=None):
        self.target = target
        self.noise = noise
        self.strict = strict
        self._corruption = _corruption or _Corruption(target.n, noise)
        self._count = 0
        self._lock = threading.Lock()
        self.phase = "free"

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def query_count(self) -> int:
        return self._count

    def handle(self, strict: bool | None = None) -> Oracle:
        """A fresh oracle over the same ``g`` with its own counter."""
        return Oracle(self.target, self.noise, self.strict if strict is None else strict, self._corruption)

    def _answer(self, words: np.ndarray) -> np.ndarray:
        # no counting here: callers account for the points they release
        return self.target.evaluate_packed(words) ^ self._corruption.flips(words).astype(np.uint8)

    def _charge(self, count: int):
        with self._lock:
            self._count += count

    def query(self, x) -> int:
        if self.strict:
            raise PhaseError("strict oracle answers only through batch sessions")
        if self.phase == "collect":
            raise PhaseError("a batch is being collected; no answers until submit_all()")
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise ValueError(f"expected a point with {self.n} variables")
        self._charge(1)
        return int(self._answer(pack_bits(x))[0])

    def session(self) -> BatchSession:
        return BatchSession(self)

    def batch(self, xs) -> np.ndarray:
        """Answer all points of ``xs`` (shape (B, n)) at once."""
        xs = np.asarray(xs)
        if xs.size == 0:
            return np.zeros(0, dtype=np.uint8)
        with self.session() as s:
            h = s.add(xs)
            s.submit_all()
            return s.answers(h)

    def batch_packed(self, words: np.ndarray) -> np.ndarray:
        with self.session() as s:
            h = s.add_packed(words)
            s.submit_all()
            return s.answers(h)

    def true_value(self, x) -> int:
        """``f_sigma(x)`` without noise and without counting (harness use only)."""
        return int(self.target.evaluate_packed(pack_bits(np.asarray(x)))[0])


class BatchSession:
    """Collects query points; answers become readable only after :meth:`submit_all`.

    Answers are computed as points arrive but are kept hidden, so memory
    stays at one byte per query regardless of the point dimension.
    """

    def __init__(self, oracle: Oracle):
        if oracle.phase == "collect":
            raise PhaseError("oracle already has an open batch")
        self.oracle = oracle
        self._chunks: list[np.ndarray] = []
        self._size = 0
        self._answers = None
        oracle.phase = "collect"

    def add(self, points) -> slice:
        points = np.asarray(points)
        if points.ndim == 1:
            points = points[None, :]
        if points.shape[1] != self.oracle.n:
            raise ValueError(f"points have {points.shape[1]} variables, oracle has {self.oracle.n}")
        return self.add_packed(pack_bits(points))

    def add_packed(self, words: np.ndarray) -> slice:
        if self._answers is not None:
            raise PhaseError("batch already submitted")
        words = np.asarray(words, dtype=np.uint64)
        if words.ndim != 2 or words.shape[1] != nwords(self.oracle.n):
            raise ValueError("packed points have the wrong word count")
        start = self._size
        if words.shape[0]:
            self._chunks.append(self.oracle._answer(words))
            self._size += words.shape[0]
        return slice(start, self._size)

    @property
    def size(self) -> int:
        return self._size

    def submit_all(self) -> None:
        if self._answers is not None:
            raise PhaseError("batch already submitted")
        self._answers = np.concatenate(self._chunks) if self._chunks else np.zeros(0, dtype=np.uint8)
        self._answers.flags.writeable = False
        self._chunks = []
        self.oracle._charge(self._size)
        self.oracle.phase = "answer"

    def answers(self, handle: slice | None = None) -> np.ndarray:
        if self._answers is None:
            raise PhaseError("answers requested before submit_all()")
        return self._answers if handle is None else self._answers[handle]

    def close(self) -> None:
        self.oracle.phase = "free"

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def make_oracle(f: BooleanFunction, sigma: Isomorphism | None, noise: NoiseSpec, strict: bool = False) -> Oracle:
    """Oracle for ``g = f_sigma`` corrupted according to ``noise``."""
    target = f if sigma is None else f.permuted(sigma)
    return Oracle(target, noise, strict=strict)
