"""Local correctors for juntas and partially symmetric functions.

Both correctors are non-adaptive: every query point (set-finder rounds and
the permutation-scoring samples) is drawn from ``x`` and the corrector's own
randomness, submitted to one :class:`~localcorrect.oracle.BatchSession`, and
only then are answers read.  They therefore run unchanged against a strict
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .boolfn import JuntaCore, PsfCore, get_bits, permutation_index_maps, weights
from .influence import EstimatorParams, influence_pairs, symmetric_pairs
from .oracle import Oracle
from .sampling import Partition, random_partition, sample_merged, sample_workspace


@dataclass(frozen=True)
class ConstantsProfile:
    """Constants of the correctors.

    ``paper()`` is the reference parameter set: partitions of 400k^2 (juntas)
    or 100k^2 (partially symmetric) blocks per side, ``ceil(12 k ln s)``
    set-finder rounds, ``2500 ceil(k log2 k)`` scoring samples, set-finder
    noise parameter 0.01 with estimator accuracy 0.01, confidence
    ``1/(20 r)`` and removal threshold ``3 * 0.01``.
    """

    name: str = "paper"
    junta_s_factor: float = 400
    psf_s_factor: float = 100
    perm_samples_factor: float = 2500
    set_rounds_factor: float = 12
    set_finder_epsilon: float = 0.01
    threshold_factor: float = 3
    max_k: int = 8
    scale: float = 1.0

    @classmethod
    def paper(cls) -> ConstantsProfile:
        return cls()

    @classmethod
    def scaled(cls, factor: float = 10) -> ConstantsProfile:
        """Partition sizes and scoring samples divided by ``factor``. Carries no guarantee."""
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        base = cls()
        return replace(
            base,
            name=f"scaled:{factor:g}",
            junta_s_factor=base.junta_s_factor / factor,
            psf_s_factor=base.psf_s_factor / factor,
            perm_samples_factor=base.perm_samples_factor / factor,
            max_k=10,
            scale=factor,
        )

    @classmethod
    def parse(cls, text: str) -> ConstantsProfile:
        if text == "paper":
            return cls.paper()
        if text.startswith("scaled"):
            _, _, factor = text.partition(":")
            return cls.scaled(float(factor) if factor else 10)
        raise ValueError(f"unknown profile {text!r}")

    def partition_size(self, family: str, k: int) -> int:
        factor = self.junta_s_factor if family == "junta" else self.psf_s_factor
        return max(1, math.ceil(factor * k * k))

    def perm_samples(self, k: int) -> int:
        klogk = math.ceil(k * math.log2(k)) if k > 1 else 0
        return math.ceil(self.perm_samples_factor * klogk)

    def set_rounds(self, k: int, num_blocks: int) -> int:
        return math.ceil(self.set_rounds_factor * k * math.log(num_blocks))

    def estimator(self, rounds: int) -> EstimatorParams:
        return EstimatorParams(self.set_finder_epsilon, 1 / (20 * rounds))

    def to_dict(self) -> dict:
        return {
            "name": self.name, "junta_s_factor": self.junta_s_factor, "psf_s_factor": self.psf_s_factor,
            "perm_samples_factor": self.perm_samples_factor, "set_rounds_factor": self.set_rounds_factor,
            "set_finder_epsilon": self.set_finder_epsilon, "threshold_factor": self.threshold_factor,
            "max_k": self.max_k, "scale": self.scale,
        }


PAPER = ConstantsProfile.paper()


@dataclass
class CorrectionTrace:
    partition: Partition | None = None
    found: tuple[int, ...] = ()
    representatives: tuple[int, ...] = ()
    scores: np.ndarray | None = field(default=None, repr=False)
    permutation: tuple[int, ...] | None = None
    query_count: int = 0
    output: int = 0
    stage: str = "none"

    def to_dict(self) -> dict:
        return {
            "found": list(self.found),
            "representatives": list(self.representatives),
            "permutation": None if self.permutation is None else list(self.permutation),
            "best_score": None if self.scores is None or not len(self.scores) else int(self.scores.max()),
            "query_count": self.query_count,
            "output": self.output,
            "stage": self.stage,
            "partition": None if self.partition is None else self.partition.to_dict(),
        }


# ---------------------------------------------------------------------------
# set finding


class _SetSearch:
    """Rounds of Find-Influencing-Sets / Find-Asymmetric-Sets, split into plan and resolve."""

    def __init__(self, partition: Partition, k: int, eps: float, pairs, rng, rounds_factor: float = 12,
                 threshold_factor: float = 3):
        if k < 1:
            raise ValueError("set search needs k >= 1")
        if eps <= 0:
            raise ValueError("eps must be positive")
        s = len(partition)
        if s <= 5:
            raise ValueError(f"set search needs more than 5 blocks, got {s}")
        self.partition = partition
        self.k = k
        self.eps = eps
        self.threshold = threshold_factor * eps
        self.rounds = math.ceil(rounds_factor * k * math.log(s))
        self.params = EstimatorParams(eps, 1 / (20 * self.rounds))
        # k = 1 would put every block in every round; see decisions
        inclusion = 1 / max(k, 2)
        self.subsets = rng.random((self.rounds, s)) < inclusion
        self.pairs = pairs
        self.rng = rng
        self.handles = []
        self.estimates = None

    @property
    def query_count(self) -> int:
        return self.rounds * 2 * self.params.q

    def plan(self, session) -> None:
        n = self.partition.n
        q = self.params.q
        for T in self.subsets:
            J = self.partition.union(np.flatnonzero(T))
            x, x2 = self.pairs(n, J, q, self.rng)
            self.handles.append((session.add_packed(x), session.add_packed(x2)))

    def resolve(self, session) -> frozenset[int]:
        survivors = np.ones(len(self.partition), dtype=bool)
        est = np.empty(self.rounds)
        for i, (a, b) in enumerate(self.handles):
            est[i] = np.mean(session.answers(a) != session.answers(b))
            if est[i] <= self.threshold:
                survivors &= ~self.subsets[i]
        self.estimates = est
        return frozenset(int(b) for b in np.flatnonzero(survivors))


def _run_search(oracle, partition, k, eps, rng, pairs, profile) -> frozenset[int]:
    search = _SetSearch(partition, k, eps, pairs, rng, profile.set_rounds_factor, profile.threshold_factor)
    with oracle.session() as s:
        search.plan(s)
        s.submit_all()
        return search.resolve(s)


def find_influencing_sets(oracle: Oracle, partition: Partition, k: int, eps: float,
                          rng: np.random.Generator, profile: ConstantsProfile = PAPER) -> frozenset[int]:
    """Ids of the blocks never cleared by a low influence estimate."""
    return _run_search(oracle, partition, k, eps, rng, influence_pairs, profile)


def find_asymmetric_sets(oracle: Oracle, partition: Partition, k: int, eps: float,
                         rng: np.random.Generator, profile: ConstantsProfile = PAPER) -> frozenset[int]:
    """Ids of the blocks never cleared by a low symmetric-influence estimate."""
    return _run_search(oracle, partition, k, eps, rng, symmetric_pairs, profile)


# ---------------------------------------------------------------------------
# permutation scoring


def _score_permutations(table: np.ndarray, hist: np.ndarray, k: int):
    """Scores of every permutation given counts ``hist[a, ..., g]``.

    ``table`` is the core as (2^k, W) and ``hist`` has shape (2^k, W, 2):
    the number of samples whose representative bits read ``a``, whose weight
    column is ``w`` and whose oracle answer is ``g``.
    """
    perms, remap = permutation_index_maps(k)
    cols = np.arange(table.shape[1])
    scores = np.empty(perms.shape[0], dtype=np.int64)
    chunk = max(1, (1 << 22) // (table.shape[0] * table.shape[1]))
    for start in range(0, perms.shape[0], chunk):
        rm = remap[start:start + chunk]                       # (P, 2^k)
        predicted = table[rm]                                 # (P, 2^k, W)
        a_idx = np.arange(1 << k)[None, :, None]
        picked = hist[a_idx, cols[None, None, :], predicted]  # (P, 2^k, W)
        scores[start:start + chunk] = picked.sum(axis=(1, 2))
    best = int(np.argmax(scores))  # first maximum = lexicographically smallest
    return tuple(int(v) for v in perms[best]), scores


def _assignment(bits: np.ndarray) -> np.ndarray:
    k = bits.shape[1]
    return (bits.astype(np.int64) << np.arange(k, dtype=np.int64)).sum(axis=1)


def _check_k(k: int, core_k: int, profile: ConstantsProfile):
    if k != core_k:
        raise ValueError(f"k={k} does not match core arity {core_k}")
    if k > profile.max_k:
        raise ValueError(f"k={k} exceeds the permutation-scan budget (max {profile.max_k}) of profile {profile.name}")


# ---------------------------------------------------------------------------
# correctors


def locally_correct_junta(core: JuntaCore, k: int, oracle: Oracle, x, profile: ConstantsProfile = PAPER,
                          rng: np.random.Generator | None = None) -> tuple[int, CorrectionTrace]:
    """Estimate ``f_sigma(x)`` from noisy query access to ``g``."""
    _check_k(k, core.k, profile)
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=np.uint8)
    n = oracle.n
    if x.shape != (n,):
        raise ValueError(f"x must have {n} entries")
    start = oracle.query_count
    if k == 0:
        out = int(core.table[0])
        return out, CorrectionTrace(output=out)

    s = profile.partition_size("junta", k)
    r = profile.perm_samples(k)
    p0 = random_partition(np.flatnonzero(x == 0), s, n, rng)
    p1 = random_partition(np.flatnonzero(x == 1), s, n, rng)
    partition = Partition.merge(p0, p1)
    search = _SetSearch(partition, k, profile.set_finder_epsilon, influence_pairs, rng,
                        profile.set_rounds_factor, profile.threshold_factor)
    y = sample_merged(p0, p1, rng, r)

    with oracle.session() as session:
        search.plan(session)
        hy = session.add_packed(y)
        session.submit_all()
        found = search.resolve(session)
        gy = session.answers(hy)

    trace = CorrectionTrace(partition=partition, found=tuple(sorted(found)),
                            query_count=oracle.query_count - start)
    if len(found) != k or any(not partition.blocks[b] for b in found):
        trace.stage = "set-finder"
        return 0, trace

    B = [partition.blocks[b][0] for b in sorted(found)]
    a = _assignment(get_bits(y, B))
    hist = np.zeros((1 << k, 1, 2), dtype=np.int64)
    np.add.at(hist, (a, 0, gy.astype(np.int64)), 1)
    pi, scores = _score_permutations(core.table[:, None], hist, k)

    out = int(core.table[_assignment(x[[B[j] for j in pi]][None, :])[0]])
    trace.representatives = tuple(B)
    trace.scores = scores
    trace.permutation = pi
    trace.output = out
    return out, trace


def locally_correct_psf(core: PsfCore, k: int, oracle: Oracle, x, profile: ConstantsProfile = PAPER,
                        rng: np.random.Generator | None = None) -> tuple[int, CorrectionTrace]:
    """Estimate ``f_sigma(x)`` for an (n-k)-symmetric ``f`` from noisy access to ``g``."""
    _check_k(k, core.k, profile)
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=np.uint8)
    n = oracle.n
    if x.shape != (n,):
        raise ValueError(f"x must have {n} entries")
    if core.m != n - k:
        raise ValueError(f"core covers {core.m} symmetric variables but n - k = {n - k}")
    start = oracle.query_count
    if k == 0:
        out = int(core.table[0, int(x.sum())])
        return out, CorrectionTrace(output=out)

    s = profile.partition_size("psf", k)
    r = profile.perm_samples(k)
    in_ws = rng.random(n) < 1 / (2 * s + 1)
    p0 = random_partition(np.flatnonzero(~in_ws & (x == 0)), s, n, rng)
    p1 = random_partition(np.flatnonzero(~in_ws & (x == 1)), s, n, rng)
    partition = Partition.merge(p0, p1, workspace=np.flatnonzero(in_ws))
    search = _SetSearch(partition, k, profile.set_finder_epsilon, symmetric_pairs, rng,
                        profile.set_rounds_factor, profile.threshold_factor)
    y = sample_workspace(partition, rng, r)

    with oracle.session() as session:
        search.plan(session)
        hy = session.add_packed(y)
        session.submit_all()
        found = search.resolve(session)
        gy = session.answers(hy)

    trace = CorrectionTrace(partition=partition, found=tuple(sorted(found)),
                            query_count=oracle.query_count - start)
    if len(found) != k or partition.workspace in found or any(not partition.blocks[b] for b in found):
        trace.stage = "set-finder"
        return 0, trace

    B = [partition.blocks[b][0] for b in sorted(found)]
    yB = get_bits(y, B)
    a = _assignment(yB)
    rest = weights(y) - yB.sum(axis=1, dtype=np.int64)
    hist = np.zeros((1 << k, core.m + 1, 2), dtype=np.int64)
    np.add.at(hist, (a, rest, gy.astype(np.int64)), 1)
    pi, scores = _score_permutations(core.table, hist, k)

    xB = x[[B[j] for j in pi]]
    out = int(core.table[_assignment(xB[None, :])[0], int(x.sum()) - int(x[B].sum())])
    trace.representatives = tuple(B)
    trace.scores = scores
    trace.permutation = pi
    trace.output = out
    return out, trace
