"""Checks for the structural conditions that make a random core "typical",
generators that redraw until a core passes them, and a hard instance on which
no corrector can beat guessing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .boolfn import (
    Isomorphism,
    JuntaCore,
    JuntaFunction,
    PsfCore,
    PsfFunction,
    TableFunction,
    permutation_index_maps,
)
from .influence import influence_exact, symmetric_influence_exact, symmetric_influence_sampled

THRESHOLD = 0.1
MAX_SCAN_K = 8
MAX_INFLUENCE_K = 20
EXACT_PSF_N = 20
DEFAULT_SAMPLE_BUDGET = 200_000


class TypicalityBudgetExceeded(RuntimeError):
    """No typical core was found within the allowed number of draws."""


@dataclass(frozen=True)
class TypicalityVerdict:
    check: str
    statistic: float | None
    threshold: float = THRESHOLD
    passed: bool = False
    vacuous: bool = False

    @classmethod
    def measured(cls, check: str, statistic: float, threshold: float = THRESHOLD) -> TypicalityVerdict:
        return cls(check, float(statistic), threshold, bool(statistic > threshold))

    @classmethod
    def vacuous_pass(cls, check: str, threshold: float = THRESHOLD) -> TypicalityVerdict:
        # nothing to measure, e.g. no asymmetric variable
        return cls(check, None, threshold, True, True)

    def __bool__(self):
        return self.passed

    def to_dict(self) -> dict:
        return {"check": self.check, "statistic": self.statistic, "threshold": self.threshold,
                "passed": self.passed, "vacuous": self.vacuous}


# ---------------------------------------------------------------------------
# junta cores


def core_influences(core: JuntaCore) -> np.ndarray:
    if core.k > MAX_INFLUENCE_K:
        raise ValueError(f"influence scan supports k <= {MAX_INFLUENCE_K}, got k={core.k}")
    f = TableFunction(core.table)
    return np.array([influence_exact(f, [i]) for i in range(core.k)])


def check_core_min_influence(core: JuntaCore, threshold: float = THRESHOLD) -> TypicalityVerdict:
    if core.k == 0:
        return TypicalityVerdict.vacuous_pass("core_min_influence", threshold)
    return TypicalityVerdict.measured("core_min_influence", core_influences(core).min(), threshold)


def _min_perm_distance(tables: np.ndarray, k: int, layer_weights: np.ndarray) -> float:
    # tables: (2^k, W); distance between table and table[remap] weighted by layer_weights (sums to 1)
    _, maps = permutation_index_maps(k)
    maps = maps[1:]  # drop the identity
    best = math.inf
    chunk = max(1, (1 << 22) // tables.size)
    for start in range(0, maps.shape[0], chunk):
        permuted = tables[maps[start:start + chunk]]                     # (P, 2^k, W)
        diff = np.count_nonzero(permuted != tables[None], axis=1) @ layer_weights
        best = min(best, float(diff.min()) / tables.shape[0])
    return best


def check_core_far_from_isomorphisms(core: JuntaCore, threshold: float = THRESHOLD) -> TypicalityVerdict:
    """Minimum exact distance between the core and its non-identity relabelings."""
    k = core.k
    if k > MAX_SCAN_K:
        raise ValueError(f"isomorphism scan supports k <= {MAX_SCAN_K}, got k={k}")
    if k < 2:
        return TypicalityVerdict.vacuous_pass("core_far_from_isomorphisms", threshold)
    d = _min_perm_distance(core.table[:, None], k, np.ones(1))
    return TypicalityVerdict.measured("core_far_from_isomorphisms", d, threshold)


# ---------------------------------------------------------------------------
# partially symmetric cores


def _first_symmetric(positions, n: int) -> int | None:
    taken = set(positions)
    return next((j for j in range(n) if j not in taken), None)


def pair_symmetric_influences(core: PsfCore, positions, n: int, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                              seed=None) -> np.ndarray:
    """Symmetric influence of {i, j} for each asymmetric i and one fixed symmetric j."""
    f = PsfFunction(core, positions, n)
    j = _first_symmetric(f.positions, n)
    if j is None:
        return np.zeros(0)
    if n <= EXACT_PSF_N:
        return np.array([symmetric_influence_exact(f, [i, j]) for i in f.positions])
    rng = np.random.default_rng(seed)
    return np.array([symmetric_influence_sampled(f, [i, j], sample_budget, rng) for i in f.positions])


def check_psf_pair_syminf(core: PsfCore, positions, n: int, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
                          seed=None, threshold: float = THRESHOLD) -> TypicalityVerdict:
    vals = pair_symmetric_influences(core, positions, n, sample_budget, seed)
    if vals.size == 0:
        return TypicalityVerdict.vacuous_pass("psf_pair_syminf", threshold)
    return TypicalityVerdict.measured("psf_pair_syminf", vals.min(), threshold)


def check_psf_far_from_core_perms(core: PsfCore, n: int, threshold: float = THRESHOLD) -> TypicalityVerdict:
    """Minimum exact distance between f and f with its asymmetric slots relabeled.

    Relabeling keeps the weight of the symmetric part, so the distance is a
    binomially weighted average over weight layers of per-layer disagreement.
    """
    k, m = core.k, core.m
    if k > MAX_SCAN_K:
        raise ValueError(f"permutation scan supports k <= {MAX_SCAN_K}, got k={k}")
    if m != n - k:
        raise ValueError(f"core covers m={m} symmetric variables, expected {n - k}")
    if k < 2:
        return TypicalityVerdict.vacuous_pass("psf_far_from_core_perms", threshold)
    layer = comb(m, np.arange(m + 1)) / 2.0**m
    d = _min_perm_distance(core.table, k, layer)
    return TypicalityVerdict.measured("psf_far_from_core_perms", d, threshold)


# ---------------------------------------------------------------------------
# generators


def junta_checks(core: JuntaCore, min_influence: float = THRESHOLD) -> list[TypicalityVerdict]:
    out = [check_core_min_influence(core, min_influence)]
    if core.k <= MAX_SCAN_K:
        out.append(check_core_far_from_isomorphisms(core))
    return out


def psf_checks(core: PsfCore, positions, n: int, sample_budget: int = DEFAULT_SAMPLE_BUDGET,
               seed=None) -> list[TypicalityVerdict]:
    return [check_psf_pair_syminf(core, positions, n, sample_budget, seed),
            check_psf_far_from_core_perms(core, n)]


def draw_typical_junta_core(k: int, rng: np.random.Generator, max_draws: int = 1000,
                            min_influence: float = THRESHOLD) -> tuple[JuntaCore, int]:
    """A random core passing :func:`junta_checks`, and the number of rejected draws."""
    for rejected in range(max_draws):
        core = JuntaCore.random(k, rng)
        if all(junta_checks(core, min_influence)):
            return core, rejected
    raise TypicalityBudgetExceeded(f"no typical k={k} junta core in {max_draws} draws")


def draw_typical_psf_core(k: int, n: int, rng: np.random.Generator, max_draws: int = 1000,
                          sample_budget: int = DEFAULT_SAMPLE_BUDGET) -> tuple[PsfCore, int]:
    """A random core (asymmetric slots at variables 0..k-1) passing :func:`psf_checks`."""
    for rejected in range(max_draws):
        core = PsfCore.random(k, n - k, rng)
        seed = int(rng.integers(0, 2**63))
        if all(psf_checks(core, range(k), n, sample_budget, seed)):
            return core, rejected
    raise TypicalityBudgetExceeded(f"no typical k={k}, n={n} psf core in {max_draws} draws")


# ---------------------------------------------------------------------------
# hard instance


def hard_junta_core(k: int) -> JuntaCore:
    table = np.zeros(1 << k, dtype=np.uint8)
    table[1] = 1  # variable 0 set, variables 1..k-1 clear
    return JuntaCore(table)


def make_hard_junta(k: int, n: int) -> JuntaFunction:
    """Indicator of ``x[0] = 1 and x[1] = ... = x[k-1] = 0`` over n variables."""
    if k < 1:
        raise ValueError("hard junta needs k >= 1")
    if n < k:
        raise ValueError(f"n={n} is smaller than k={k}")
    return JuntaFunction(hard_junta_core(k), range(k), n)


def and_core(k: int) -> JuntaCore:
    table = np.zeros(1 << k, dtype=np.uint8)
    table[-1] = 1
    return JuntaCore(table)


def parity_core(k: int) -> JuntaCore:
    idx = np.arange(1 << k, dtype=np.uint64)
    return JuntaCore((np.bitwise_count(idx) & 1).astype(np.uint8))


def ambiguous_pair(k: int, n: int, rng: np.random.Generator) -> tuple[Isomorphism, Isomorphism]:
    """Two distinct isomorphisms whose hard-junta images are both 2^-k close to zero."""
    if n < 2:
        raise ValueError("need n >= 2 for two distinct isomorphisms")
    s1 = Isomorphism.random(n, rng)
    s2 = Isomorphism.random(n, rng)
    while s2 == s1:
        s2 = Isomorphism.random(n, rng)
    return s1, s2
