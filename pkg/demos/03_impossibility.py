"""Why some juntas cannot be corrected: the hard junta.

h(x) = 1 exactly when x0 = 1 and x1 = ... = x_{k-1} = 0. Every relabeling of h
sits at distance 2^-k from the all-zeros function, so an oracle answering 0
everywhere is a valid corruption of all of them at once. Nothing the corrector
sees depends on sigma, and it cannot beat answering 0.

Run: python3 demos/03_impossibility.py
"""

import numpy as np

from localcorrect import ConstantsProfile, Isomorphism, NoiseSpec, constant, distance, locally_correct_junta, \
    make_oracle
from localcorrect.typicality import ambiguous_pair, make_hard_junta

rng = np.random.default_rng(3)
k, n = 2, 20
h = make_hard_junta(k, n)
s1, s2 = ambiguous_pair(k, n, rng)
zero = constant(n)
print("distance(h, 0) =", distance(h, zero), "= 2^-k")
print("distance(h_s1, 0) =", distance(h.permuted(s1), zero), " distance(h_s2, 0) =", distance(h.permuted(s2), zero))

# Ask the corrector about points where the two relabelings disagree.
x = np.zeros(n, dtype=np.uint8)
x[s1.perm[0]] = 1
print("h_s1(x) =", h.permuted(s1)(x), " h_s2(x) =", h.permuted(s2)(x))
oracle = make_oracle(zero, None, NoiseSpec())
bit, _ = locally_correct_junta(h.core, k, oracle, x, ConstantsProfile.scaled(20), rng)
print("corrector answer with g = 0:", bit, "(it is right for at most one of the two)")

trials, wins = 200, 0
for _ in range(trials):
    sigma, x = Isomorphism.random(n, rng), rng.integers(0, 2, n)
    bit, _ = locally_correct_junta(h.core, k, make_oracle(zero, None, NoiseSpec()), x, ConstantsProfile.scaled(20), rng)
    wins += bit == h.permuted(sigma)(x)
print(f"success over random sigma and x: {wins}/{trials}; answering 0 succeeds with probability {1 - 2**-k}")
