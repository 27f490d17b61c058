"""Influence and symmetric influence: exact values, noisy estimates, and typicality.

Run: python3 demos/01_influence.py
"""

import numpy as np

from localcorrect import (
    EstimatorParams,
    Isomorphism,
    JuntaCore,
    JuntaFunction,
    NoiseSpec,
    estimate_influence,
    influence_exact,
    make_oracle,
)
from localcorrect.typicality import and_core, check_core_far_from_isomorphisms, check_core_min_influence

rng = np.random.default_rng(1)

# A 3-junta hidden among 14 variables, then relabeled by a random isomorphism.
n = 14
core = JuntaCore.random(3, rng)
f = JuntaFunction(core, range(3), n)
sigma = Isomorphism.random(n, rng)
g = f.permuted(sigma)
relevant = [sigma.perm[i] for i in range(3)]
print("relevant variables of g:", relevant)

# Exact influence of each relevant variable, and of everything else (zero for a junta).
for v in relevant:
    print(f"Inf_g({{{v}}}) = {influence_exact(g, [v]):.4f}")
rest = [v for v in range(n) if v not in relevant]
print("Inf_g(rest) =", influence_exact(g, rest))

# The same quantities estimated through a noisy oracle that flips 1% of its answers.
oracle = make_oracle(f, sigma, NoiseSpec(0.01, "procedural", seed=5))
params = EstimatorParams(delta=0.02, eta=0.01)
print(f"estimator uses q={params.q} query pairs per call")
for v in relevant:
    print(f"estimate of Inf({{{v}}}) = {estimate_influence(oracle, [v], params, rng):.4f}")
print(f"estimate of Inf(rest) = {estimate_influence(oracle, rest, params, rng):.4f} (noise floor near 2*0.01)")
print("queries so far:", oracle.query_count)

# Typicality checks on this core and on the AND core, whose influences are all 2^-(k-1).
print("this core:", check_core_min_influence(core).to_dict())
print("          ", check_core_far_from_isomorphisms(core).to_dict())
print("AND core: ", check_core_min_influence(and_core(6)).to_dict())
