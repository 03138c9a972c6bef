"""Local statistics: r-ball patterns, the census, and the tuple sum.

The radius-r ball around a uniform root of a big uniform spanning tree
converges to an explicit law: a pattern with k vertices, t of them interior,
and stab root-preserving automorphisms has probability exp(-t)(k-t)/stab.
The same probability is approximated at finite n by a sum of per-tuple
weights F over pattern-compatible vertex tuples of typical strength.
"""

import math

import numpy as np

from wstlab import localstat, netcore, sample

# Canonical patterns: equality is exactly root-preserving isomorphism.
a = localstat.canonicalize([[1, 2], [0], [0]], root=0)
b = localstat.canonicalize([[2, 1], [0], [0]], root=0)
print("two leaf children, relabeled:", a == b, "| stab =", a.stab)
print("reference probabilities for radius-1 stars:")
for j in (1, 2, 3, 4):
    pat = localstat.star_pattern(j)
    print(f"  {j} children: exp(-1)/{j - 1}! = "
          f"{localstat.pgw_reference_probability(pat):.6f}")

# Census on K_600: empirical root-degree law vs the reference law.
net = netcore.gen_complete(600)
rng = sample.RngStream(11, 0).generator()
cen = localstat.census(net, r=1, replicas=200, rng=rng, roots_per_tree=50)
print(f"\ncensus of UST(K_600), {cen.samples} observations, radius 1:")
for j in (1, 2, 3):
    pat = localstat.star_pattern(j)
    print(f"  j={j}: empirical {cen.empirical_probability(pat):.4f} "
          f"vs reference {localstat.pgw_reference_probability(pat):.4f}")
print("  TV vs reference law:", round(localstat.census_vs_reference_tv(cen), 4))

# b values and per-tuple weights.
tri = netcore.build_network(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])
print("\nb(0) on the weighted triangle:", localstat.b_value(tri, 0), "= 14/15")
k5 = netcore.gen_complete(5)
print("F on unit K_5, edge pattern:",
      localstat.f_value(k5, [0, 1], localstat.star_pattern(1)),
      "= exp(-1)/20")

# The compatible-tuple sum: exhaustive on a small graph, importance-sampled
# on a large one; both approximate the reference probability.
k30 = netcore.gen_complete(30)
for j in (1, 2):
    pat = localstat.star_pattern(j)
    ex = localstat.theorem_sum(k30, pat, gamma=29.0, K=2.0, mode="exhaustive")
    mc = localstat.theorem_sum(k30, pat, gamma=29.0, K=2.0, mode="monte_carlo",
                               rng=rng, samples=30_000)
    ref = localstat.pgw_reference_probability(pat)
    print(f"\ntuple sum, star j={j} on K_30: exhaustive {ex.estimate:.6f} "
          f"({ex.n_terms} tuples), monte-carlo {mc.estimate:.6f} "
          f"+- {mc.stderr:.1e}, reference {ref:.6f}")

# Random pattern tuples with their exact draw probabilities.
verts, q = localstat.random_t_tuple(k30, localstat.star_pattern(2), rng)
print("\nrandom tuple on K_30:", verts, "drawn with probability", q)
