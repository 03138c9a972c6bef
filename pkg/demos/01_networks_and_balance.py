"""Electric networks, generators, and the balance checkers.

Build a few networks, look at vertex strengths, and evaluate the
almost-balanced conditions at concrete finite parameters.
"""

import numpy as np

from wstlab import netcore

# A tiny weighted triangle; this fixture reappears throughout the package
# because every quantity on it has a closed form.
tri = netcore.build_network(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])
print("triangle vertex strengths:", tri.vertex_strength)   # [4, 3, 5]

# Generators: complete graphs, the glued triangle chain (a bottleneck
# family), clique chains with pendant leaves, and pendant-augmented graphs.
k100 = netcore.gen_complete(100)
chain = netcore.gen_glued_triangle_chain(10)
cliques = netcore.gen_expander_chain_with_leaves(d=4, copies=6, leaves=8)
pend = netcore.gen_regular_plus_pendants(netcore.gen_complete(40), m=5, f=2, seed=1)
for name, net in [("K_100", k100), ("triangle chain", chain),
                  ("clique chain", cliques), ("K_40 + pendants", pend)]:
    print(f"{name}: n={net.n}, m={net.m}, "
          f"strength range [{net.vertex_strength.min():.0f}, "
          f"{net.vertex_strength.max():.0f}]")

# The balance report evaluates three inequalities at user-supplied
# (gamma, K, delta): typical-strength fraction, atypical strength mass,
# and the per-edge conductance cap.
rep = netcore.balance_report(k100, gamma=99.0, K=2.0, delta=0.1)
print("\nK_100 at (gamma=99, K=2, delta=0.1):")
print("  frac_typical =", rep.frac_typical)
print("  atypical_strength_ratio =", rep.atypical_strength_ratio)
print("  max_edge_ratio =", rep.max_edge_ratio)
print("  passes =", rep.passes, "-> all_pass:", rep.all_pass)

# Tighten delta below 1/(n-1) and the edge condition must fail.
tight = netcore.balance_report(k100, gamma=99.0, K=2.0, delta=0.005)
print("tight delta=0.005: passes =", tight.passes)

# Pendant vertices break balance at small gamma bands: their strength sits
# far below the clique strengths.
rep2 = netcore.balance_report(cliques, gamma=4.0, K=1.5, delta=0.2)
print("\nclique chain at (4, 1.5, 0.2): frac_typical =",
      round(rep2.frac_typical, 3), "passes =", rep2.passes)

# Network files round-trip through a plain text format: "n m" then "u v c".
netcore.write_network(tri, "/tmp/triangle.net")
print("\nwrote /tmp/triangle.net:")
print(open("/tmp/triangle.net").read())
