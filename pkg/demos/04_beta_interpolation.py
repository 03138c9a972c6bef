"""The beta environment: from uniform trees to the minimum spanning tree.

Labels U_e are i.i.d. uniform; conductances exp(-beta U_e) interpolate
between the uniform spanning tree (beta = 0) and the label MST
(beta -> infinity).  Everything beta-dependent runs in log/label space:
at beta = 2e6 the conductances span e^{2e6}, far beyond float range, yet
edge marginals and exact samples remain available through certified scale
separation.
"""

import numpy as np

from wstlab import env, netcore, sample
from wstlab.expcli import overlap_for_environment

net = netcore.gen_complete(120)
rng = sample.RngStream(7, 0).generator()

print("mu(beta) = E[exp(-beta U)]:",
      [(b, round(float(env.mu(b)), 5)) for b in (0.0, 1.0, 10.0, 1e6)])

for beta in (0.0, 1.0, 20.0, 2e6):
    environment = env.draw_environment(net, beta, rng)
    if beta == 0:
        print(f"\nbeta={beta:g}: unit conductances, the uniform tree")
        continue
    mst = sample.kruskal_min(net, environment.label)
    tree = env.sample_environment_tree(net, environment, rng)
    diff = env.tree_symmetric_difference(tree, mst)
    overlap, method = overlap_for_environment(net, environment)
    print(f"\nbeta={beta:g} [{method}]")
    print(f"  |sampled tree symmetric-difference MST| = {diff}")
    print(f"  exact expected overlap of two trees = {overlap:.3f} "
          f"(n-1 = {net.n - 1})")
    stall = env.walk_stall_score(net, environment)
    print(f"  walk stall score = {stall:.1f} "
          f"({'walk sampler fine' if stall <= 45 else 'scale-separated engine'})")

# Significant edges: external edges whose conductance rivals some MST-path
# edge; the set shrinks as epsilon grows and as beta grows.
environment = env.draw_environment(net, 500.0, rng)
for eps in (1e-6, 1e-3, 0.1):
    sig = env.significant_edges(net, environment, eps)
    print(f"beta=500, eps={eps:g}: {len(sig.indices)} significant edges "
          f"of {net.m - net.n + 1} external")

# m_e: the MST path maximum that controls an external edge's label law.
labels = environment.label
mst = sample.kruskal_min(net, labels)
ext = [e for e in range(net.m) if e not in mst.index_set][:5]
for e in ext:
    m_e = env.mst_path_max(net, mst, labels, e)
    print(f"edge {e}: U_e = {labels[e]:.4f} > m_e = {m_e:.4f}")

# The scale-separated model exposes its certified error budget.
deep = env.draw_environment(net, 5e6, rng)
model = env.ScaleSeparatedWst(net, deep)
p = model.edge_marginals()
print("\nbeta=5e6 scale separation:")
print("  marginal sum =", p.sum(), "(Foster: n-1 =", net.n - 1, ")")
print("  undecided edges:", len(model.active),
      "| certified error budget:", model.error_budget)
print("  P(tree == MST) =", model.mst_agreement_probability())
