"""Sampling critical trees: conditioned plane trees and the infinite variant.

Run:  python3 demos/01_trees_and_contours.py
"""
import numpy as np

from lerrw.offspring import geometric_half, pmf, scaling_an, stable_family
from lerrw.trees import contour, sample_conditioned_gw, sample_kesten

rng = np.random.default_rng(7)

# two critical offspring families: geometric (light tail) and the two-point
# gamma=2 member of the stable family
geo = geometric_half()
two_point = stable_family(2.0)
print("geometric pmf at k=0..4:", [round(pmf(geo, k), 4) for k in range(5)])
print("two-point pmf at k=0..4:", [round(pmf(two_point, k), 4) for k in range(5)])

# a conditioned tree with exactly n vertices (cycle-lemma rotation of a
# Lukasiewicz bridge)
n = 2001
tree = sample_conditioned_gw(geo, n, rng)
print(f"\nconditioned tree: n={tree.n} height={tree.height} "
      f"leaves={sum(tree.num_children(v) == 0 for v in range(n))}")
print(f"height / a_n = {tree.height / scaling_an(geo, n):.2f} "
      "(order one for critical trees)")

# the contour process visits each edge twice; its running maximum is the
# height profile a depth-first boundary walk sees
c = contour(tree)
print(f"contour length {len(c)} = 2(n-1)+1; max {c.max()} equals the height")

# the conditioned-to-survive variant grows a spine of size-biased vertices;
# truncate at a depth budget
kesten = sample_kesten(geo, depth_limit=12, rng=rng)
depths = kesten.depth
print(f"\nKesten tree to depth 12: {kesten.n} vertices, "
      f"{int((depths == 12).sum())} at the boundary")
spine_kids = [kesten.num_children(v) for v in range(kesten.n)
              if depths[v] < 3]
print("offspring counts near the root (spine vertices draw size-biased, "
      "bush vertices ordinary):", spine_kids[:8])
