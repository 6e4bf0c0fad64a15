"""The Gamma-ratio environment: potential, resistances, invariant measure.

Run:  python3 demos/03_environment_potential.py
"""
import numpy as np

from lerrw.environment import (
    WeightScheme,
    beta_prime_moments,
    branch_limit_targets,
    dirichlet_params,
    initial_weights,
    rho_depth_params,
    sample_environment,
    transition_probs,
)
from lerrw.offspring import geometric_half
from lerrw.trees import sample_conditioned_gw

rng = np.random.default_rng(3)

# depth-polynomial initial weights, rescaled so depth ~ n/a_n is order one
n = 4001
scheme = WeightScheme(alpha=0.5, delta=1.0, mode="rescaled_subcritical",
                      n=n, an=n**0.5)
tree = sample_conditioned_gw(geometric_half(), n, rng)
w = initial_weights(scheme, tree)
print(f"initial weights: w(root edge)={w[0]:.3f}, range "
      f"[{w.min():.3f}, {w.max():.3f}] over depths up to {tree.height}")

# one environment draw: independent Gamma variables per urn slot
env = sample_environment(dirichlet_params(w, tree, scheme.delta), tree, rng)
print(f"potential V: min {env.V.min():.2f}, max {env.V.max():.2f}")

# transition rows are conductance-proportional and sum to one
offs, nbr, probs = transition_probs(env)
sums = np.add.reduceat(probs, offs[:-1])
print(f"transition rows: max |row sum - 1| = {np.abs(sums - 1).max():.2e}")

# the measure nu is reversible for the base-free chain: for non-root x,
# nu(x) p(x -> parent) = exp(-V(parent-side)) telescopes both ways
x = int(np.argmax(tree.depth))  # a deepest vertex
p = int(tree.parent[x])
row = slice(offs[x], offs[x + 1])
p_up = float(probs[row][nbr[row] == p][0])
print(f"deepest vertex: depth {tree.depth[x]}, p(up) = {p_up:.3f}, "
      f"nu = {env.nu[x]:.3e}")

# closed-form moments of the per-depth ratio rho (a beta-prime variable)
a, b = rho_depth_params(int(tree.depth[x]), scheme)
m1 = beta_prime_moments(a, b, 1)
m2 = beta_prime_moments(a, b, 2)
print(f"rho at that depth: a={a:.1f}, b={b:.1f}, mean={m1:.4f}, "
      f"var={m2 - m1**2:.3e}")

# along one root path the potential's mean/variance approach the drift and
# diffusion targets of the scaling limit
d = 1.0
mean_t, var_t = branch_limit_targets(scheme, d)
draws = np.zeros(20000)
depth = round(d * scheme.ratio)
for j in range(1, depth + 1):
    aj, bj = rho_depth_params(j, scheme)
    draws += np.log(rng.gamma(aj, size=draws.size))
    draws -= np.log(rng.gamma(bj, size=draws.size))
corrected = draws + scheme.alpha * np.log(depth)
print(f"\npotential at rescaled depth {d}: mean {corrected.mean():.3f} "
      f"(target {mean_t:.3f}), var {draws.var():.3f} (target {var_t:.3f})")
