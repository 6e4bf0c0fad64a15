"""The limiting tree-indexed Gaussian field and its distorted resistance and
mass measure.

Run:  python3 demos/05_gaussian_field_limit.py
"""
import numpy as np

from lerrw.offspring import geometric_half
from lerrw.snake import (
    SnakeField,
    d_alpha,
    distorted_measure,
    distorted_resistance,
    limit_constants,
    sample_snake,
    sample_snake_matrix,
    snake_covariance,
    zero_snake,
)
from lerrw.trees import sample_conditioned_gw

rng = np.random.default_rng(2)
tree = sample_conditioned_gw(geometric_half(), 25, rng)
rescale = 0.25  # one discrete edge = 0.25 units of continuum depth

# the field's covariance is the reparametrized depth of the common ancestor
alpha = 0.5
cov = snake_covariance(tree, rescale, alpha)
u, v = 10, 20
print(f"d_alpha to vertex {u}: {d_alpha(tree, rescale, alpha, 0, u):.4f}")
print(f"cov(phi_{u}, phi_{v}) exact = {cov[u, v]:.4f}")

samples = sample_snake_matrix(tree, rescale, alpha, 50_000, rng)
emp = float(np.mean(samples[:, u] * samples[:, v]))
print(f"cov(phi_{u}, phi_{v}) from 5e4 samples = {emp:.4f}")

# drift and noise scale of the limit per unit depth
for a in (0.0, 0.5, 1.0):
    A, B = limit_constants(a, 1.0)
    print(f"alpha={a}: drift A={A:.3f}, noise scale B={B:.3f}")

# the distorted resistance integrates exp(B phi + A d^(1-alpha)) along paths,
# and the distorted measure tilts the uniform mass the opposite way
field = sample_snake(tree, rescale, alpha, delta=1.0, rng=rng)
x = int(np.argmax(tree.depth))
print(f"\nresistance root -> deepest vertex: "
      f"{distorted_resistance(field, 0, x):.4f}")
print(f"measure of all vertices: {distorted_measure(field, range(tree.n)):.4f}")

# with the noise switched off both reduce to smooth functions of depth
flat = zero_snake(tree, rescale, alpha, delta=1.0)
print(f"zero-noise resistance root -> deepest: "
      f"{distorted_resistance(flat, 0, x):.4f}")
assert isinstance(field, SnakeField)
