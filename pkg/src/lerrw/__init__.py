"""Linearly edge-reinforced random walks on critical Galton-Watson trees.

Simulation library covering the exact Dirichlet random-environment
representation of the walk, the potential/resistance/measure environment it
induces on the tree, a tree-indexed Gaussian field limit model, exact
small-instance oracles, and a reproducible Monte Carlo experiment harness.
"""

__version__ = "0.1.0"
