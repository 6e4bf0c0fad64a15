"""Tree-indexed Gaussian field and the distorted resistance/measure pair.

The field is Brownian motion run in the tree's root-distance clock: increments
along edges are independent centered Gaussians whose variance is the clock
increment, so Cov(phi(u), phi(v)) equals the clock value at the most recent
common ancestor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .environment import DomainError
from .trees import PlaneTree, TreeMetricView


def limit_constants(alpha: float, delta: float) -> tuple[float, float]:
    """Drift and noise coefficients (A, B) of the distortion exponent."""
    if delta <= 0:
        raise DomainError("delta must be positive")
    if alpha == 1.0:
        return delta - 1.0, math.sqrt(4.0 * delta)
    if alpha < 1.0:
        return delta / (1.0 - alpha), math.sqrt(4.0 * delta / (1.0 - alpha))
    raise DomainError("alpha must be at most 1")


def _clock(alpha: float, d: np.ndarray | float):
    """Root-distance clock b(d): d^(1-alpha), or log(d+1) when alpha = 1."""
    if alpha == 1.0:
        return np.log1p(d)
    return np.asarray(d) ** (1.0 - alpha)


@dataclass
class SnakeField:
    tree: PlaneTree
    rescale: float
    alpha: float
    delta: float
    phi: np.ndarray

    def depths(self) -> np.ndarray:
        return self.rescale * self.tree.depth.astype(np.float64)

    def validate(self) -> None:
        assert self.phi[0] == 0.0
        assert len(self.phi) == self.tree.n


def d_alpha(tree: PlaneTree, rescale: float, alpha: float, u: int, v: int,
            metric: Optional[TreeMetricView] = None) -> float:
    """Clock distance b(u) + b(v) - 2 b(u ^ v) between two vertices."""
    if alpha > 1.0:
        raise DomainError("alpha must be at most 1")
    if u == v:
        return 0.0
    metric = metric or TreeMetricView(tree)
    w = metric.mrca(u, v)
    d = rescale * np.array([tree.depth[u], tree.depth[v], tree.depth[w]],
                           dtype=np.float64)
    b = _clock(alpha, d)
    return float(b[0] + b[1] - 2.0 * b[2])


def snake_covariance(tree: PlaneTree, rescale: float, alpha: float) -> np.ndarray:
    """Exact covariance matrix: entry (u, v) is the clock at the mrca."""
    if alpha > 1.0:
        raise DomainError("alpha must be at most 1")
    metric = TreeMetricView(tree)
    n = tree.n
    cov = np.zeros((n, n))
    for u in range(n):
        for v in range(u, n):
            w = u if u == v else metric.mrca(u, v)
            cov[u, v] = cov[v, u] = _clock(alpha, rescale * float(tree.depth[w]))
    return cov


def _edge_stddevs(tree: PlaneTree, rescale: float, alpha: float) -> np.ndarray:
    d = rescale * tree.depth.astype(np.float64)
    dp = rescale * (tree.depth.astype(np.float64) - 1.0)
    var = np.zeros(tree.n)
    if tree.n > 1:
        var[1:] = _clock(alpha, d[1:]) - _clock(alpha, dp[1:])
    return np.sqrt(var)


def sample_snake_matrix(tree: PlaneTree, rescale: float, alpha: float, m: int,
                        rng: np.random.Generator) -> np.ndarray:
    """m independent fields as rows; column v is phi(v). Vertex ids are in
    preorder so a single left-to-right pass accumulates root-to-vertex sums."""
    if alpha > 1.0:
        raise DomainError("alpha must be at most 1")
    sig = _edge_stddevs(tree, rescale, alpha)
    phi = np.zeros((m, tree.n))
    if tree.n > 1:
        noise = rng.standard_normal((m, tree.n - 1)) * sig[1:]
        for v in range(1, tree.n):
            phi[:, v] = phi[:, tree.parent[v]] + noise[:, v - 1]
    return phi


def sample_snake(tree: PlaneTree, rescale: float, alpha: float,
                 rng: np.random.Generator, delta: float = 1.0) -> SnakeField:
    phi = sample_snake_matrix(tree, rescale, alpha, 1, rng)[0]
    return SnakeField(tree=tree, rescale=rescale, alpha=alpha, delta=delta,
                      phi=phi)


def zero_snake(tree: PlaneTree, rescale: float, alpha: float,
               delta: float = 1.0) -> SnakeField:
    """Zero-noise field; distorted objects then have closed-form references."""
    if alpha > 1.0:
        raise DomainError("alpha must be at most 1")
    return SnakeField(tree=tree, rescale=rescale, alpha=alpha, delta=delta,
                      phi=np.zeros(tree.n))


def _resistance_integrand(field: SnakeField, depth: float, phi: float) -> float:
    a, b = limit_constants(field.alpha, field.delta)
    if field.alpha == 1.0:
        return math.exp(b * phi + a * math.log1p(depth))
    grow = math.exp(b * phi + a * depth ** (1.0 - field.alpha))
    if field.alpha == 0.0:
        return grow
    return depth ** (-field.alpha) * grow


def distorted_resistance(field: SnakeField, u: int, v: int,
                         metric: Optional[TreeMetricView] = None) -> float:
    """Trapezoidal path integral of the distortion integrand from u to v.

    For alpha in (0, 1) the integrand blows up (integrably) at the root point,
    so the root endpoint of an incident edge is evaluated at the half-edge
    midpoint instead.
    """
    if u == v:
        return 0.0
    metric = metric or TreeMetricView(field.tree)
    path = metric.path(u, v)
    depth = field.depths()
    singular = 0.0 < field.alpha < 1.0
    total = 0.0
    for z, z2 in zip(path, path[1:]):
        vals = []
        for a_end, b_end in ((z, z2), (z2, z)):
            if a_end == 0 and singular:
                vals.append(_resistance_integrand(
                    field, 0.5 * field.rescale, 0.5 * field.phi[b_end]))
            else:
                vals.append(_resistance_integrand(
                    field, float(depth[a_end]), float(field.phi[a_end])))
        total += field.rescale * 0.5 * (vals[0] + vals[1])
    return total


def _density(field: SnakeField, x: int) -> float:
    a, b = limit_constants(field.alpha, field.delta)
    d = field.rescale * float(field.tree.depth[x])
    phi = float(field.phi[x])
    if field.alpha == 1.0:
        return math.exp(-(b * phi + a * math.log1p(d)))
    damp = math.exp(-(b * phi + a * d ** (1.0 - field.alpha)))
    if field.alpha == 0.0:
        return damp
    return d**field.alpha * damp


def distorted_measure(field: SnakeField, vertices: Iterable[int]) -> float:
    """Uniform mass 1/n per vertex, reweighted by the distortion density."""
    inv_n = 1.0 / field.tree.n
    return sum(inv_n * _density(field, int(x)) for x in vertices)


def dump_snake(field: SnakeField, path: str) -> None:
    depth = field.depths()
    with open(path, "w") as fh:
        fh.write("# vertex depth phi density\n")
        for v in range(field.tree.n):
            fh.write(f"{v} {float(depth[v])!r} {float(field.phi[v])!r} "
                     f"{_density(field, v)!r}\n")
