"""Initial weight schemes, the Dirichlet parameter map, sampled Gamma
environments, and the potential / resistance / measure triple with closed-form
moment references.

The reinforced walk's annealed law equals a random-environment walk whose
per-vertex exit probabilities are Dirichlet. Sampling independent Gamma
variables per urn slot realizes those Dirichlet draws, and ratios of the slot
variables along parent edges give the conductance ratios rho that drive the
potential V and everything derived from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .trees import PlaneTree, TreeMetricView

MODES = ("rescaled_subcritical", "rescaled_critical", "plain_power")


class EnvironmentError_(ValueError):
    pass


class NonpositiveWeight(EnvironmentError_):
    pass


class PoleError(EnvironmentError_):
    """A moment product hit a nonpositive denominator factor."""


class DomainError(EnvironmentError_):
    pass


@dataclass(frozen=True)
class WeightScheme:
    """Initial edge-weight profile: weight of {parent(x), x} as a function of
    the depth of x, possibly rescaled by the tree-size parameter n a_n^{-1}."""

    alpha: float
    delta: float
    mode: str
    n: int = 1
    an: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise EnvironmentError_(f"unknown mode {self.mode!r}")
        if self.mode == "rescaled_subcritical" and not self.alpha < 1:
            raise EnvironmentError_("rescaled_subcritical requires alpha < 1")
        if self.mode == "rescaled_critical" and self.alpha != 1:
            raise EnvironmentError_("rescaled_critical requires alpha = 1")
        if not self.delta > 0:
            raise EnvironmentError_("delta must be positive")
        if self.n < 1 or not self.an > 0:
            raise EnvironmentError_("need n >= 1 and a_n > 0")

    @property
    def ratio(self) -> float:
        """n a_n^{-1}, the depth scale of the rescaled modes."""
        return self.n / self.an

    @property
    def delta_n(self) -> float:
        """Reinforcement after dividing out the weight rescaling."""
        if self.mode == "rescaled_subcritical":
            return self.delta * self.ratio ** (self.alpha - 1.0)
        return self.delta


def initial_weights(scheme: WeightScheme, tree: PlaneTree) -> np.ndarray:
    """Per-edge weights indexed by the child endpoint; slot 0 is the plant edge.

    rescaled_subcritical: (n a_n^{-1})^{1-alpha} * depth^alpha
    rescaled_critical:    depth + n a_n^{-1}
    plain_power:          depth^alpha
    The plant edge takes the depth-0 convention (0 v 1)^alpha = 1.
    """
    d = tree.depth.astype(np.float64)
    d[0] = 1.0  # plant edge depth convention
    if scheme.mode == "rescaled_subcritical":
        w = scheme.ratio ** (1.0 - scheme.alpha) * d**scheme.alpha
    elif scheme.mode == "rescaled_critical":
        w = tree.depth + scheme.ratio
        w = w.astype(np.float64)
        w[0] = scheme.ratio
    else:
        w = d**scheme.alpha
    if not np.all(w > 0):
        raise NonpositiveWeight("weight scheme produced a nonpositive weight")
    return w


def depth_weight_table(scheme: WeightScheme, max_depth: int) -> np.ndarray:
    """w[d] = weight of an edge whose child endpoint sits at depth d.

    Same formulas as initial_weights; d = 0 holds the plant-edge convention.
    Lazy walkers index this table instead of materializing a tree.
    """
    d = np.arange(max_depth + 1, dtype=np.float64)
    d[0] = 1.0
    if scheme.mode == "rescaled_subcritical":
        w = scheme.ratio ** (1.0 - scheme.alpha) * d**scheme.alpha
    elif scheme.mode == "rescaled_critical":
        w = np.arange(max_depth + 1, dtype=np.float64) + scheme.ratio
        w[0] = scheme.ratio
    else:
        w = d**scheme.alpha
    if not np.all(w > 0):
        raise NonpositiveWeight("weight scheme produced a nonpositive weight")
    return w


@dataclass
class DirichletParams:
    """Per-vertex urn shape vectors in CSR form, parent slot first.

    neighbors[i] holds the vertex on the other side of slot i (BASE = -1 for
    the plant slot). When unplanted the root vector has no parent slot.
    """

    offsets: np.ndarray
    shapes: np.ndarray
    neighbors: np.ndarray
    planted: bool

    def vertex_shapes(self, v: int) -> np.ndarray:
        return self.shapes[self.offsets[v] : self.offsets[v + 1]]


def dirichlet_params(
    weights: np.ndarray, tree: PlaneTree, delta: float, planted: bool = True
) -> DirichletParams:
    """Urn shapes: parent slot (w + delta)/(2 delta), child slots w/(2 delta)."""
    if not delta > 0:
        raise EnvironmentError_("delta must be positive")
    n = tree.n
    kids = np.diff(tree.child_offsets)
    sizes = kids + 1
    if not planted:
        sizes = sizes.copy()
        sizes[0] -= 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    shapes = np.empty(offsets[-1], dtype=np.float64)
    neighbors = np.empty(offsets[-1], dtype=np.int64)
    two_d = 2.0 * delta
    has_parent = np.ones(n, dtype=bool)
    if not planted:
        has_parent[0] = False
    pslots = offsets[:-1][has_parent]
    shapes[pslots] = (weights[has_parent] + delta) / two_d
    neighbors[pslots] = np.where(tree.parent[has_parent] < 0, -1, tree.parent[has_parent])
    # child slots, in Ulam-Harris order
    child_slot = np.repeat(offsets[:-1] + has_parent, kids) + _sibling_rank(tree)
    shapes[child_slot] = weights[tree.child_list] / two_d
    neighbors[child_slot] = tree.child_list
    return DirichletParams(offsets, shapes, neighbors, planted)


def _sibling_rank(tree: PlaneTree) -> np.ndarray:
    """Position of each child within its sibling block, aligned with child_list."""
    kids = np.diff(tree.child_offsets)
    return np.arange(len(tree.child_list)) - np.repeat(tree.child_offsets[:-1], kids)


@dataclass
class Environment:
    """Sampled potential field and its derived electrical quantities.

    edge_resistance[x] is the resistance of {parent(x), x}; index 0 holds the
    plant edge, normalized to resistance 1.
    """

    tree: PlaneTree
    planted: bool
    log_rho: np.ndarray
    V: np.ndarray
    edge_resistance: np.ndarray
    nu: np.ndarray
    seed: str
    _metric: Optional[TreeMetricView] = field(default=None, repr=False)

    def metric(self) -> TreeMetricView:
        if self._metric is None:
            self._metric = TreeMetricView(self.tree)
        return self._metric

    def conductance(self) -> np.ndarray:
        """Per-edge conductances e^{-V(child)}, plant edge at index 0."""
        return 1.0 / self.edge_resistance

    def total_conductance(self) -> np.ndarray:
        """Sum of incident conductances per vertex (plant edge included at the root)."""
        c = self.conductance()
        tot = np.zeros(self.tree.n)
        np.add.at(tot, self.tree.parent[1:], c[1:])
        tot += c * _has_parent_mask(self.tree, self.planted)
        return tot

    def recompute(self) -> "Environment":
        """Rebuild V, edge_resistance, nu from log_rho alone (bitwise identical)."""
        V, r, nu = _derive_fields(self.tree, self.log_rho)
        return Environment(self.tree, self.planted, self.log_rho, V, r, nu, self.seed)


def _has_parent_mask(tree: PlaneTree, planted: bool) -> np.ndarray:
    m = np.ones(tree.n)
    if not planted:
        m[0] = 0.0
    return m


def _derive_fields(tree: PlaneTree, log_rho: np.ndarray):
    n = tree.n
    V = np.zeros(n)
    depth = tree.depth
    order = np.argsort(depth, kind="stable")
    # accumulate level by level so parents are final before children
    for lev in range(1, int(depth.max()) + 1 if n > 1 else 1):
        idx = order[np.searchsorted(depth[order], lev):
                    np.searchsorted(depth[order], lev + 1)]
        V[idx] = V[tree.parent[idx]] + log_rho[idx]
    r = np.exp(V)
    r[0] = 1.0  # plant edge reference resistance
    nu = np.exp(-V)
    nu[0] = 0.0
    np.add.at(nu, tree.parent[1:], np.exp(-V[1:]))
    return V, r, nu


def sample_environment(
    params: DirichletParams, tree: PlaneTree, rng: np.random.Generator
) -> Environment:
    """Draw Gamma(shape, 1) per urn slot and derive rho, V, resistance, nu.

    rho_x is the parent's parent-slot variable over the parent's x-slot
    variable, hence a beta-prime ratio; siblings share the numerator.
    """
    if not params.planted:
        raise EnvironmentError_("environment fields need the planted urn layout")
    state = rng.bit_generator.state
    fp = f"{state['bit_generator']}:{hash(str(state['state'])) & 0xFFFFFFFFFFFFFFFF:016x}"
    g = rng.gamma(params.shapes)
    logg = np.log(g)
    n = tree.n
    log_rho = np.zeros(n)
    if n > 1:
        parent_slot_log = logg[params.offsets[:-1]]  # each vertex's parent slot
        kids = np.diff(tree.child_offsets)
        child_slot = np.repeat(params.offsets[:-1] + 1, kids) + _sibling_rank(tree)
        # child_slot is aligned with child_list
        log_rho[tree.child_list] = parent_slot_log[tree.parent[tree.child_list]] \
            - logg[child_slot]
    V, r, nu = _derive_fields(tree, log_rho)
    return Environment(tree, True, log_rho, V, r, nu, fp)


def transition_probs(env: Environment) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Conductance-proportional jump probabilities, CSR over vertices.

    Returns (offsets, neighbors, probs). The root row includes the base
    (neighbor -1) when planted; ratios per vertex equal the quenched Dirichlet
    draw ratios by construction of rho.
    """
    tree = env.tree
    n = tree.n
    kids = np.diff(tree.child_offsets)
    sizes = kids + 1
    if not env.planted:
        sizes = sizes.copy()
        sizes[0] -= 1
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    neighbors = np.empty(offsets[-1], dtype=np.int64)
    weights = np.empty(offsets[-1], dtype=np.float64)
    c = env.conductance()
    has_parent = np.ones(n, dtype=bool)
    if not env.planted:
        has_parent[0] = False
    pslots = offsets[:-1][has_parent]
    neighbors[pslots] = np.where(tree.parent[has_parent] < 0, -1,
                                 tree.parent[has_parent])
    weights[pslots] = c[has_parent]
    child_slot = np.repeat(offsets[:-1] + has_parent, kids) + _sibling_rank(tree)
    neighbors[child_slot] = tree.child_list
    weights[child_slot] = c[tree.child_list]
    totals = np.add.reduceat(weights, offsets[:-1]) if offsets[-1] else np.zeros(n)
    probs = weights / np.repeat(totals, np.diff(offsets))
    return offsets, neighbors, probs


def potential_W(env: Environment, vertex: int, scheme: WeightScheme) -> float:
    """V(x) plus the alpha log-depth correction (absent when alpha = 1)."""
    d = int(env.tree.depth[vertex])
    if scheme.alpha == 1.0:
        return float(env.V[vertex])
    if d == 0:
        if scheme.alpha == 0.0:
            return float(env.V[vertex])
        raise DomainError("log depth undefined at the root")
    return float(env.V[vertex] + scheme.alpha * math.log(d))


def resistance(env: Environment, u: int, v: int) -> float:
    """Series resistance along [u, v]: sum of e^{V(x)} over the path, mrca excluded."""
    if u == v:
        return 0.0
    mv = env.metric()
    a = mv.mrca(u, v)
    acc = 0.0
    for w in (u, v):
        x = w
        while x != a:
            acc += float(env.edge_resistance[x])
            x = int(env.tree.parent[x])
    return acc


def beta_prime_moments(a: float, b: float, k: int) -> float:
    """E[X^k] for X ~ beta-prime(a, b): prod_{j<k} (a+j)/(b-1-j); k may be negative."""
    if a <= 0 or b <= 0:
        raise EnvironmentError_("shape parameters must be positive")
    if k == 0:
        return 1.0
    if k < 0:
        a, b, k = b, a, -k
    out = 1.0
    for j in range(k):
        den = b - 1.0 - j
        if den <= 0:
            raise PoleError(f"moment of order {k} does not exist (b = {b})")
        out *= (a + j) / den
    return out


def rho_depth_params(depth: int, scheme: WeightScheme) -> tuple[float, float]:
    """Beta-prime parameters (a, b) of rho at a depth-`depth` vertex."""
    if depth < 1:
        raise DomainError("rho is defined for depth >= 1")
    c, s = _weight_pair(depth, scheme)
    dn = scheme.delta_n
    return (c + dn) / (2.0 * dn), s / (2.0 * dn)


def _weight_pair(depth: int, scheme: WeightScheme) -> tuple[float, float]:
    """Normalized weights above the parent (c) and above the vertex (s)."""
    if scheme.mode == "rescaled_critical":
        return depth - 1.0 + scheme.ratio, depth + scheme.ratio
    a = scheme.alpha
    return float(max(depth - 1, 1)) ** a, float(depth) ** a


def rho_moment_product(depth: int, scheme: WeightScheme, k: int) -> float:
    """k-th moment of rho via the unreduced product over weight terms.

    Cross-check route: prod_j (c + (2j+1) D) / (s - (2j+2) D) for k > 0 and the
    swapped form for k < 0, with D the rescaled reinforcement. Must agree with
    beta_prime_moments(rho_depth_params(...)) to 1e-12 relative.
    """
    if k == 0:
        return 1.0
    c, s = _weight_pair(depth, scheme)
    dn = scheme.delta_n
    out = 1.0
    if k > 0:
        for j in range(k):
            den = s - (2 * j + 2) * dn
            if den <= 0:
                raise PoleError(f"moment of order {k} does not exist")
            out *= (c + (2 * j + 1) * dn) / den
    else:
        for j in range(-k):
            den = c - (2 * j + 1) * dn
            if den <= 0:
                raise PoleError(f"moment of order {k} does not exist")
            out *= (s + 2 * j * dn) / den
    return out


def rho_mean_var(depth: int, scheme: WeightScheme) -> tuple[float, float]:
    """Exact (E[rho] - 1, Var[rho]) at the given depth."""
    c, s = _weight_pair(depth, scheme)
    dn = scheme.delta_n
    if s - 4 * dn <= 0:
        raise PoleError("variance does not exist for these parameters")
    mean_minus_one = (c + dn) / (s - 2 * dn) - 1.0
    var = 2 * dn * (c + dn) * (c + s - dn) / ((s - 4 * dn) * (s - 2 * dn) ** 2)
    return mean_minus_one, var


def branch_limit_targets(scheme: WeightScheme, d: float) -> tuple[float, float]:
    """Limiting mean/variance of the corrected potential at rescaled distance d."""
    if d <= 0:
        raise DomainError("d must be positive")
    a, delta = scheme.alpha, scheme.delta
    if a == 1.0:
        return (delta - 1.0) * math.log(d + 1.0), 4.0 * delta * math.log(d + 1.0)
    if a > 1.0:
        raise DomainError("limit targets exist for alpha <= 1 only")
    return (delta * d ** (1.0 - a) / (1.0 - a),
            4.0 * delta * d ** (1.0 - a) / (1.0 - a))


def dump_environment(env: Environment, path) -> None:
    """Write `vertex log_rho V nu` rows; floats use repr for bit-stable output."""
    with open(path, "w") as f:
        f.write("# vertex log_rho V nu\n")
        for x in range(env.tree.n):
            f.write(f"{x} {float(env.log_rho[x])!r} {float(env.V[x])!r}"
                    f" {float(env.nu[x])!r}\n")
