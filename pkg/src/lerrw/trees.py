"""Plane trees, size-conditioned Galton-Watson sampling, Kesten's infinite tree,
and the Lukasiewicz/contour codings.

Vertex ids are assigned in lexicographic (depth-first) order, so the contour
exploration order maps onto ids without an extra permutation. Trees are stored
flat: a parent array, a depth array, and a CSR children structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .offspring import OffspringLaw, sample_offspring_array


class TreeError(ValueError):
    pass


class InfeasibleSize(TreeError):
    """No tree of the requested size exists under the law's support."""


class RejectionBudgetExceeded(TreeError):
    """The conditioned-sum rejection sampler ran out of attempts."""


class MemoryBudgetExceeded(TreeError):
    """Kesten sampling grew past the configured vertex cap."""


@dataclass
class PlaneTree:
    """Rooted ordered tree in flat-array form.

    parent[0] = -1; children of v are child_list[child_offsets[v]:child_offsets[v+1]]
    in Ulam-Harris order. spine marks Kesten's special vertices when present.
    truncation_depth is set when the tree was cut at a depth limit.
    """

    n: int
    parent: np.ndarray
    depth: np.ndarray
    child_offsets: np.ndarray
    child_list: np.ndarray
    spine: Optional[np.ndarray] = None
    truncation_depth: Optional[int] = None
    _contour_order: Optional[np.ndarray] = field(default=None, repr=False)

    def children(self, v: int) -> np.ndarray:
        return self.child_list[self.child_offsets[v] : self.child_offsets[v + 1]]

    def num_children(self, v: int) -> int:
        return int(self.child_offsets[v + 1] - self.child_offsets[v])

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def validate(self) -> None:
        n = self.n
        assert self.parent[0] == -1 and np.all(self.parent[1:] >= 0)
        assert np.all(self.depth[1:] == self.depth[self.parent[1:]] + 1)
        assert self.depth[0] == 0
        assert self.child_offsets[0] == 0 and self.child_offsets[n] == n - 1
        # parent/children mutual consistency
        assert np.array_equal(np.sort(self.child_list), np.arange(1, n))
        assert np.all(self.parent[self.child_list] == np.repeat(
            np.arange(n), np.diff(self.child_offsets)))
        if self.spine is not None:
            counts = np.bincount(self.depth[self.spine], minlength=self.height + 1)
            assert np.all(counts[np.unique(self.depth[self.spine])] == 1)


def tree_from_parents(parent: list[int] | np.ndarray) -> PlaneTree:
    """Build a PlaneTree from a parent array (children ordered by id)."""
    parent = np.asarray(parent, dtype=np.int64)
    n = len(parent)
    counts = np.bincount(parent[1:], minlength=n) if n > 1 else np.zeros(n, dtype=np.int64)
    child_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=child_offsets[1:])
    child_list = np.argsort(parent[1:], kind="stable").astype(np.int64) + 1 if n > 1 else np.zeros(0, dtype=np.int64)
    # depths by pointer doubling; ids need not be topologically sorted
    depth = (parent >= 0).astype(np.int64)
    anc = np.clip(parent, 0, None)
    for _ in range(64):
        add = depth[anc]
        if not add.any():
            break
        depth = depth + add
        anc = anc[anc]
    else:
        raise TreeError("parent array contains a cycle")
    return PlaneTree(n, parent, depth, child_offsets, child_list)


def decode_lukasiewicz(steps: np.ndarray) -> PlaneTree:
    """Inverse of lukasiewicz: rebuild the tree from the path.

    steps has length n+1 with steps[0] = 0; increments steps[m+1]-steps[m]
    equal child count minus one of the m-th vertex in lexicographic order.
    """
    steps = np.asarray(steps, dtype=np.int64)
    n = len(steps) - 1
    ks = np.diff(steps) + 1
    if n < 1 or steps[0] != 0 or steps[n] != -1 or np.any(steps[:n] < 0):
        raise TreeError("not a Lukasiewicz path")
    parent = np.full(n, -1, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    remaining = np.zeros(n, dtype=np.int64)  # children still to attach, per stack entry
    stack = np.zeros(n, dtype=np.int64)
    top = -1
    for v in range(n):
        if v > 0:
            p = stack[top]
            parent[v] = p
            depth[v] = depth[p] + 1
            remaining[top] -= 1
            if remaining[top] == 0:
                top -= 1
        if ks[v] > 0:
            top += 1
            stack[top] = v
            remaining[top] = ks[v]
    child_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(ks, out=child_offsets[1:])
    # in DFS preorder, v's children appear in order as the v-targets of parent[]
    child_list = np.nonzero(parent >= 0)[0][np.argsort(parent[parent >= 0], kind="stable")]
    return PlaneTree(n, parent, depth, child_offsets, child_list.astype(np.int64))


def lukasiewicz(tree: PlaneTree) -> np.ndarray:
    """W_0 = 0, W_{m+1} = W_m + (children of m-th lexicographic vertex) - 1, W_n = -1."""
    order = _lexicographic_order(tree)
    ks = np.diff(tree.child_offsets)[order]
    out = np.zeros(tree.n + 1, dtype=np.int64)
    np.cumsum(ks - 1, out=out[1:])
    return out


def _lexicographic_order(tree: PlaneTree) -> np.ndarray:
    """DFS preorder visiting children in Ulam-Harris order."""
    n = tree.n
    order = np.empty(n, dtype=np.int64)
    stack = [0]
    i = 0
    offs, cl = tree.child_offsets, tree.child_list
    while stack:
        v = stack.pop()
        order[i] = v
        i += 1
        cs = cl[offs[v] : offs[v + 1]]
        stack.extend(cs[::-1].tolist())
    return order


def is_lexicographic(tree: PlaneTree) -> bool:
    return bool(np.array_equal(_lexicographic_order(tree), np.arange(tree.n)))


def relabel_lexicographic(tree: PlaneTree) -> PlaneTree:
    """Return an equivalent tree whose ids follow DFS preorder."""
    order = _lexicographic_order(tree)
    rank = np.empty(tree.n, dtype=np.int64)
    rank[order] = np.arange(tree.n)
    parent = np.full(tree.n, -1, dtype=np.int64)
    if tree.n > 1:
        parent[rank[1:]] = rank[tree.parent[1:]]
    # rebuild via parents; children order: original Ulam-Harris order maps to id order
    new = tree_from_parents(parent) if tree.n > 1 else PlaneTree(
        1, np.array([-1]), np.array([0]), np.array([0, 0]), np.zeros(0, dtype=np.int64))
    if tree.spine is not None:
        sp = np.zeros(tree.n, dtype=bool)
        sp[rank[np.nonzero(tree.spine)[0]]] = True
        new.spine = sp
    new.truncation_depth = tree.truncation_depth
    return new


def contour(tree: PlaneTree) -> np.ndarray:
    """Depths along the boundary traversal: 2(n-1)+1 integer samples, ends at 0."""
    return tree.depth[contour_order(tree)]


def contour_order(tree: PlaneTree) -> np.ndarray:
    """Vertex ids visited by the contour traversal (each edge crossed twice)."""
    if tree._contour_order is not None:
        return tree._contour_order
    n = tree.n
    out = np.empty(2 * (n - 1) + 1, dtype=np.int64)
    offs, cl, par = tree.child_offsets, tree.child_list, tree.parent
    v = 0
    next_child = np.array(offs[:-1], dtype=np.int64)  # cursor into child_list per vertex
    i = 0
    while True:
        out[i] = v
        i += 1
        if next_child[v] < offs[v + 1]:
            c = cl[next_child[v]]
            next_child[v] += 1
            v = c
        else:
            if v == 0:
                break
            v = par[v]
    tree._contour_order = out
    return out


def padded_contour_order(tree: PlaneTree) -> np.ndarray:
    """Contour order padded with the root to 2n+1 samples (exploration clock 0..2n)."""
    base = contour_order(tree)
    out = np.zeros(2 * tree.n + 1, dtype=np.int64)
    out[: len(base)] = base
    return out


def support_gcd(law: OffspringLaw) -> int:
    """gcd of the nonzero support of xi; size n is feasible iff n = 1 mod gcd."""
    if law.kind == "stable_family" and law.gamma == 2.0:
        return 2
    return 1


def sample_conditioned_gw(
    law: OffspringLaw,
    n: int,
    rng: np.random.Generator,
    max_attempts: int = 10**7,
    batch: int = 0,
) -> PlaneTree:
    """GW(xi) tree conditioned on n vertices, exact in distribution.

    Draws n i.i.d. offspring counts, rejects until their increments sum to -1,
    then rotates to the representative that first hits -1 at step n (cycle
    lemma) and decodes the Lukasiewicz path.
    """
    if n < 1:
        raise InfeasibleSize("n must be >= 1")
    d = support_gcd(law)
    if n % d != 1 % d:
        raise InfeasibleSize(f"size {n} unreachable: support period {d}")
    if n == 1:
        return PlaneTree(1, np.array([-1]), np.array([0]), np.array([0, 0]),
                         np.zeros(0, dtype=np.int64))
    if batch <= 0:
        batch = max(1, min(64, 2 * 10**7 // n))
    attempts = 0
    target = n - 1  # offspring total for increment sum -1
    while attempts < max_attempts:
        ks = sample_offspring_array(law, rng, batch * n).reshape(batch, n)
        attempts += batch
        sums = ks.sum(axis=1)
        hits = np.nonzero(sums == target)[0]
        if len(hits) == 0:
            continue
        return tree_from_offspring_counts(ks[hits[0]])
    raise RejectionBudgetExceeded(f"no size-{n} tree in {max_attempts} attempts")


def tree_from_offspring_counts(ks: np.ndarray) -> PlaneTree:
    """Decode an exchangeable multiset of offspring counts into a tree.

    The counts must total n - 1; the cycle lemma picks the unique rotation
    whose Lukasiewicz path stays nonnegative until the final step.
    """
    ks = np.asarray(ks, dtype=np.int64)
    n = len(ks)
    if ks.sum() != n - 1:
        raise TreeError("offspring counts must sum to n - 1")
    x = ks - 1
    prefix = np.cumsum(x)
    j = int(np.argmin(prefix)) + 1  # first index attaining the minimum
    rotated = np.concatenate([x[j:], x[:j]]) if j < n else x
    steps = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(rotated, out=steps[1:])
    return decode_lukasiewicz(steps)


def sample_kesten(
    law: OffspringLaw,
    depth_limit: int,
    rng: np.random.Generator,
    max_vertices: int = 5 * 10**7,
) -> PlaneTree:
    """Kesten's two-type tree truncated at depth_limit, spine marks set.

    Special vertices reproduce via the size-biased law k*xi(k) and pass the
    special mark to a uniform child; normal vertices reproduce via xi.
    Vertices strictly deeper than depth_limit are cut.
    """
    if depth_limit < 1:
        raise TreeError("depth_limit must be >= 1")
    parents: list[np.ndarray] = [np.array([-1], dtype=np.int64)]
    specials: list[np.ndarray] = [np.array([True])]
    level_start = [0]  # id offset of each level (pre-relabel, BFS ids)
    total = 1
    cur_special = 0  # index of the special vertex within the current level
    cur_count = 1
    for d in range(depth_limit):
        ks = sample_offspring_array(law, rng, cur_count)
        ks[cur_special] = sample_offspring_array(law, rng, 1, size_biased=True)[0]
        nxt = int(ks.sum())
        if total + nxt > max_vertices:
            raise MemoryBudgetExceeded(
                f"kesten tree exceeded {max_vertices} vertices at depth {d + 1}")
        par = np.repeat(np.arange(cur_count, dtype=np.int64) + level_start[-1], ks)
        spec = np.zeros(nxt, dtype=bool)
        # uniform special child among the special vertex's (>=1) children
        offs = np.concatenate([[0], np.cumsum(ks)])
        pick = offs[cur_special] + rng.integers(0, ks[cur_special])
        spec[pick] = True
        parents.append(par)
        specials.append(spec)
        level_start.append(total)
        cur_special = int(pick)
        cur_count = nxt
        total += nxt
    parent = np.concatenate(parents)
    spine = np.concatenate(specials)
    bfs = tree_from_parents(parent)
    bfs.spine = spine
    bfs.truncation_depth = depth_limit
    return relabel_lexicographic(bfs)


def generation_sizes(tree: PlaneTree) -> np.ndarray:
    return np.bincount(tree.depth)


class TreeMetricView:
    """Most-recent-common-ancestor queries by binary lifting, and the tree metric."""

    def __init__(self, tree: PlaneTree):
        self.tree = tree
        h = max(1, tree.height)
        levels = max(1, h.bit_length())
        up = np.empty((levels, tree.n), dtype=np.int64)
        up[0] = np.where(tree.parent < 0, 0, tree.parent)
        for k in range(1, levels):
            up[k] = up[k - 1][up[k - 1]]
        self._up = up

    def ancestor(self, v: int, steps: int) -> int:
        k = 0
        while steps:
            if steps & 1:
                v = int(self._up[k][v])
            steps >>= 1
            k += 1
        return v

    def mrca(self, u: int, v: int) -> int:
        depth = self.tree.depth
        if depth[u] > depth[v]:
            u, v = v, u
        v = self.ancestor(v, int(depth[v] - depth[u]))
        if u == v:
            return u
        for k in range(self._up.shape[0] - 1, -1, -1):
            if self._up[k][u] != self._up[k][v]:
                u, v = int(self._up[k][u]), int(self._up[k][v])
        return int(self._up[0][u])

    def graph_distance(self, u: int, v: int) -> int:
        a = self.mrca(u, v)
        d = self.tree.depth
        return int(d[u] + d[v] - 2 * d[a])

    def path(self, u: int, v: int) -> list[int]:
        """Vertices along [u, v] inclusive."""
        a = self.mrca(u, v)
        left = []
        w = u
        while w != a:
            left.append(w)
            w = int(self.tree.parent[w])
        right = []
        w = v
        while w != a:
            right.append(w)
            w = int(self.tree.parent[w])
        return left + [int(a)] + right[::-1]


def write_tree(tree: PlaneTree, path, law: Optional[OffspringLaw] = None,
               seed: Optional[int] = None) -> None:
    """Serialize: one JSON header line, then `id parent depth spine_flag` rows."""
    import json

    header = {
        "n": tree.n,
        "law": None if law is None else {
            "kind": law.kind, "gamma": law.gamma, "an_constant": law.a_n_constant},
        "seed": seed,
        "truncation_depth": tree.truncation_depth,
    }
    with open(path, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        spine = tree.spine
        for v in range(tree.n):
            flag = 1 if (spine is not None and spine[v]) else 0
            f.write(f"{v} {tree.parent[v]} {tree.depth[v]} {flag}\n")


def read_tree(path) -> tuple[PlaneTree, dict]:
    import json

    with open(path) as f:
        header = json.loads(f.readline())
        parent = []
        spine_flags = []
        for line in f:
            _, p, _, s = line.split()
            parent.append(int(p))
            spine_flags.append(int(s))
    tree = tree_from_parents(np.array(parent, dtype=np.int64))
    if any(spine_flags):
        tree.spine = np.array(spine_flags, dtype=bool)
    tree.truncation_depth = header.get("truncation_depth")
    return tree, header
