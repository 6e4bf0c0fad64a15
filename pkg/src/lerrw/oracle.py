"""Exact rational reference computations on small instances.

Two independent routes to the path law of the reinforced walk: a sequential
urn product (reinforce after every crossing) and the annealed closed form
built from per-vertex exchangeable draw sequences. On trees they agree
exactly; tests and the acceptance gate assert rational equality.

Also exact absorption statistics (expected steps, per-vertex visit counts,
expected continuous-time duration) for a quenched chain on a tree, via
leaf-to-root elimination in Fraction arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .trees import PlaneTree, decode_lukasiewicz

BASE = -1  # id of the base vertex below the root, when planted

Weights = dict[int, Fraction]


class OracleError(ValueError):
    pass


def enumerate_small(n: int) -> list[PlaneTree]:
    """All plane trees with exactly n vertices (Catalan(n-1) of them), n <= 8."""
    if not 1 <= n <= 8:
        raise OracleError("enumeration is limited to 1 <= n <= 8")
    out: list[PlaneTree] = []
    ks = [0] * n

    def rec(i: int, w: int) -> None:
        if i == n - 1:
            if w == 0:  # last vertex must close the path with k = 0
                ks[i] = 0
                steps = np.zeros(n + 1, dtype=np.int64)
                np.cumsum(np.array(ks) - 1, out=steps[1:])
                out.append(decode_lukasiewicz(steps))
            return
        r = n - i  # vertices still to place, including this one
        # lower bound keeps the running sum nonnegative, upper keeps -1 reachable
        for k in range(max(0, 1 - w), r - w):
            ks[i] = k
            rec(i + 1, w + k - 1)

    rec(0, 0)  # w tracks the Lukasiewicz value W_i
    return out


def _edge_key(tree: PlaneTree, u: int, v: int) -> int:
    """Edges are named by their lower endpoint: {parent(x), x} -> x, plant -> BASE."""
    if u == BASE or v == BASE:
        return BASE
    if tree.parent[v] == u:
        return v
    if tree.parent[u] == v:
        return u
    raise OracleError(f"{u} and {v} are not adjacent")


def _incident_edges(tree: PlaneTree, v: int, planted: bool) -> list[int]:
    if v == BASE:
        return [BASE]
    keys = []
    if v == 0:
        if planted:
            keys.append(BASE)
    else:
        keys.append(v)
    keys.extend(int(c) for c in tree.children(v))
    return keys


def _neighbor_of(tree: PlaneTree, v: int, edge: int) -> int:
    if edge == BASE:
        return 0 if v == BASE else BASE
    return int(tree.parent[edge]) if edge == v else edge


def _full_weights(tree: PlaneTree, weights: Optional[Weights], planted: bool) -> Weights:
    w: Weights = {}
    for x in range(1, tree.n):
        w[x] = Fraction(1)
    if planted:
        w[BASE] = Fraction(1)
    if weights:
        for k, val in weights.items():
            if k not in w:
                raise OracleError(f"weight for unknown edge {k}")
            w[k] = Fraction(val)
    if any(val <= 0 for val in w.values()):
        raise OracleError("edge weights must be positive")
    return w


def _check_path(tree: PlaneTree, path: Sequence[int], planted: bool) -> None:
    start = BASE if planted else 0
    if len(path) < 1 or path[0] != start:
        raise OracleError(f"path must start at {start}")
    for u, v in zip(path, path[1:]):
        _edge_key(tree, u, v)  # raises when not adjacent
        if (u == BASE or v == BASE) and not planted:
            raise OracleError("base vertex only exists in planted mode")


def lerrw_path_probability(
    tree: PlaneTree,
    path: Sequence[int],
    delta: Fraction | float | int = 1,
    weights: Optional[Weights] = None,
    planted: bool = False,
) -> Fraction:
    """Sequential route: step probabilities from current counts, +delta per crossing."""
    _check_path(tree, path, planted)
    delta = Fraction(delta)
    counts = _full_weights(tree, weights, planted)
    prob = Fraction(1)
    for u, v in zip(path, path[1:]):
        e = _edge_key(tree, u, v)
        denom = sum(counts[f] for f in _incident_edges(tree, u, planted))
        prob *= counts[e] / denom
        counts[e] += delta
    return prob


def annealed_path_probability(
    tree: PlaneTree,
    path: Sequence[int],
    delta: Fraction | float | int = 1,
    weights: Optional[Weights] = None,
    planted: bool = False,
) -> Fraction:
    """Closed-form route: per-vertex exchangeable exit sequences.

    A vertex first entered through an edge holds that edge at weight + delta;
    every completed excursion returns 2*delta to the drawn edge, so the exit
    sequence at each vertex is a Polya urn with those initial counts.
    """
    _check_path(tree, path, planted)
    delta = Fraction(delta)
    base_weights = _full_weights(tree, weights, planted)
    start = path[0]
    # initial urn counts per vertex: entry edge of the first visit gains +delta
    exits: dict[int, list[int]] = {}
    first_entry: dict[int, int] = {}
    for u, v in zip(path, path[1:]):
        exits.setdefault(u, []).append(_edge_key(tree, u, v))
        if v not in exits and v not in first_entry and v != start:
            first_entry[v] = _edge_key(tree, u, v)
    # a vertex visited but never exited still needs no factor
    prob = Fraction(1)
    for v, seq in exits.items():
        init: Weights = {}
        for e in _incident_edges(tree, v, planted):
            init[e] = base_weights[e]
        if v != start:
            # walks on a tree first reach v through its edge toward the start
            entry = first_entry.get(v)
            if entry is None:
                raise OracleError("exited a vertex that was never entered")
            init[entry] += delta
        total = sum(init.values())
        counts: dict[int, int] = {}
        num = Fraction(1)
        for e in seq:
            c = counts.get(e, 0)
            num *= init[e] + 2 * delta * c
            counts[e] = c + 1
        den = Fraction(1)
        for i in range(len(seq)):
            den *= total + 2 * delta * i
        prob *= num / den
    return prob


def enumerate_paths(tree: PlaneTree, length: int, planted: bool = False) -> list[tuple[int, ...]]:
    """All walk trajectories of the given number of steps from the start vertex."""
    start = BASE if planted else 0
    paths: list[tuple[int, ...]] = []
    cur = [start]

    def rec() -> None:
        if len(cur) == length + 1:
            paths.append(tuple(cur))
            return
        v = cur[-1]
        for e in _incident_edges(tree, v, planted):
            cur.append(_neighbor_of(tree, v, e))
            rec()
            cur.pop()

    rec()
    return paths


def total_path_probability(
    tree: PlaneTree,
    length: int,
    delta: Fraction | float | int = 1,
    weights: Optional[Weights] = None,
    planted: bool = False,
    route: str = "lerrw",
) -> Fraction:
    """Sum of path probabilities over every length-step trajectory; must be 1."""
    fn = {"lerrw": lerrw_path_probability, "annealed": annealed_path_probability}[route]
    return sum(
        (fn(tree, p, delta, weights, planted) for p in enumerate_paths(tree, length, planted)),
        Fraction(0),
    )


@dataclass
class ExitStats:
    """Exact absorption statistics for a quenched tree chain."""

    expected_steps: Fraction
    visits: dict[int, Fraction]  # expected visits before absorption, per vertex
    expected_duration: Optional[Fraction] = None  # with per-vertex mean holding times


def _solve_tree_system(
    vertices: list[int],
    parent_of: dict[int, Optional[int]],
    children_of: dict[int, list[int]],
    coeff: dict[int, dict[int, Fraction]],
    rhs: dict[int, Fraction],
    zero: set[int],
    root: int,
) -> dict[int, Fraction]:
    """Solve x_v = rhs_v + sum_u coeff[v][u] x_u on a tree, x = 0 on `zero`."""
    A: dict[int, Fraction] = {}
    B: dict[int, Fraction] = {}
    order = sorted(vertices, key=lambda v: -len(_ancestors(parent_of, v)))
    for v in order:  # children before parents
        if v in zero:
            A[v], B[v] = Fraction(0), Fraction(0)
            continue
        row = coeff[v]
        s_a = rhs[v]
        s_b = Fraction(1)
        for c in children_of[v]:
            s_a += row.get(c, Fraction(0)) * A[c]
            s_b -= row.get(c, Fraction(0)) * B[c]
        p = parent_of[v]
        A[v] = s_a / s_b
        B[v] = (row.get(p, Fraction(0)) / s_b) if p is not None else Fraction(0)
    x: dict[int, Fraction] = {}
    stack = [root]
    while stack:
        v = stack.pop()
        p = parent_of[v]
        x[v] = A[v] + (B[v] * x[p] if p is not None else Fraction(0))
        stack.extend(children_of[v])
    return x


def _ancestors(parent_of: dict[int, Optional[int]], v: int) -> list[int]:
    out = []
    while parent_of[v] is not None:
        v = parent_of[v]
        out.append(v)
    return out


def exact_exit_stats(
    tree: PlaneTree,
    probs: dict[int, dict[int, Fraction]],
    boundary: set[int],
    start: int,
    holding: Optional[dict[int, Fraction]] = None,
) -> ExitStats:
    """Expected steps / visits / duration before hitting `boundary` from `start`.

    probs[v][u] is the one-step probability v -> u; vertex BASE (= -1) is the
    planted base when present in probs. Everything stays rational.
    """
    planted = BASE in probs
    vertices = list(range(tree.n)) + ([BASE] if planted else [])
    parent_of: dict[int, Optional[int]] = {BASE: 0} if planted else {}
    children_of: dict[int, list[int]] = {v: [] for v in vertices}
    for v in range(tree.n):
        p = int(tree.parent[v])
        parent_of[v] = p if p >= 0 else None
        if p >= 0:
            children_of[p].append(v)
    if planted:
        children_of[0].append(BASE)  # treat the base as a leaf for elimination
        parent_of[BASE] = 0
    root = 0
    if start not in probs and start not in boundary:
        raise OracleError("start vertex has no transition row")
    for v in vertices:
        if v in boundary:
            continue
        row = probs.get(v)
        if row is None or sum(row.values()) != 1:
            raise OracleError(f"transition row at {v} must sum to 1 exactly")

    ones = {v: Fraction(1) for v in vertices}
    h = _solve_tree_system(
        vertices, parent_of, children_of,
        coeff={v: probs.get(v, {}) for v in vertices},
        rhs=ones, zero=boundary, root=root,
    )
    # adjoint system for expected visit counts from `start`
    coeff_t: dict[int, dict[int, Fraction]] = {v: {} for v in vertices}
    for v in vertices:
        if v in boundary:
            continue
        for u, p in probs[v].items():
            coeff_t[u][v] = p
    delta = {v: Fraction(1 if v == start else 0) for v in vertices}
    z = _solve_tree_system(vertices, parent_of, children_of, coeff_t, delta,
                           zero=boundary, root=root)
    duration = None
    if holding is not None:
        duration = sum((z[v] * holding.get(v, Fraction(0)) for v in vertices), Fraction(0))
    return ExitStats(expected_steps=h[start], visits=z, expected_duration=duration)
