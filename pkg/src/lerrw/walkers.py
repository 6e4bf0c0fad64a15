"""Reinforced, quenched, and continuous-time walkers with checkpointed traces.

All walkers start at the root. Traces record displacement statistics at
geometric checkpoints, cumulative root arrivals, first-exit times past
configured radii, and censoring against the tree's truncation boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import Environment, transition_probs
from .trees import PlaneTree

BASE = -1


class WalkerError(ValueError):
    pass


def geometric_checkpoints(horizon: float) -> np.ndarray:
    """1, 2, 4, ... capped and terminated by the horizon itself."""
    if horizon < 1:
        raise WalkerError("horizon must be >= 1")
    ks = [2.0**k for k in range(int(math.floor(math.log2(horizon))) + 1)]
    if ks[-1] != horizon:
        ks.append(float(horizon))
    return np.array(ks)


@dataclass
class WalkTrace:
    """Checkpointed statistics of a single run."""

    checkpoint_times: np.ndarray
    displacement: np.ndarray
    max_displacement: np.ndarray
    returns: np.ndarray
    root_return_count: int
    radii: np.ndarray
    first_exit_times: np.ndarray  # -1 where the radius was never exceeded
    censored: bool = False
    censor_time: Optional[float] = None
    steps: int = 0
    time_at_base: float = 0.0
    positions: Optional[np.ndarray] = None  # debug log, discrete runs only
    final_live_weights: Optional[np.ndarray] = None
    base_visits: int = 0

    def validate(self) -> None:
        assert np.all(np.diff(self.max_displacement) >= 0)
        hit = self.first_exit_times >= 0
        assert np.all(np.diff(self.first_exit_times[hit]) >= 0)
        assert np.all(self.displacement <= self.max_displacement)


class _Recorder:
    """Shared checkpoint/exit bookkeeping for all three walkers."""

    def __init__(self, tree: PlaneTree, checkpoints, radii):
        self.tree = tree
        self.cps = np.asarray(checkpoints, dtype=np.float64)
        if np.any(np.diff(self.cps) <= 0) or (len(self.cps) and self.cps[0] <= 0):
            raise WalkerError("checkpoints must be positive and increasing")
        self.radii = np.asarray(sorted(radii), dtype=np.float64)
        self.disp = np.zeros(len(self.cps), dtype=np.int64)
        self.maxd = np.zeros(len(self.cps), dtype=np.int64)
        self.rets = np.zeros(len(self.cps), dtype=np.int64)
        self.exits = np.full(len(self.radii), -1.0)
        self.cp_i = 0
        self.exit_i = 0
        self.cur_max = 0
        self.returns = 0
        self.boundary = tree.truncation_depth

    def depth_of(self, v: int) -> int:
        return 1 if v == BASE else int(self.tree.depth[v])

    def arrive(self, v: int, t: float) -> bool:
        """Update stats on arrival at v at time t; True when run must censor."""
        d = self.depth_of(v)
        if v == 0:
            self.returns += 1
        if d > self.cur_max:
            self.cur_max = d
            while self.exit_i < len(self.radii) and d > self.radii[self.exit_i]:
                self.exits[self.exit_i] = t
                self.exit_i += 1
        return self.boundary is not None and v != BASE and d >= self.boundary

    def checkpoint(self, v: int, upto: float) -> None:
        """Record all checkpoints with time <= upto at current position v."""
        d = self.depth_of(v)
        while self.cp_i < len(self.cps) and self.cps[self.cp_i] <= upto:
            self.disp[self.cp_i] = d
            self.maxd[self.cp_i] = self.cur_max
            self.rets[self.cp_i] = self.returns
            self.cp_i += 1

    def freeze(self, v: int) -> None:
        """Fill remaining checkpoints with the last observed state."""
        self.checkpoint(v, np.inf)

    def trace(self, censored: bool, censor_time, steps: int,
              time_at_base: float = 0.0, positions=None) -> WalkTrace:
        return WalkTrace(
            checkpoint_times=self.cps, displacement=self.disp,
            max_displacement=self.maxd, returns=self.rets,
            root_return_count=self.returns, radii=self.radii,
            first_exit_times=self.exits, censored=censored,
            censor_time=censor_time, steps=steps, time_at_base=time_at_base,
            positions=None if positions is None else np.asarray(positions),
        )


def _incidence(tree: PlaneTree, planted: bool):
    """Per-vertex lists of (neighbor, edge_key); key = child endpoint, plant = 0."""
    rows: list[list[tuple[int, int]]] = [[] for _ in range(tree.n)]
    for v in range(tree.n):
        if v == 0:
            if planted:
                rows[0].append((BASE, 0))
        else:
            rows[v].append((int(tree.parent[v]), v))
        for c in tree.children(v):
            rows[v].append((int(c), int(c)))
    return rows


def run_lerrw(
    tree: PlaneTree,
    weights: np.ndarray,
    delta: float,
    horizon: int,
    rng: np.random.Generator,
    checkpoints: Optional[Sequence[float]] = None,
    radii: Sequence[float] = (),
    planted: bool = False,
    record_positions: bool = False,
) -> WalkTrace:
    """Live reinforcement: the crossed edge gains +delta after every crossing."""
    if horizon < 1:
        raise WalkerError("horizon must be >= 1")
    rec = _Recorder(tree, geometric_checkpoints(horizon) if checkpoints is None
                    else checkpoints, radii)
    rows = _incidence(tree, planted)
    live = np.array(weights, dtype=np.float64)
    pos = 0
    log = [0] if record_positions else None
    u01 = rng.random
    for t in range(1, horizon + 1):
        row = rows[pos] if pos != BASE else [(0, 0)]
        total = 0.0
        for _, e in row:
            total += live[e]
        x = u01() * total
        for nxt, e in row:
            x -= live[e]
            if x < 0:
                break
        live[e] += delta
        pos = nxt
        if log is not None:
            log.append(pos)
        stop = rec.arrive(pos, t)
        rec.checkpoint(pos, t)
        if stop:
            rec.freeze(pos)
            tr = rec.trace(True, float(t), t, positions=log)
            tr.final_live_weights = live  # debug audit hook
            return tr
    rec.freeze(pos)
    tr = rec.trace(False, None, horizon, positions=log)
    tr.final_live_weights = live
    return tr


def audit_live_weights(tree: PlaneTree, weights: np.ndarray, delta: float,
                       positions: np.ndarray, planted: bool) -> np.ndarray:
    """Recompute live weights from a position log: initial + delta * crossings."""
    live = np.array(weights, dtype=np.float64)
    for u, v in zip(positions, positions[1:]):
        if u == BASE or v == BASE:
            e = 0
        else:
            e = int(v if tree.parent[v] == u else u)
        live[e] += delta
    return live


def _quenched_rows(env: Environment, with_base: bool):
    """Cumulative transition rows as python lists for the step loop."""
    offs, nbr, probs = transition_probs(env)
    rows: list[tuple[list[int], list[float]]] = []
    for v in range(env.tree.n):
        ns = nbr[offs[v]:offs[v + 1]].tolist()
        ps = probs[offs[v]:offs[v + 1]].tolist()
        if v == 0 and env.planted and not with_base:
            keep = [(x, p) for x, p in zip(ns, ps) if x != BASE]
            z = sum(p for _, p in keep)
            ns = [x for x, _ in keep]
            ps = [p / z for _, p in keep]
        cum = []
        acc = 0.0
        for p in ps:
            acc += p
            cum.append(acc)
        if abs(acc - 1.0) > 1e-12:
            raise WalkerError(f"transition row at {v} sums to {acc}")
        rows.append((ns, cum))
    return rows


def _jump(rows, pos: int, u: float) -> int:
    ns, cum = rows[pos]
    for i, c in enumerate(cum):
        if u < c:
            return ns[i]
    return ns[-1]


def run_rwde(
    env: Environment,
    horizon: int,
    rng: np.random.Generator,
    checkpoints: Optional[Sequence[float]] = None,
    radii: Sequence[float] = (),
    with_base: bool = False,
    record_positions: bool = False,
) -> WalkTrace:
    """Quenched chain: jump probabilities proportional to edge conductances."""
    if horizon < 1:
        raise WalkerError("horizon must be >= 1")
    rec = _Recorder(env.tree, geometric_checkpoints(horizon) if checkpoints is None
                    else checkpoints, radii)
    rows = _quenched_rows(env, with_base)
    pos = 0
    log = [0] if record_positions else None
    u01 = rng.random
    for t in range(1, horizon + 1):
        pos = 0 if pos == BASE else _jump(rows, pos, u01())
        if log is not None:
            log.append(pos)
        stop = rec.arrive(pos, t)
        rec.checkpoint(pos, t)
        if stop:
            rec.freeze(pos)
            return rec.trace(True, float(t), t, positions=log)
    rec.freeze(pos)
    return rec.trace(False, None, horizon, positions=log)


def run_ctrw(
    env: Environment,
    horizon: float,
    rng: np.random.Generator,
    checkpoints: Optional[Sequence[float]] = None,
    radii: Sequence[float] = (),
    with_base: bool = True,
) -> WalkTrace:
    """Jump chain of run_rwde with mean-1 exponential holds; the base holds
    for zero time, so the clock never advances there."""
    if horizon <= 0:
        raise WalkerError("horizon must be positive")
    rec = _Recorder(env.tree, geometric_checkpoints(max(1.0, horizon))
                    if checkpoints is None else checkpoints, radii)
    rows = _quenched_rows(env, with_base)
    pos = 0
    clock = 0.0
    steps = 0
    at_base = 0
    while True:
        hold = 0.0 if pos == BASE else rng.exponential()
        if clock + hold >= horizon:
            rec.checkpoint(pos, horizon)
            rec.freeze(pos)
            tr = rec.trace(False, None, steps)
            tr.base_visits = at_base
            return tr
        rec.checkpoint(pos, clock + hold)
        clock += hold
        pos = 0 if pos == BASE else _jump(rows, pos, rng.random())
        steps += 1
        if pos == BASE:
            at_base += 1
        if rec.arrive(pos, clock):
            rec.freeze(pos)
            tr = rec.trace(True, clock, steps)
            tr.base_visits = at_base
            return tr


def exit_time_ctrw(env: Environment, boundary: set[int], rng: np.random.Generator,
                   start: int = 0, with_base: bool = True) -> float:
    """Continuous time until first arrival in `boundary`, from `start`."""
    rows = _quenched_rows(env, with_base)
    pos = start
    clock = 0.0
    if pos in boundary:
        return 0.0
    while True:
        if pos != BASE:
            clock += rng.exponential()
        pos = 0 if pos == BASE else _jump(rows, pos, rng.random())
        if pos in boundary:
            return clock


def trace_rows(trace: WalkTrace, replica: int) -> list[str]:
    """CSV rows `replica, t, displacement, max_displacement, returns, censored`."""
    out = []
    for i, t in enumerate(trace.checkpoint_times):
        cens = int(trace.censored and trace.censor_time is not None
                   and t >= trace.censor_time)
        tval = int(t) if float(t).is_integer() else float(t)
        out.append(f"{replica},{tval},{trace.displacement[i]},"
                   f"{trace.max_displacement[i]},{trace.returns[i]},{cens}")
    return out
