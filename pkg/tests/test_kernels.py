"""Compiled lazy walker against exact values and a pure-python mirror."""
import numpy as np
import pytest

from lerrw._kernels import KernelCapacityError, annealed_displacement_run
from lerrw.environment import WeightScheme, depth_weight_table
from lerrw.offspring import geometric_half, sample_offspring_array, stable_family

PLAIN = WeightScheme(alpha=0.0, delta=1.0, mode="plain_power")
STABLE2 = stable_family(2.0)


def run(seed, horizon, cps, law=STABLE2, scheme=PLAIN, **kw):
    kw.setdefault("cap_vertices", 1 << 14)
    kw.setdefault("cap_slots", 1 << 15)
    kw.setdefault("max_table_depth", 1 << 14)
    return annealed_displacement_run(law, scheme, horizon, np.array(cps),
                                     seed, **kw)


def test_determinism_and_shape():
    a = run(9, 64, [1, 2, 4, 8, 16, 32, 64], radii=np.array([0, 1, 2]))
    b = run(9, 64, [1, 2, 4, 8, 16, 32, 64], radii=np.array([0, 1, 2]))
    for key in ("displacement", "max_displacement", "returns",
                "first_exit_times"):
        assert np.array_equal(a[key], b[key])
    c = run(10, 64, [1, 2, 4, 8, 16, 32, 64])
    assert not np.array_equal(a["returns"], c["returns"])
    assert np.all(np.diff(a["max_displacement"]) >= 0)
    assert np.all(a["displacement"] <= a["max_displacement"])
    assert a["displacement"][0] == 1


def test_two_step_return_probability():
    # stable gamma=2: the root always has two children and the first step is
    # uniform between them. The special (spine) child is hit w.p. 1/2 and has
    # two children itself, stepping back w.p. 1/(1 + 1/2 + 1/2) = 1/2; a
    # normal child has 0 or 2 children (1/2 each), stepping back w.p. 1 or
    # 1/2. Total: 1/2 * 1/2 + 1/2 * (1/2 + 1/4) = 5/8.
    m = 20000
    exact = 5 / 8
    hits = 0
    for i in range(m):
        out = run(i, 2, [2])
        hits += out["returns"][0] == 1
    se = (exact * (1 - exact) / m) ** 0.5
    assert abs(hits / m - exact) < 4 * se


class Mirror:
    """Plain-python lazy size-biased tree walker, same law as the kernel."""

    def __init__(self, law, scheme, rng, depth_limit=None):
        self.law, self.scheme, self.rng = law, scheme, rng
        self.w = depth_weight_table(scheme, 1 << 12)
        self.depth_limit = depth_limit
        self.parent, self.depth, self.kids = {0: -1}, {0: 0}, {}
        self.spine = {0}
        self.slots = {}
        self.next_id = 1
        self._expand(0)

    def _expand(self, v):
        k = int(sample_offspring_array(self.law, self.rng, 1,
                                       size_biased=v in self.spine)[0])
        ids = list(range(self.next_id, self.next_id + k))
        self.next_id += k
        d = self.depth[v]
        for c in ids:
            self.parent[c], self.depth[c] = v, d + 1
        if v in self.spine and k:
            self.spine.add(ids[int(self.rng.random() * k)])
        self.kids[v] = ids
        delta = self.scheme.delta
        cum, acc = [], 0.0
        nbrs = []
        if v != 0:
            acc += self.rng.gamma((self.w[d] + delta) / (2 * delta))
            cum.append(acc)
            nbrs.append(self.parent[v])
        for c in ids:
            acc += self.rng.gamma(self.w[d + 1] / (2 * delta))
            cum.append(acc)
            nbrs.append(c)
        self.slots[v] = (nbrs, cum)

    def walk(self, horizon):
        pos, rets, maxd = 0, 0, 0
        for _ in range(horizon):
            nbrs, cum = self.slots[pos]
            r = self.rng.random() * cum[-1]
            j = 0
            while j < len(cum) - 1 and r >= cum[j]:
                j += 1
            pos = nbrs[j]
            maxd = max(maxd, self.depth[pos])
            rets += pos == 0
            if self.depth_limit and self.depth[pos] >= self.depth_limit:
                break
            if pos not in self.slots:
                self._expand(pos)
        return self.depth[pos], maxd, rets


@pytest.mark.parametrize("law", [STABLE2, geometric_half()])
def test_matches_python_mirror(law):
    horizon, m = 1024, 1200
    kern = np.array([[r["displacement"][0], r["max_displacement"][0],
                      r["returns"][0]]
                     for r in (run(7000 + i, horizon, [horizon], law=law,
                                   cap_vertices=1 << 16, cap_slots=1 << 17)
                               for i in range(m))], dtype=np.float64)
    rng = np.random.default_rng(424242)
    mirr = np.array([Mirror(law, PLAIN, rng).walk(horizon) for _ in range(m)],
                    dtype=np.float64)
    for col in range(3):
        se = (kern[:, col].var() / m + mirr[:, col].var() / m) ** 0.5
        assert abs(kern[:, col].mean() - mirr[:, col].mean()) < 4 * se


def test_censoring_at_depth_limit():
    out = run(3, 100_000, [1, 10, 100, 1000, 100_000], depth_limit=3,
              radii=np.array([0, 1, 2]),
              scheme=WeightScheme(alpha=0.0, delta=0.25, mode="plain_power"))
    assert out["status"] == 1
    assert out["censor_time"] is not None and out["censor_time"] > 0
    assert out["max_displacement"][-1] == 3
    assert np.all(out["first_exit_times"] > 0)
    assert np.all(np.diff(out["returns"]) >= 0)


def test_capacity_guard():
    with pytest.raises(KernelCapacityError):
        run(1, 100, [100], cap_vertices=2)


def test_transient_regime_escapes():
    scheme = WeightScheme(alpha=2.0, delta=1.0, mode="plain_power")
    out = run(5, 20000, [20000], scheme=scheme, cap_vertices=1 << 16,
              cap_slots=1 << 17, observe_radius=10**9)
    assert out["max_displacement"][0] > 50
    assert out["visited_vertices"] > out["max_displacement"][0]
    assert not out["returned_after_observe_radius"]
