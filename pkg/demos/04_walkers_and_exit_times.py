"""Three walkers over the same environment: live reinforcement, the quenched
jump chain, and its continuous-time version checked against the exact solver.

Run:  python3 demos/04_walkers_and_exit_times.py
"""
from fractions import Fraction

import numpy as np

from lerrw.environment import (
    WeightScheme,
    dirichlet_params,
    initial_weights,
    sample_environment,
    transition_probs,
)
from lerrw.offspring import geometric_half
from lerrw.oracle import BASE, exact_exit_stats
from lerrw.trees import sample_conditioned_gw
from lerrw.walkers import (
    audit_live_weights,
    exit_time_ctrw,
    run_ctrw,
    run_lerrw,
    run_rwde,
    trace_rows,
)

rng = np.random.default_rng(11)
n = 41
scheme = WeightScheme(alpha=1.0, delta=1.0, mode="plain_power")
tree = sample_conditioned_gw(geometric_half(), n, rng)
weights = initial_weights(scheme, tree)

# live reinforcement: every crossing adds delta to the crossed edge
trace = run_lerrw(tree, weights, scheme.delta, 2000, rng, planted=True,
                  record_positions=True)
print("reinforced walk:", trace.steps, "steps, displacement",
      trace.displacement[-1], "max", trace.max_displacement[-1],
      "root returns", int(trace.returns[-1]))
replayed = audit_live_weights(tree, weights, scheme.delta, trace.positions,
                              planted=True)
print("final edge weights replay bitwise:",
      bool(np.array_equal(replayed, trace.final_live_weights)))
print("first trace rows:")
for row in trace_rows(trace, 0)[:4]:
    print("  ", row)

# the quenched chain in one Gamma environment has the same annealed law
env = sample_environment(dirichlet_params(weights, tree, scheme.delta),
                         tree, rng)
q = run_rwde(env, 2000, rng)
print("\nquenched walk:", q.steps, "steps, displacement", q.displacement[-1])

# continuous time: unit-mean holds except at the base, which holds no time
c = run_ctrw(env, 500.0, rng)
print("continuous-time walk: clock 500.0 =", c.steps, "jumps,",
      f"base visits {c.base_visits} holding {c.time_at_base} time")

# exit time through the leaves, simulated vs solved exactly
offs, nbr, probs = transition_probs(env)
leaves = {v for v in range(n) if tree.num_children(v) == 0}
rows = {}
for v in range(n):
    if v in leaves:
        continue
    row = {int(nbr[offs[v] + i]): Fraction(float(probs[offs[v] + i]))
           for i in range(int(offs[v + 1] - offs[v]))}
    row[max(row)] += 1 - sum(row.values())
    rows[v] = row
rows[BASE] = {0: Fraction(1)}
stats = exact_exit_stats(tree, rows, boundary=leaves, start=0,
                         holding={v: Fraction(1) for v in rows if v != BASE})
samples = np.array([exit_time_ctrw(env, leaves, rng) for _ in range(4000)])
se = samples.std(ddof=1) / np.sqrt(samples.size)
print(f"\nmean exit time: simulated {samples.mean():.3f} +- {se:.3f}, "
      f"exact {float(stats.expected_duration):.3f}")
