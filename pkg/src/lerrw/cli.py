"""Command line front end: tree generation, single walks, exact verification,
moment tables, experiment runs, and result reports.

Exit codes: 0 success / all declared tolerances met, 1 a verification or
tolerance failure, 2 usage errors (bad flags, missing files, bad config).
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .environment import (
    EnvironmentError_,
    WeightScheme,
    dirichlet_params,
    initial_weights,
    sample_environment,
)
from .experiments import (
    DEFAULTS,
    ExperimentSpec,
    InvalidSpec,
    IoError,
    SCENARIOS,
    load,
    moment_table,
    parse_spec_text,
    persist,
    read_spec,
    run,
)
from .offspring import OffspringError, geometric_half, scaling_an, stable_family
from .trees import TreeError, sample_conditioned_gw
from .walkers import geometric_checkpoints, run_ctrw, run_lerrw, run_rwde, trace_rows

TRACE_HEADER = "replica,t,displacement,max_displacement,returns,censored"


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--version", action="version",
                     version=f"%(prog)s {__version__}")
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed (overrides config)")
    sub.add_argument("--threads", type=int,
                     default=int(os.environ.get("RW_THREADS", "1")),
                     help="worker budget; runs are serialized for "
                          "reproducibility so this only validates")
    sub.add_argument("--out", help="output path")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lerrw",
        description="Reinforced walks on critical trees: simulation, exact "
                    "checks, and Monte Carlo experiments.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    g = subs.add_parser("gen-tree", help="sample a conditioned tree as CSV")
    _add_common(g)
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--gamma", type=float, default=2.0)
    g.add_argument("--law", choices=("geometric", "stable"),
                   default="geometric")

    s = subs.add_parser("simulate", help="run one walker and write its trace")
    _add_common(s)
    s.add_argument("--walker", choices=("lerrw", "rwde", "ctrw"),
                   default="lerrw")
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--delta", type=float, default=1.0)
    s.add_argument("--gamma", type=float, default=2.0)
    s.add_argument("--law", choices=("geometric", "stable"),
                   default="geometric")
    s.add_argument("--n", type=int, default=200)
    s.add_argument("--horizon", type=float, default=10_000)
    s.add_argument("--mode", choices=("plain", "subcritical", "critical"),
                   default="plain")

    v = subs.add_parser("verify-oracle",
                        help="exact equality of the two path-probability "
                             "routes on every small tree")
    _add_common(v)
    v.add_argument("--max-n", type=int, default=5)
    v.add_argument("--max-len", type=int, default=6)

    m = subs.add_parser("moments",
                        help="closed-form ratio moments against quadrature")
    _add_common(m)
    m.add_argument("--k-max", type=int, default=4)
    m.add_argument("--tolerance", type=float, default=1e-8)

    e = subs.add_parser("experiment", help="run a configured experiment")
    _add_common(e)
    e.add_argument("--spec", "--config", dest="spec",
                   help="experiment config file (section.key = value)")
    e.add_argument("--scenario", choices=sorted(SCENARIOS))
    e.add_argument("--alpha", type=float)
    e.add_argument("--delta", type=float)
    e.add_argument("--gamma", type=float)
    e.add_argument("--n", type=int)
    e.add_argument("--horizon", type=int)
    e.add_argument("--replicas", type=int)

    r = subs.add_parser("report", help="render a text summary of a result")
    _add_common(r)
    r.add_argument("result", help="path of a persisted result (.csv/.json)")

    return parser


def _law_of(args) -> "object":
    if args.law == "geometric":
        return geometric_half()
    return stable_family(args.gamma)


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_gen_tree(args) -> int:
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    tree = sample_conditioned_gw(_law_of(args), args.n, rng)
    lines = ["vertex,parent,depth"]
    lines += [f"{v},{int(tree.parent[v])},{int(tree.depth[v])}"
              for v in range(tree.n)]
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _scheme_of(args, n: int, an: float) -> WeightScheme:
    if args.mode == "plain":
        return WeightScheme(alpha=args.alpha, delta=args.delta,
                            mode="plain_power")
    mode = ("rescaled_critical" if args.mode == "critical"
            else "rescaled_subcritical")
    return WeightScheme(alpha=args.alpha, delta=args.delta, mode=mode,
                        n=n, an=an)


def _cmd_simulate(args) -> int:
    seed = 0 if args.seed is None else args.seed
    law = _law_of(args)
    tree = sample_conditioned_gw(law, args.n,
                                 np.random.default_rng([seed, 1]))
    scheme = _scheme_of(args, args.n, scaling_an(law, args.n))
    rng = np.random.default_rng([seed, 2])
    cps = geometric_checkpoints(int(args.horizon))
    if args.walker == "lerrw":
        weights = initial_weights(scheme, tree)
        trace = run_lerrw(tree, weights, args.delta, int(args.horizon), rng,
                          checkpoints=cps, planted=True)
    else:
        params = dirichlet_params(initial_weights(scheme, tree), tree,
                                  args.delta)
        env = sample_environment(params, tree, np.random.default_rng([seed, 3]))
        if args.walker == "rwde":
            trace = run_rwde(env, int(args.horizon), rng, checkpoints=cps)
        else:
            trace = run_ctrw(env, float(args.horizon), rng, checkpoints=cps)
    lines = [TRACE_HEADER] + trace_rows(trace, 0)
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_verify_oracle(args) -> int:
    spec = ExperimentSpec("pemantle-equivalence",
                          {"max_vertices": args.max_n,
                           "path_length": args.max_len},
                          master_seed=0 if args.seed is None else args.seed)
    result = run(spec)
    for v in result.verdicts:
        state = "PASS" if v["passed"] else "FAIL"
        print(f"{state} {v['name']}: {v['value']} (tolerance {v['tolerance']})")
    if args.out:
        persist(result, args.out)
    return 0 if result.passed else 1


def _cmd_moments(args) -> int:
    rows = moment_table(k_max=args.k_max)
    print(f"{'a':>8} {'b':>8} {'k':>2} {'closed':>22} {'quadrature':>22} "
          f"{'rel_err':>10}")
    worst = 0.0
    for r in rows:
        worst = max(worst, r["rel_err"])
        print(f"{r['a']:8.3f} {r['b']:8.3f} {r['k']:2d} "
              f"{r['closed']:22.14e} {r['quadrature']:22.14e} "
              f"{r['rel_err']:10.2e}")
    ok = worst <= args.tolerance
    print(f"{'PASS' if ok else 'FAIL'} worst relative error {worst:.2e} "
          f"(tolerance {args.tolerance:.0e})")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("a,b,k,closed,quadrature,rel_err\n")
            for r in rows:
                fh.write(f"{r['a']},{r['b']},{r['k']},{r['closed']!r},"
                         f"{r['quadrature']!r},{r['rel_err']!r}\n")
    return 0 if ok else 1


_OVERRIDE_FLAGS = ("alpha", "delta", "gamma", "n", "horizon", "replicas")


def _cmd_experiment(args) -> int:
    if args.spec:
        spec = read_spec(args.spec)
    elif args.scenario:
        spec = ExperimentSpec(args.scenario, {})
    else:
        raise InvalidSpec("need --spec FILE or --scenario NAME")
    if args.scenario and args.spec and args.scenario != spec.scenario:
        raise InvalidSpec("--scenario disagrees with the config file")
    params = dict(spec.parameters)
    for flag in _OVERRIDE_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            if flag not in DEFAULTS[spec.scenario]:
                raise InvalidSpec(
                    f"--{flag} does not apply to {spec.scenario}")
            params[flag] = value
    spec.parameters = params
    if args.seed is not None:
        spec.master_seed = args.seed
    if args.out:
        spec.output_path = args.out
    spec.validate()
    result = run(spec)
    for v in result.verdicts:
        state = "PASS" if v["passed"] else "FAIL"
        print(f"{state} {v['name']}: value={v['value']} "
              f"target={v['target']} tolerance={v['tolerance']}")
    print(f"{'PASS' if result.passed else 'FAIL'} {result.scenario} "
          f"(seed {result.master_seed})")
    return 0 if result.passed else 1


def _cmd_report(args) -> int:
    result = load(args.result)
    lines = [
        f"scenario: {result.scenario}",
        f"master seed: {result.master_seed}",
        f"schema version: {result.schema_version}",
        "parameters: " + " ".join(
            f"{k}={v}" for k, v in sorted(result.parameters.items())),
    ]
    cols = result.columns
    nrows = len(next(iter(cols.values()))) if cols else 0
    lines.append(f"table: {len(cols)} columns x {nrows} rows "
                 f"({', '.join(cols)})")
    for v in result.verdicts:
        state = "PASS" if v["passed"] else "FAIL"
        lines.append(f"  {state} {v['name']}: value={v['value']} "
                     f"target={v['target']} tolerance={v['tolerance']}")
    for key in sorted(result.provenance):
        lines.append(f"provenance.{key}: {result.provenance[key]}")
    lines.append(f"overall: {'PASS' if result.passed else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    _write_or_print(text, args.out)
    return 0 if result.passed else 1


_COMMANDS = {
    "gen-tree": _cmd_gen_tree,
    "simulate": _cmd_simulate,
    "verify-oracle": _cmd_verify_oracle,
    "moments": _cmd_moments,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse --help/--version or usage error
        return int(exc.code or 0)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (InvalidSpec, IoError, OffspringError, TreeError,
            EnvironmentError_) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"run `lerrw {args.command} --help` for usage", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
