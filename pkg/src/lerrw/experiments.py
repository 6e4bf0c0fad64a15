"""Declarative Monte Carlo scenarios with deterministic seeding and persistence.

Each scenario maps a parameter dict to an ExperimentResult holding a checkpoint
table (CSV), declared verdicts with tolerances, and provenance. Results are
bitwise reproducible from (scenario, parameters, master_seed): replica seeds
derive from the master seed and the replica index alone, and aggregation is
order independent.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import stats as sps

from . import __version__
from ._kernels import annealed_displacement_run
from .environment import (
    WeightScheme,
    dirichlet_params,
    initial_weights,
    branch_limit_targets,
    rho_depth_params,
    sample_environment,
    transition_probs,
)
from .offspring import OffspringLaw, geometric_half, scaling_an, stable_family
from .oracle import (
    BASE,
    annealed_path_probability,
    enumerate_paths,
    enumerate_small,
    exact_exit_stats,
    lerrw_path_probability,
)
from .snake import sample_snake_matrix, snake_covariance
from .trees import (
    padded_contour_order,
    sample_conditioned_gw,
    tree_from_offspring_counts,
)
from .walkers import exit_time_ctrw

SCHEMA_VERSION = 1


class InvalidSpec(ValueError):
    pass


class SpecMismatch(ValueError):
    pass


class IoError(OSError):
    pass


class SchemaVersionMismatch(IoError):
    pass


# ---------------------------------------------------------------- spec layer


@dataclass
class ExperimentSpec:
    scenario: str
    parameters: dict
    master_seed: int = 0
    output_path: Optional[str] = None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise InvalidSpec(f"unknown scenario {self.scenario!r}")
        if not isinstance(self.master_seed, int):
            raise InvalidSpec("master_seed must be an integer")
        allowed = set(DEFAULTS[self.scenario])
        extra = set(self.parameters) - allowed
        if extra:
            raise InvalidSpec(f"unknown parameters {sorted(extra)} "
                              f"for {self.scenario}")
        merged = {**DEFAULTS[self.scenario], **self.parameters}
        reps = merged.get("replicas", 1)
        if not reps >= 1:
            raise InvalidSpec("replicas must be >= 1")
        if self.scenario == "potential-clt" and merged["alpha"] > 1:
            raise InvalidSpec("potential-clt needs alpha <= 1")


def _parse_value(raw: str):
    raw = raw.strip()
    if "," in raw:
        return tuple(_parse_value(p) for p in raw.split(","))
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            pass
    if raw.lower() in ("true", "false"):
        return raw.lower() == "true"
    return raw


def parse_spec_text(text: str) -> ExperimentSpec:
    """Flat `section.key = value` lines; sections: experiment, params."""
    scenario = None
    master_seed = 0
    output_path = None
    params: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidSpec(f"line {lineno}: expected key = value")
        key, raw = line.split("=", 1)
        key = key.strip()
        val = _parse_value(raw)
        if key == "experiment.scenario":
            scenario = str(val)
        elif key == "experiment.master_seed":
            master_seed = int(val)
        elif key == "experiment.output_path":
            output_path = str(val)
        elif key.startswith("params."):
            params[key[len("params."):]] = val
        else:
            raise InvalidSpec(f"line {lineno}: unknown key {key!r}")
    if scenario is None:
        raise InvalidSpec("experiment.scenario is required")
    spec = ExperimentSpec(scenario, params, master_seed, output_path)
    spec.validate()
    return spec


def read_spec(path: str) -> ExperimentSpec:
    try:
        with open(path) as fh:
            return parse_spec_text(fh.read())
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from exc


# ------------------------------------------------------------- result layer


@dataclass
class ExperimentResult:
    scenario: str
    parameters: dict
    master_seed: int
    columns: dict
    verdicts: list
    provenance: dict
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(v["passed"] for v in self.verdicts)


def verdict(name: str, value, target, tolerance, passed: bool,
            level: Optional[str] = None) -> dict:
    out = {"name": name, "value": value, "target": target,
           "tolerance": tolerance, "passed": bool(passed)}
    if level is not None:
        out["level"] = level
    return out


def _cell(x) -> str:
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return repr(x)
    return str(x)


def result_csv_text(result: ExperimentResult) -> str:
    cols = result.columns
    keys = list(cols)
    lines = [",".join(keys)]
    if keys:
        length = len(cols[keys[0]])
        for k in keys:
            if len(cols[k]) != length:
                raise InvalidSpec(f"column {k} length mismatch")
        for i in range(length):
            lines.append(",".join(_cell(cols[k][i]) for k in keys))
    return "\n".join(lines) + "\n"


def persist(result: ExperimentResult, path: str) -> None:
    """Write <path>.csv (checkpoint table) and <path>.json (metadata)."""
    base = _strip_ext(path)
    os.makedirs(os.path.dirname(os.path.abspath(base)), exist_ok=True)
    doc = {
        "schema_version": result.schema_version,
        "scenario": result.scenario,
        "parameters": _jsonable(result.parameters),
        "master_seed": result.master_seed,
        "verdicts": result.verdicts,
        "provenance": result.provenance,
        "column_order": list(result.columns),
    }
    try:
        with open(base + ".json", "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(base + ".csv", "w") as fh:
            fh.write(result_csv_text(result))
    except OSError as exc:
        raise IoError(str(exc)) from exc


def load(path: str) -> ExperimentResult:
    base = _strip_ext(path)
    try:
        with open(base + ".json") as fh:
            doc = json.load(fh)
        with open(base + ".csv") as fh:
            text = fh.read()
    except FileNotFoundError as exc:
        raise IoError(str(exc)) from exc
    if doc.get("schema_version", 0) > SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"result written by schema {doc['schema_version']}, "
            f"reader supports {SCHEMA_VERSION}")
    lines = [ln for ln in text.splitlines() if ln]
    keys = lines[0].split(",") if lines else []
    columns: dict = {k: [] for k in keys}
    for ln in lines[1:]:
        for k, cell in zip(keys, ln.split(",")):
            columns[k].append(_parse_cell(cell))
    return ExperimentResult(
        scenario=doc["scenario"], parameters=_tupled(doc["parameters"]),
        master_seed=doc["master_seed"], columns=columns,
        verdicts=doc["verdicts"], provenance=doc["provenance"],
        schema_version=doc["schema_version"])


def _strip_ext(path: str) -> str:
    for ext in (".csv", ".json"):
        if path.endswith(ext):
            return path[: -len(ext)]
    return path


def _parse_cell(cell: str):
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            pass
    return cell


def _jsonable(params: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}


def _tupled(params: dict) -> dict:
    return {k: tuple(v) if isinstance(v, list) else v for k, v in params.items()}


# ---------------------------------------------------------------- seeding


def scenario_rng(master_seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([master_seed, *key]))


def kernel_seed(master_seed: int, *key: int) -> int:
    ss = np.random.SeedSequence([master_seed, *key])
    return int(ss.generate_state(1, np.uint32)[0]) & 0x7FFFFFFF


# -------------------------------------------------------------- aggregation


def aggregate(partials: Sequence[dict]) -> dict:
    """Order-independent merge of per-replica checkpoint summaries.

    Each partial: {"spec_key", "replica", "values", optional "valid"} where
    values is a per-checkpoint vector and valid a boolean mask (False past a
    censoring time). Returns per-checkpoint count/mean/var/se/median plus the
    sorted value matrix for scenario-specific statistics.
    """
    if not partials:
        raise SpecMismatch("nothing to aggregate")
    keys = {p["spec_key"] for p in partials}
    if len(keys) != 1:
        raise SpecMismatch(f"mixed spec keys {sorted(keys)}")
    order = sorted(range(len(partials)),
                   key=lambda i: (partials[i]["replica"], i))
    vals = np.array([partials[i]["values"] for i in order], dtype=np.float64)
    valid = np.array([partials[i].get("valid", [True] * vals.shape[1])
                      for i in order], dtype=bool)
    m, k = vals.shape
    count = valid.sum(axis=0)
    mean = np.zeros(k)
    var = np.zeros(k)
    se = np.zeros(k)
    median = np.zeros(k)
    for j in range(k):
        col = vals[valid[:, j], j]
        if len(col) == 0:
            mean[j] = var[j] = se[j] = median[j] = math.nan
            continue
        mean[j] = col.mean()
        var[j] = col.var(ddof=1) if len(col) > 1 else 0.0
        se[j] = math.sqrt(var[j] / len(col))
        median[j] = float(np.median(col))
    return {
        "count": count, "mean": mean, "var": var, "se": se, "median": median,
        "matrix": vals, "valid": valid,
        "censored_fraction": 1.0 - float(count[-1]) / m if m else 0.0,
    }


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Least squares slope, intercept, slope standard error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xm, ym = x.mean(), y.mean()
    sxx = ((x - xm) ** 2).sum()
    slope = ((x - xm) * (y - ym)).sum() / sxx
    intercept = ym - slope * xm
    resid = y - intercept - slope * x
    dof = max(len(x) - 2, 1)
    slope_se = math.sqrt((resid**2).sum() / dof / sxx)
    return float(slope), float(intercept), float(slope_se)


# ---------------------------------------------------------------- scenarios


def _law(gamma: float, an_constant: float = 1.0,
         kind: str = "stable") -> OffspringLaw:
    if kind == "geometric":
        if gamma != 2.0:
            raise InvalidSpec("the geometric offspring family has gamma = 2")
        return geometric_half(an_constant)
    if kind != "stable":
        raise InvalidSpec(f"unknown offspring family {kind!r}")
    return stable_family(gamma, an_constant)


def _scheme(alpha: float, delta: float, n: int = 1, an: float = 1.0,
            rescaled: bool = False) -> WeightScheme:
    if not rescaled:
        return WeightScheme(alpha=alpha, delta=delta, mode="plain_power")
    mode = "rescaled_critical" if alpha == 1.0 else "rescaled_subcritical"
    return WeightScheme(alpha=alpha, delta=delta, mode=mode, n=n, an=an)


def _stable2_tree(n: int, rng: np.random.Generator):
    """Exact conditioned gamma=2 tree in O(n): the offspring multiset is
    (n-1)/2 twos and (n+1)/2 zeros, uniformly arranged."""
    if n % 2 == 0:
        raise InvalidSpec("stable gamma=2 trees need odd n")
    ks = np.zeros(n, dtype=np.int64)
    ks[: (n - 1) // 2] = 2
    rng.shuffle(ks)
    return tree_from_offspring_counts(ks)


def _sample_tree(law: OffspringLaw, n: int, rng: np.random.Generator):
    if law.kind == "stable_family" and law.gamma == 2.0:
        return _stable2_tree(n, rng)
    return sample_conditioned_gw(law, n, rng)


def run_pemantle_equivalence(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    grid = [Fraction(w).limit_denominator(10**6) for w in p["weight_grid"]]
    deltas = [Fraction(d).limit_denominator(10**6) for d in p["deltas"]]
    cols = {"tree_size": [], "tree_index": [], "configs": [], "paths": [],
            "mismatches": [], "normalization_failures": []}
    mism = norm_bad = 0
    for n in range(1, p["max_vertices"] + 1):
        for ti, tree in enumerate(enumerate_small(n)):
            paths_by_len = {L: enumerate_paths(tree, L)
                            for L in range(1, p["path_length"] + 1)}
            configs = 0
            for assign in product(grid, repeat=n - 1):
                weights = {v + 1: w for v, w in enumerate(assign)}
                for delta in deltas:
                    configs += 1
                    for L, paths in paths_by_len.items():
                        total = Fraction(0)
                        for path in paths:
                            a = lerrw_path_probability(tree, path, delta, weights)
                            b = annealed_path_probability(tree, path, delta, weights)
                            if a != b:
                                mism += 1
                            total += a
                        if paths and total != 1:
                            norm_bad += 1
            cols["tree_size"].append(n)
            cols["tree_index"].append(ti)
            cols["configs"].append(configs)
            cols["paths"].append(sum(len(v) for v in paths_by_len.values()))
            cols["mismatches"].append(mism)
            cols["normalization_failures"].append(norm_bad)
    verdicts = [
        verdict("route_equality_mismatches", mism, 0, 0, mism == 0,
                level="exact"),
        verdict("path_normalization_failures", norm_bad, 0, 0, norm_bad == 0,
                level="exact"),
    ]
    prov = _provenance(spec, extra={"censored_fraction": 0.0})
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def _potential_samples(scheme: WeightScheme, depth: int, m: int,
                       rng: np.random.Generator) -> np.ndarray:
    """m draws of V at a depth-`depth` vertex: independent log-ratio
    increments per generation along the root path."""
    v = np.zeros(m)
    for j in range(1, depth + 1):
        a, b = rho_depth_params(j, scheme)
        v += np.log(rng.gamma(a, size=m)) - np.log(rng.gamma(b, size=m))
    return v


def run_potential_clt(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    alpha, delta, gamma, n = p["alpha"], p["delta"], p["gamma"], int(p["n"])
    m = int(p["replicas"])
    law = _law(gamma, p["an_constant"], p["law"])
    an = scaling_an(law, n)
    scheme = _scheme(alpha, delta, n=n, an=an, rescaled=True)
    ratio = scheme.ratio
    d_target = max(1, round(ratio * p["target_continuum_depth"]))
    tree = None
    tree_attempt = -1
    for attempt in range(int(p["max_tree_seeds"])):
        cand = _sample_tree(law, n, scenario_rng(spec.master_seed, 1, attempt))
        if cand.height >= d_target:
            tree, tree_attempt = cand, attempt
            break
    if tree is None:
        raise InvalidSpec(f"no tree of height >= {d_target} found in "
                          f"{p['max_tree_seeds']} seeds")
    order = padded_contour_order(tree)
    eval_vertices = []
    for t in p["t_grid"]:
        v = int(order[int(math.floor(2 * n * t))])
        eval_vertices.append((float(t), v))
    star = int(np.nonzero(tree.depth == d_target)[0][0])
    eval_vertices.append((-1.0, star))  # depth-matched evaluation point

    cols = {"contour_t": [], "vertex": [], "depth": [], "continuum_depth": [],
            "mean_W": [], "var_W": [], "skew": [], "kurtosis": [],
            "mean_target": [], "var_target": [], "count": []}
    star_stats = None
    for idx, (t, v) in enumerate(eval_vertices):
        depth = int(tree.depth[v])
        if depth == 0:
            continue
        samples = _potential_samples(
            scheme, depth, m, scenario_rng(spec.master_seed, 2, idx))
        w = samples if alpha == 1.0 else samples + alpha * math.log(depth)
        d_cont = depth / ratio
        mt, vt = branch_limit_targets(scheme, d_cont)
        mu, var = float(w.mean()), float(w.var(ddof=1))
        z = (w - mu) / math.sqrt(var)
        skew, kurt = float((z**3).mean()), float((z**4).mean() - 3.0)
        cols["contour_t"].append(t)
        cols["vertex"].append(v)
        cols["depth"].append(depth)
        cols["continuum_depth"].append(d_cont)
        cols["mean_W"].append(mu)
        cols["var_W"].append(var)
        cols["skew"].append(skew)
        cols["kurtosis"].append(kurt)
        cols["mean_target"].append(mt)
        cols["var_target"].append(vt)
        cols["count"].append(m)
        if v == star and t == -1.0:
            star_stats = (mu, var, skew, mt, vt)
    mu, var, skew, mt, vt = star_stats
    tol = p["relative_tolerance"]
    verdicts = [
        verdict("mean_W_relative", mu / mt - 1.0, 0.0, tol,
                abs(mu / mt - 1.0) <= tol),
        verdict("var_W_relative", var / vt - 1.0, 0.0, tol,
                abs(var / vt - 1.0) <= tol),
        verdict("skewness_abs", abs(skew), 0.0, p["skew_tolerance"],
                abs(skew) <= p["skew_tolerance"]),
    ]
    prov = _provenance(spec, extra={
        "censored_fraction": 0.0, "tree_seed_attempt": tree_attempt,
        "tree_height": int(tree.height), "depth_target": d_target,
    })
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def run_snake_covariance(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    alpha, rescale, n, m = p["alpha"], p["rescale"], int(p["n"]), int(p["replicas"])
    tree = sample_conditioned_gw(geometric_half(), n,
                                 scenario_rng(spec.master_seed, 1))
    exact = snake_covariance(tree, rescale, alpha)
    phi = sample_snake_matrix(tree, rescale, alpha, m,
                              scenario_rng(spec.master_seed, 2))
    emp = np.cov(phi, rowvar=False)
    var = np.diag(exact)
    se = np.sqrt((np.outer(var, var) + exact**2) / m)
    cols = {"u": [], "v": [], "exact": [], "empirical": [], "se": [],
            "z": []}
    worst = 0.0
    for u in range(n):
        for v in range(u, n):
            s = float(se[u, v])
            z = 0.0 if s == 0.0 else abs(float(emp[u, v] - exact[u, v])) / s
            worst = max(worst, z)
            cols["u"].append(u)
            cols["v"].append(v)
            cols["exact"].append(float(exact[u, v]))
            cols["empirical"].append(float(emp[u, v]))
            cols["se"].append(s)
            cols["z"].append(z)
    zmax = p["z_max"]
    verdicts = [verdict("covariance_max_z", worst, 0.0, zmax, worst <= zmax)]
    prov = _provenance(spec, extra={"censored_fraction": 0.0, "samples": m})
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def _exact_rows(env, non_boundary: Iterable[int]) -> dict:
    offs, nbr, probs = transition_probs(env)
    rows: dict = {}
    for v in non_boundary:
        row = {int(nbr[offs[v] + i]): Fraction(float(probs[offs[v] + i]))
               for i in range(int(offs[v + 1] - offs[v]))}
        last = max(row)
        row[last] += 1 - sum(row.values())
        rows[v] = row
    return rows


def run_greens_exit(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    n, runs = int(p["n"]), int(p["runs"])
    scheme = _scheme(p["alpha"], p["delta"])
    cols = {"env": [], "leaves": [], "exact": [], "empirical": [], "se": [],
            "z": []}
    worst = 0.0
    for i in range(int(p["num_envs"])):
        tree = sample_conditioned_gw(geometric_half(), n,
                                     scenario_rng(spec.master_seed, 1, i))
        params = dirichlet_params(initial_weights(scheme, tree), tree,
                                  scheme.delta)
        env = sample_environment(params, tree,
                                 scenario_rng(spec.master_seed, 2, i))
        leaves = {v for v in range(n) if tree.num_children(v) == 0}
        rows = _exact_rows(env, [v for v in range(n) if v not in leaves])
        rows[BASE] = {0: Fraction(1)}
        holding = {v: Fraction(1) for v in range(n) if v not in leaves}
        stats = exact_exit_stats(tree, rows, boundary=leaves, start=0,
                                 holding=holding)
        rng = scenario_rng(spec.master_seed, 3, i)
        times = np.array([exit_time_ctrw(env, leaves, rng)
                          for _ in range(runs)])
        se = float(times.std(ddof=1) / math.sqrt(runs))
        exact = float(stats.expected_duration)
        z = abs(float(times.mean()) - exact) / se
        worst = max(worst, z)
        cols["env"].append(i)
        cols["leaves"].append(len(leaves))
        cols["exact"].append(exact)
        cols["empirical"].append(float(times.mean()))
        cols["se"].append(se)
        cols["z"].append(z)
    zmax = p["z_max"]
    verdicts = [verdict("exit_time_max_z", worst, 0.0, zmax, worst <= zmax)]
    prov = _provenance(spec, extra={"censored_fraction": 0.0})
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def run_recurrence_transience(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    law = _law(p["gamma"])
    horizons = np.array(sorted(int(h) for h in p["horizons"]), dtype=np.int64)
    reps = int(p["replicas"])
    cols = {"alpha": [], "t": [], "median_returns": [], "mean_returns": [],
            "count": [], "censored_fraction": [],
            "returned_after_fraction": []}
    verdicts = []
    for ai, alpha in enumerate(p["alphas"]):
        scheme = _scheme(alpha, p["delta"])
        partials = []
        after = []
        for r in range(reps):
            out = annealed_displacement_run(
                law, scheme, int(horizons[-1]), horizons,
                kernel_seed(spec.master_seed, ai, r),
                depth_limit=int(p["depth_limit"]),
                observe_radius=int(p["observe_radius"]),
                cap_vertices=1 << 17, cap_slots=1 << 18,
                max_table_depth=int(p["depth_limit"]) + 2)
            cens = out["censor_time"]
            valid = [cens is None or int(t) <= cens for t in horizons]
            partials.append({"spec_key": f"rt-{alpha}", "replica": r,
                             "values": out["returns"], "valid": valid})
            after.append(out["returned_after_observe_radius"])
        agg = aggregate(partials)
        frac_after = float(np.mean(after))
        for j, t in enumerate(horizons):
            cols["alpha"].append(float(alpha))
            cols["t"].append(int(t))
            cols["median_returns"].append(float(agg["median"][j]))
            cols["mean_returns"].append(float(agg["mean"][j]))
            cols["count"].append(int(agg["count"][j]))
            cols["censored_fraction"].append(
                1.0 - int(agg["count"][j]) / reps)
            cols["returned_after_fraction"].append(frac_after)
        med = agg["median"]
        if alpha <= 1.0:
            diffs = np.diff(med)
            verdicts.append(verdict(
                f"median_returns_strictly_increasing_alpha_{alpha}",
                float(diffs.min()), "positive", 0.0, bool((diffs > 0).all())))
        if alpha > 1.5:
            verdicts.append(verdict(
                f"return_after_radius_fraction_alpha_{alpha}", frac_after,
                "< 0.5", 0.5, frac_after < 0.5))
    prov = _provenance(spec, extra={})
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def _geometric_checkpoints_int(horizon: int) -> np.ndarray:
    ks = []
    t = 1
    while t < horizon:
        ks.append(t)
        t *= 2
    ks.append(horizon)
    return np.array(ks, dtype=np.int64)


def _displacement_scenario(spec: ExperimentSpec, fit: str) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    alpha, delta, gamma = p["alpha"], p["delta"], p["gamma"]
    horizon, reps = int(p["horizon"]), int(p["replicas"])
    law = _law(gamma)
    scheme = _scheme(alpha, delta)
    cps = _geometric_checkpoints_int(horizon)
    partials = []
    for r in range(reps):
        out = annealed_displacement_run(
            law, scheme, horizon, cps, kernel_seed(spec.master_seed, 0, r),
            cap_vertices=int(p["cap_vertices"]),
            cap_slots=2 * int(p["cap_vertices"]))
        partials.append({"spec_key": spec.scenario, "replica": r,
                         "values": out["max_displacement"]})
    agg = aggregate(partials)
    med = agg["median"]
    cols = {"t": [int(t) for t in cps],
            "median_max_displacement": [float(x) for x in med],
            "mean_max_displacement": [float(x) for x in agg["mean"]],
            "se": [float(x) for x in agg["se"]],
            "count": [int(c) for c in agg["count"]],
            "speed_proxy": [float(x / t) for x, t in zip(med, cps)]}
    tail = cps >= max(horizon // 100, 2)
    tt, mm = cps[tail].astype(np.float64), med[tail]
    verdicts = []
    if fit == "recurrent":
        x = np.log(tt) ** (1.0 / (1.0 - alpha))
        slope, intercept, slope_se = _ols(x, mm)
        target = ((1.0 - alpha) / delta) ** (1.0 / (1.0 - alpha))
    else:
        x = np.log(tt)
        slope, intercept, slope_se = _ols(x, np.log(mm))
        if fit == "critical":
            target = min((gamma - 1.0) / (2.0 * gamma - 1.0), 1.0 / delta)
        else:
            target = (2.0 * gamma - 1.0) / (2.0 * gamma)
    cens = agg["censored_fraction"]
    verdicts.append(verdict("censored_fraction", cens, 0.0, 0.01,
                            cens < 0.01))
    band = p.get("fit_band")
    if band:
        lo, hi = band
        verdicts.append(verdict("fit_in_band", slope, target, [lo, hi],
                                lo <= slope <= hi, level="absolute band"))
    if fit == "transient":
        sp = cols["speed_proxy"]
        lastk = int(p["tail_checkpoints"])
        # evaluate monotonicity on the doubling ladder only; the appended
        # horizon checkpoint can sit arbitrarily close to the last power of 2
        geo = [sp[i] for i, t in enumerate(cps) if int(t) & (int(t) - 1) == 0]
        tail_sp = geo[-lastk:]
        decreasing = all(a > b for a, b in zip(tail_sp, tail_sp[1:]))
        verdicts.append(verdict("speed_proxy_final", sp[-1], 0.0,
                                p["speed_max"], sp[-1] < p["speed_max"]))
        verdicts.append(verdict("speed_proxy_tail_decreasing",
                                float(tail_sp[-1] - tail_sp[0]), "negative",
                                0.0, decreasing))
        verdicts.append(verdict("growth_exponent_ceiling", slope, target,
                                p["exponent_slack"],
                                slope <= target + p["exponent_slack"]))
    prov = _provenance(spec, extra={
        "fit_kind": fit, "fit_slope": slope, "fit_intercept": intercept,
        "fit_slope_se": slope_se, "fit_slope_ci95":
            [slope - 1.96 * slope_se, slope + 1.96 * slope_se],
        "ci_level": 0.95, "fit_target": target,
        "censored_fraction": cens,
    })
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def run_displacement_recurrent(spec: ExperimentSpec) -> ExperimentResult:
    if {**DEFAULTS[spec.scenario], **spec.parameters}["alpha"] >= 1:
        raise InvalidSpec("displacement-recurrent needs alpha < 1")
    return _displacement_scenario(spec, "recurrent")


def run_displacement_critical(spec: ExperimentSpec) -> ExperimentResult:
    if {**DEFAULTS[spec.scenario], **spec.parameters}["alpha"] != 1.0:
        raise InvalidSpec("displacement-critical needs alpha = 1")
    return _displacement_scenario(spec, "critical")


def run_displacement_transient(spec: ExperimentSpec) -> ExperimentResult:
    if {**DEFAULTS[spec.scenario], **spec.parameters}["alpha"] <= 1:
        raise InvalidSpec("displacement-transient needs alpha > 1")
    return _displacement_scenario(spec, "transient")


def run_measure_stability(spec: ExperimentSpec) -> ExperimentResult:
    p = {**DEFAULTS[spec.scenario], **spec.parameters}
    alpha, delta, gamma = p["alpha"], p["delta"], p["gamma"]
    reps = int(p["replicas"])
    law = _law(gamma, p["an_constant"], p["law"])
    samples = {}
    cols = {"n": [], "mean": [], "se": [], "q25": [], "median": [], "q75": [],
            "count": []}
    for si, n in enumerate(p["sizes"]):
        n = int(n)
        an = scaling_an(law, n)
        scheme = _scheme(alpha, delta, n=n, an=an, rescaled=True)
        ratio = scheme.ratio
        c_n = (1.0 / (2 * n) if alpha == 1.0
               else ratio ** (-alpha) / (2 * n))
        vals = np.zeros(reps)
        for r in range(reps):
            tree = _sample_tree(law, n, scenario_rng(spec.master_seed, si, r, 1))
            params = dirichlet_params(initial_weights(scheme, tree), tree,
                                      delta)
            env = sample_environment(params, tree,
                                     scenario_rng(spec.master_seed, si, r, 2))
            vals[r] = c_n * float(env.nu.sum())
        samples[n] = vals
        q25, q50, q75 = np.percentile(vals, [25, 50, 75])
        cols["n"].append(n)
        cols["mean"].append(float(vals.mean()))
        cols["se"].append(float(vals.std(ddof=1) / math.sqrt(reps)))
        cols["q25"].append(float(q25))
        cols["median"].append(float(q50))
        cols["q75"].append(float(q75))
        cols["count"].append(reps)
    ns = sorted(samples)
    ks_stats = {}
    for a, b in zip(ns, ns[1:]):
        ks_stats[f"{a}->{b}"] = float(sps.ks_2samp(samples[a], samples[b]).statistic)
    verdicts = [verdict("ladder_complete", len(ns), len(p["sizes"]), 0,
                        len(ns) == len(p["sizes"]))]
    ks_max = p.get("ks_max")
    if ks_max:
        worst = max(ks_stats.values())
        verdicts.append(verdict("ks_consecutive_max", worst, 0.0, ks_max,
                                worst <= ks_max))
    prov = _provenance(spec, extra={"censored_fraction": 0.0,
                                    "ks_statistics": ks_stats})
    return ExperimentResult(spec.scenario, p, spec.master_seed, cols,
                            verdicts, prov)


def beta_prime_quadrature_moment(a: float, b: float, k: int) -> float:
    """k-th moment of the beta-prime(a, b) density by adaptive quadrature."""
    from scipy.integrate import quad
    from scipy.special import betaln

    norm = math.exp(betaln(a, b))
    val, _ = quad(lambda x: x ** (k + a - 1.0) * (1.0 + x) ** (-a - b),
                  0.0, math.inf, epsabs=0.0, epsrel=1e-11, limit=200)
    return val / norm


MOMENT_GRID = tuple((a, b) for a in (0.6, 1.3, 2.7, 5.5, 11.0)
                    for b in (5.2, 7.9, 13.4, 26.8))


def moment_table(grid: Sequence[tuple[float, float]] = MOMENT_GRID,
                 k_max: int = 4) -> list[dict]:
    """Closed-form beta-prime moments against quadrature on an (a, b) grid."""
    from .environment import beta_prime_moments

    rows = []
    for a, b in grid:
        for k in range(1, k_max + 1):
            closed = beta_prime_moments(a, b, k)
            quadr = beta_prime_quadrature_moment(a, b, k)
            rows.append({"a": a, "b": b, "k": k, "closed": closed,
                         "quadrature": quadr,
                         "rel_err": abs(quadr / closed - 1.0)})
    return rows


def _provenance(spec: ExperimentSpec, extra: dict) -> dict:
    prov = {
        "package_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "scenario": spec.scenario,
        "master_seed": spec.master_seed,
    }
    prov.update(extra)
    return prov


DEFAULTS: dict[str, dict] = {
    "pemantle-equivalence": {
        "max_vertices": 5, "path_length": 6,
        "deltas": (0.5, 1.0), "weight_grid": (0.5, 1.0, 2.0),
    },
    "potential-clt": {
        "alpha": 0.0, "delta": 1.0, "gamma": 2.0, "law": "geometric",
        "n": 10**6, "replicas": 20000, "t_grid": (0.2, 0.5, 0.8),
        "target_continuum_depth": 1.0, "an_constant": 1.0,
        "max_tree_seeds": 64, "relative_tolerance": 0.10,
        "skew_tolerance": 0.10,
    },
    "snake-covariance": {
        "alpha": 0.5, "rescale": 0.25, "n": 20, "replicas": 100_000,
        "z_max": 4.0,
    },
    "greens-exit": {
        "alpha": 1.0, "delta": 1.0, "n": 30, "num_envs": 10, "runs": 10_000,
        "z_max": 3.0,
    },
    "recurrence-transience": {
        "alphas": (0.0, 0.5, 1.0, 1.5, 2.0), "delta": 1.0, "gamma": 2.0,
        "horizons": (10**4, 10**5, 10**6), "replicas": 200,
        "depth_limit": 1000, "observe_radius": 50,
    },
    "displacement-recurrent": {
        "alpha": 0.0, "delta": 1.0, "gamma": 2.0, "horizon": 10**7,
        "replicas": 200, "cap_vertices": 1 << 18, "fit_band": None,
    },
    "displacement-critical": {
        "alpha": 1.0, "delta": 1.0, "gamma": 2.0, "horizon": 10**7,
        "replicas": 200, "cap_vertices": 1 << 19, "fit_band": None,
    },
    "displacement-transient": {
        "alpha": 2.0, "delta": 1.0, "gamma": 2.0, "horizon": 10**7,
        "replicas": 200, "cap_vertices": 1 << 20, "fit_band": None,
        "speed_max": 0.2, "tail_checkpoints": 3, "exponent_slack": 0.10,
    },
    "measure-stability": {
        "alpha": 0.5, "delta": 1.0, "gamma": 2.0, "law": "stable",
        "sizes": (501, 1001, 2001), "replicas": 200, "an_constant": 1.0,
        "ks_max": None,
    },
}

SCENARIOS = {
    "pemantle-equivalence": run_pemantle_equivalence,
    "potential-clt": run_potential_clt,
    "snake-covariance": run_snake_covariance,
    "greens-exit": run_greens_exit,
    "recurrence-transience": run_recurrence_transience,
    "displacement-recurrent": run_displacement_recurrent,
    "displacement-critical": run_displacement_critical,
    "displacement-transient": run_displacement_transient,
    "measure-stability": run_measure_stability,
}


def run(spec: ExperimentSpec) -> ExperimentResult:
    spec.validate()
    result = SCENARIOS[spec.scenario](spec)
    if spec.output_path:
        persist(result, spec.output_path)
    return result
