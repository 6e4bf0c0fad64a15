import math

import numpy as np
import pytest

from lerrw.experiments import (
    DEFAULTS,
    ExperimentSpec,
    InvalidSpec,
    IoError,
    SCHEMA_VERSION,
    SchemaVersionMismatch,
    SpecMismatch,
    _ols,
    aggregate,
    kernel_seed,
    load,
    parse_spec_text,
    persist,
    result_csv_text,
    run,
    scenario_rng,
)

SPEC_TEXT = """
# comment lines and blanks are skipped
experiment.scenario = snake-covariance
experiment.master_seed = 42

params.n = 8
params.replicas = 500
params.alpha = 0.5
"""


def test_parse_spec_text():
    spec = parse_spec_text(SPEC_TEXT)
    assert spec.scenario == "snake-covariance"
    assert spec.master_seed == 42
    assert spec.parameters == {"n": 8, "replicas": 500, "alpha": 0.5}


def test_parse_spec_tuple_value():
    spec = parse_spec_text(
        "experiment.scenario = recurrence-transience\n"
        "params.alphas = 0.0,1.0,2.0\n"
        "params.horizons = 100,1000\n")
    assert spec.parameters["alphas"] == (0.0, 1.0, 2.0)
    assert spec.parameters["horizons"] == (100, 1000)


@pytest.mark.parametrize("text", [
    "params.n = 5",                                     # scenario missing
    "experiment.scenario = no-such-thing",
    "experiment.scenario = snake-covariance\nbogus line",
    "experiment.scenario = snake-covariance\nwrong.key = 1",
    "experiment.scenario = snake-covariance\nparams.unknown = 1",
    "experiment.scenario = snake-covariance\nparams.replicas = 0",
])
def test_parse_spec_rejects(text):
    with pytest.raises(InvalidSpec):
        parse_spec_text(text)


def test_spec_validate_scenario_constraints():
    with pytest.raises(InvalidSpec):
        ExperimentSpec("potential-clt", {"alpha": 2.0}).validate()
    with pytest.raises(InvalidSpec):
        run(ExperimentSpec("displacement-recurrent", {"alpha": 1.0}))
    with pytest.raises(InvalidSpec):
        run(ExperimentSpec("displacement-critical", {"alpha": 0.5}))
    with pytest.raises(InvalidSpec):
        run(ExperimentSpec("displacement-transient", {"alpha": 1.0}))


def test_defaults_cover_all_scenarios():
    from lerrw.experiments import SCENARIOS

    assert set(SCENARIOS) == set(DEFAULTS)


# ---------------------------------------------------------------- aggregate


def _partials():
    return [
        {"spec_key": "k", "replica": 0, "values": [1.0, 2.0, 3.0]},
        {"spec_key": "k", "replica": 1, "values": [2.0, 4.0, 6.0],
         "valid": [True, True, False]},
        {"spec_key": "k", "replica": 2, "values": [3.0, 6.0, 9.0]},
    ]


def test_aggregate_masks_censored_checkpoints():
    agg = aggregate(_partials())
    assert list(agg["count"]) == [3, 3, 2]
    assert agg["mean"][2] == pytest.approx(6.0)   # replica 1 excluded
    assert agg["median"][1] == pytest.approx(4.0)
    assert agg["censored_fraction"] == pytest.approx(1 / 3)


def test_aggregate_order_independent():
    a = aggregate(_partials())
    b = aggregate(list(reversed(_partials())))
    for key in ("count", "mean", "var", "se", "median"):
        assert np.array_equal(a[key], b[key])


def test_aggregate_rejects_mixed_keys():
    parts = _partials()
    parts[1]["spec_key"] = "other"
    with pytest.raises(SpecMismatch):
        aggregate(parts)
    with pytest.raises(SpecMismatch):
        aggregate([])


def test_aggregate_all_invalid_checkpoint_is_nan():
    parts = [{"spec_key": "k", "replica": 0, "values": [1.0],
              "valid": [False]}]
    agg = aggregate(parts)
    assert math.isnan(agg["mean"][0])
    assert agg["count"][0] == 0


def test_ols_recovers_exact_line():
    x = np.arange(8, dtype=float)
    slope, intercept, se = _ols(x, 3.0 * x - 1.0)
    assert slope == pytest.approx(3.0)
    assert intercept == pytest.approx(-1.0)
    assert se == pytest.approx(0.0, abs=1e-12)


def test_seed_streams_are_deterministic():
    assert kernel_seed(5, 1, 2) == kernel_seed(5, 1, 2)
    assert kernel_seed(5, 1, 2) != kernel_seed(5, 1, 3)
    a = scenario_rng(5, 7).standard_normal(4)
    b = scenario_rng(5, 7).standard_normal(4)
    assert np.array_equal(a, b)


# ------------------------------------------------------------- persistence


def _small_result():
    return run(ExperimentSpec("snake-covariance", {"n": 6, "replicas": 800}, 11))


def test_persist_load_round_trip(tmp_path):
    r = _small_result()
    base = str(tmp_path / "out")
    persist(r, base)
    r2 = load(base + ".csv")  # either extension resolves to the pair
    assert r2.scenario == r.scenario
    assert r2.columns == r.columns
    assert r2.verdicts == r.verdicts
    assert r2.parameters == r.parameters
    assert r2.schema_version == SCHEMA_VERSION


def test_load_missing_raises_io_error(tmp_path):
    with pytest.raises(IoError):
        load(str(tmp_path / "nope"))


def test_load_newer_schema_rejected(tmp_path):
    r = _small_result()
    base = str(tmp_path / "out")
    persist(r, base)
    text = (tmp_path / "out.json").read_text()
    (tmp_path / "out.json").write_text(
        text.replace(f'"schema_version": {SCHEMA_VERSION}',
                     '"schema_version": 999'))
    with pytest.raises(SchemaVersionMismatch):
        load(base)


def test_same_spec_same_bytes():
    specs = [ExperimentSpec("snake-covariance", {"n": 7, "replicas": 600}, 3)
             for _ in range(2)]
    texts = [result_csv_text(run(s)) for s in specs]
    assert texts[0] == texts[1]
    other = result_csv_text(
        run(ExperimentSpec("snake-covariance", {"n": 7, "replicas": 600}, 4)))
    assert other != texts[0]


# ---------------------------------------------------------- tiny scenarios


def test_pemantle_equivalence_small():
    r = run(ExperimentSpec("pemantle-equivalence",
                           {"max_vertices": 3, "path_length": 4}, 1))
    assert r.passed
    assert r.columns["mismatches"][-1] == 0
    assert r.columns["normalization_failures"][-1] == 0
    assert sum(r.columns["paths"]) > 0


def test_snake_covariance_small():
    r = run(ExperimentSpec("snake-covariance", {"n": 6, "replicas": 4000}, 11))
    assert r.passed
    diag = [row for row in zip(r.columns["u"], r.columns["v"],
                               r.columns["exact"]) if row[0] == row[1] == 0]
    assert diag[0][2] == 0.0  # root marginal is pinned at zero


def test_greens_exit_small():
    r = run(ExperimentSpec("greens-exit",
                           {"n": 8, "num_envs": 2, "runs": 1500}, 3))
    assert r.passed
    assert all(e > 0 for e in r.columns["exact"])


def test_potential_clt_small():
    # skew SE at 2000 samples is sqrt(6/2000) ~ 0.055, so loosen both bands
    r = run(ExperimentSpec("potential-clt",
                           {"n": 2001, "replicas": 2000, "alpha": 0.0,
                            "relative_tolerance": 0.25,
                            "skew_tolerance": 0.3}, 13))
    assert r.passed
    assert r.provenance["tree_height"] >= r.provenance["depth_target"]
    star_rows = [i for i, t in enumerate(r.columns["contour_t"]) if t == -1.0]
    assert len(star_rows) == 1
    d = r.columns["depth"][star_rows[0]]
    assert d == r.provenance["depth_target"]


def test_recurrence_transience_small():
    r = run(ExperimentSpec(
        "recurrence-transience",
        {"alphas": (0.0, 2.0), "replicas": 30,
         "horizons": (500, 5000, 50000), "depth_limit": 200}, 17))
    names = {v["name"] for v in r.verdicts}
    assert "median_returns_strictly_increasing_alpha_0.0" in names
    assert "return_after_radius_fraction_alpha_2.0" in names
    assert r.passed


def test_displacement_small_each_regime():
    common = {"horizon": 2**14, "replicas": 40, "cap_vertices": 1 << 15}
    r = run(ExperimentSpec("displacement-recurrent", common, 23))
    assert r.provenance["fit_kind"] == "recurrent"
    assert r.columns["t"][-1] == 2**14
    assert [v["name"] for v in r.verdicts] == ["censored_fraction"]

    r = run(ExperimentSpec("displacement-critical",
                           {**common, "fit_band": (0.0, 1.0)}, 23))
    assert any(v["name"] == "fit_in_band" for v in r.verdicts)

    r = run(ExperimentSpec("displacement-transient", common, 23))
    names = [v["name"] for v in r.verdicts]
    assert "speed_proxy_final" in names
    assert "speed_proxy_tail_decreasing" in names
    assert "growth_exponent_ceiling" in names
    sp = r.columns["speed_proxy"]
    assert sp[-1] < sp[0]


def test_measure_stability_small():
    r = run(ExperimentSpec("measure-stability",
                           {"sizes": (51, 101), "replicas": 50}, 5))
    assert r.passed
    assert "51->101" in r.provenance["ks_statistics"]
    ks = r.provenance["ks_statistics"]["51->101"]
    assert 0.0 <= ks <= 1.0
    assert all(m > 0 for m in r.columns["mean"])


def test_output_path_writes_files(tmp_path):
    out = str(tmp_path / "res")
    run(ExperimentSpec("snake-covariance", {"n": 6, "replicas": 500}, 9,
                       output_path=out))
    assert (tmp_path / "res.csv").exists()
    assert (tmp_path / "res.json").exists()
