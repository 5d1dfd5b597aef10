import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modal_attrib.attribution import (
    BetaSummary,
    beeswarm_export,
    beta_from_beeswarm,
    beta_shap,
    centered_weights,
    importance_ranking,
    read_jsonl,
    write_jsonl,
)
from modal_attrib.errors import ConfigError, JoinError, SchemaError
from modal_attrib.shapley import ShapResult

from conftest import make_table


def shap_for(table, phi, names=None):
    return ShapResult(0.0, np.asarray(phi, dtype=float), list(table.row_ids), names or table.feature_names)


def test_hand_computed_beta():
    table = make_table([[75.0], [25.0], [50.0], [100.0]], np.zeros(4))
    res = shap_for(table, [[2.0], [-1.0], [3.0], [0.5]])
    assert beta_shap(res, table, n_boot=0).features[0].beta_shap == 0.25
    assert beta_shap(res, table, normalization="sum", n_boot=0).features[0].beta_shap == 1.0


def test_two_point_feature():
    table = make_table([[0.0], [100.0]] * 5, np.zeros(10))
    aligned = shap_for(table, [[-1.0], [1.0]] * 5)
    assert beta_shap(aligned, table, n_boot=0).features[0].beta_shap == 0.5
    constant = shap_for(table, [[3.0]] * 10)
    assert beta_shap(constant, table, n_boot=0).features[0].beta_shap == 0.0


def test_feature_constant_at_50_gives_zero():
    table = make_table(np.full((7, 1), 50.0), np.zeros(7))
    res = shap_for(table, np.random.default_rng(0).normal(size=(7, 1)))
    summary = beta_shap(res, table, n_boot=200)
    f = summary.features[0]
    assert f.beta_shap == 0.0
    assert f.ci_lo == 0.0 and f.ci_hi == 0.0


def test_centering_modes():
    x = np.array([0.0, 50.0, 100.0, 100.0])
    np.testing.assert_array_equal(centered_weights(x, "half"), [-0.5, 0.0, 0.5, 0.5])
    np.testing.assert_array_equal(centered_weights(x, "median"), [-0.75, -0.25, 0.25, 0.25])
    assert abs(centered_weights(x, "mean").mean()) < 1e-15
    with pytest.raises(ConfigError):
        centered_weights(x, "mode")


def test_bootstrap_interval_contains_point_and_is_seeded():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 100, (300, 2))
    table = make_table(X, np.zeros(300))
    res = shap_for(table, (X / 100 - 0.5) * [1.0, -2.0] + rng.normal(0, 0.1, (300, 2)))
    a = beta_shap(res, table, n_boot=300, seed=4)
    b = beta_shap(res, table, n_boot=300, seed=4)
    assert a.features == b.features
    for f in a.features:
        assert f.ci_lo <= f.beta_shap <= f.ci_hi
    assert a["f0"].beta_shap > 0 > a["f1"].beta_shap


def test_join_errors():
    table = make_table([[1.0], [2.0]], [0, 0])
    bad_rows = ShapResult(0.0, np.zeros((1, 1)), ["zzz"], ["f0"])
    with pytest.raises(JoinError):
        beta_shap(bad_rows, table)
    bad_feature = ShapResult(0.0, np.zeros((2, 1)), ["r0", "r1"], ["nope"])
    with pytest.raises(JoinError):
        beta_shap(bad_feature, table)


def test_ranking_by_modality_with_ties():
    X = np.array([[100.0, 100.0, 100.0, 0.0], [0.0, 0.0, 0.0, 100.0]])
    table = make_table(X, [0, 0], names=["a", "b", "c", "d"], modalities=["text", "text", "visual", "visual"])
    # a and b tie on beta (0.5); b has the larger mean |phi| so it ranks first
    phi = np.array([[1.0, 3.0, -1.0, 2.0], [-1.0, 1.0, 1.0, 0.0]])
    summary = beta_shap(shap_for(table, phi), table, n_boot=0)
    assert summary["a"].beta_shap == summary["b"].beta_shap == 0.5
    ranking = importance_ranking(summary, top_k_pos=2, top_k_neg=2)
    assert list(ranking) == ["text", "visual"]
    assert [f.feature for f in ranking["text"]["positive"]] == ["b", "a"]
    assert [f.feature for f in ranking["visual"]["negative"]] == ["c", "d"]
    pooled = importance_ranking(summary, 1, 1, group_by_modality=False)
    assert list(pooled) == ["all"]
    assert pooled["all"]["positive"][0].feature == "b"


def test_summary_csv_round_trip(tmp_path):
    table = make_table([[10.0, 90.0], [90.0, 10.0], [50.0, 40.0]], [0, 0, 0])
    summary = beta_shap(shap_for(table, [[1.0, 2.0], [3.0, -1.0], [0.0, 0.5]]), table, "median", "sum", n_boot=50)
    summary.to_csv(tmp_path / "b.csv", tmp_path / "b.json")
    back = BetaSummary.from_csv(tmp_path / "b.csv", tmp_path / "b.json")
    assert back.features == summary.features
    assert (back.centering, back.normalization) == ("median", "sum")


def test_beeswarm_export_order_and_errors(tmp_path):
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 100, (20, 3))
    table = make_table(X, np.zeros(20))
    res = shap_for(table, (X / 100 - 0.5) * [1.0, 3.0, -2.0])
    recs = beeswarm_export(res, table)
    order = [r["feature"] for r in recs[::20]]
    assert order == ["f1", "f0", "f2"]
    assert {r["row_id"] for r in recs} == set(table.row_ids)
    with pytest.raises(SchemaError):
        beeswarm_export(res, table, features=["missing"])
    write_jsonl(recs, tmp_path / "b.jsonl")
    assert read_jsonl(tmp_path / "b.jsonl") == recs


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 60), c=st.floats(-5, 5))
def test_beeswarm_reproduces_beta(seed, n, c):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 100, (n, 2))
    table = make_table(X, np.zeros(n))
    res = shap_for(table, rng.normal(size=(n, 2)) * c)
    summary = beta_shap(res, table, n_boot=0)
    again = beta_from_beeswarm(beeswarm_export(res, table, summary=summary))
    for f in summary.features:
        assert again[f.feature] == f.beta_shap


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(-10, 10))
def test_beta_is_linear_in_phi(seed, scale):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 100, (25, 2))
    table = make_table(X, np.zeros(25))
    phi = rng.normal(size=(25, 2))
    base = beta_shap(shap_for(table, phi), table, n_boot=0).betas()
    scaled = beta_shap(shap_for(table, phi * scale), table, n_boot=0).betas()
    for k in base:
        assert abs(scaled[k] - scale * base[k]) <= 1e-12 * max(1.0, abs(scale))
