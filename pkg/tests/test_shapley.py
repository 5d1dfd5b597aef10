import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modal_attrib.errors import ConfigError, SchemaError
from modal_attrib.gbdt import BoostConfig, BoostedModel, Tree, fit
from modal_attrib.shapley import (
    Background,
    InteractionTensor,
    ShapResult,
    brute_force_interactions,
    brute_force_shap,
    make_background,
    shap_interactions,
    shap_values,
)

from conftest import golden_model, random_model

GOLDEN_BG = np.array([[20.0, 10.0, 80.0], [60.0, 40.0, 10.0]])
GOLDEN_X = np.array([[40.0, 20.0, 90.0]])


def test_golden_shap_values():
    # values worked out by hand over both background rows
    res = shap_values(golden_model(), GOLDEN_X, Background(GOLDEN_BG))
    assert res.base_value == 4.0
    np.testing.assert_allclose(res.phi[0], [-1.25, -0.25, 2.0], atol=1e-15)


def test_golden_interactions():
    t = shap_interactions(golden_model(), GOLDEN_X, Background(GOLDEN_BG))
    expected = np.array([
        [-1.0, -0.25, 0.0],
        [-0.25, 0.0, 0.0],
        [0.0, 0.0, 2.0],
    ])
    np.testing.assert_allclose(t.phi2[0], expected, atol=1e-15)


def test_golden_matches_oracle():
    m = golden_model()
    bg = Background(GOLDEN_BG)
    np.testing.assert_allclose(brute_force_shap(m, GOLDEN_X[0], bg), [-1.25, -0.25, 2.0], atol=1e-15)
    np.testing.assert_allclose(brute_force_interactions(m, GOLDEN_X[0], bg)[0, 1], -0.25, atol=1e-15)


def test_local_accuracy_small():
    rng = np.random.default_rng(0)
    model, X = random_model(rng, 5, 40, 4)
    bg = make_background(X, 64, seed=1)
    res = shap_values(model, X[:50], bg)
    np.testing.assert_allclose(res.predictions(), model.predict(X[:50]), atol=1e-10)


def test_missing_feature_gets_zero():
    # feature 2 never appears in a split
    t = Tree(np.array([0, -1, -1]), np.array([50.0, 0, 0]), np.array([1, -1, -1]), np.array([2, -1, -1]),
             np.array([0.0, -1.0, 1.0]))
    m = BoostedModel(0.0, 1.0, [t], 3)
    rng = np.random.default_rng(1)
    res = shap_values(m, rng.uniform(0, 100, (20, 3)), Background(rng.uniform(0, 100, (8, 3))))
    np.testing.assert_array_equal(res.phi[:, 2], 0.0)
    np.testing.assert_array_equal(res.phi[:, 1], 0.0)


def test_row_equal_to_single_background_gets_zero():
    rng = np.random.default_rng(2)
    model, X = random_model(rng, 4, 20, 3)
    res = shap_values(model, X[:1], Background(X[:1]))
    np.testing.assert_array_equal(res.phi, 0.0)


def test_empty_model():
    m = BoostedModel(1.5, 0.1, [], 2)
    res = shap_values(m, np.zeros((3, 2)), Background(np.ones((2, 2))))
    assert res.base_value == 1.5
    np.testing.assert_array_equal(res.phi, 0.0)


def test_errors():
    m = golden_model()
    with pytest.raises(SchemaError):
        shap_values(m, np.zeros((1, 2)), Background(GOLDEN_BG))
    with pytest.raises(ConfigError):
        Background(np.zeros((0, 3)))
    with pytest.raises(ConfigError):
        shap_interactions(m, GOLDEN_X, Background(GOLDEN_BG), max_features=2)
    big = BoostedModel(0.0, 1.0, [Tree.leaf(0.0)], 21)
    with pytest.raises(ConfigError):
        brute_force_shap(big, np.zeros(21), Background(np.zeros((1, 21))))


def test_background_sampling_is_seeded():
    X = np.arange(200.0).reshape(100, 2)
    a = make_background(X, 10, seed=5)
    b = make_background(X, 10, seed=5)
    np.testing.assert_array_equal(a.rows, b.rows)
    assert a.size == 10
    assert make_background(X, 500).size == 100


def test_shap_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    model, X = random_model(rng, 3, 10, 3)
    res = shap_values(model, X[:5], make_background(X, 16), row_ids=[f"v{i}" for i in range(5)])
    res.to_csv(tmp_path / "s.csv", tmp_path / "h.json")
    back = ShapResult.from_csv(tmp_path / "s.csv", tmp_path / "h.json")
    np.testing.assert_array_equal(back.phi, res.phi)
    assert back.row_ids == res.row_ids
    assert back.base_value == res.base_value


def test_interaction_csv_upper_triangle(tmp_path):
    t = shap_interactions(golden_model(), GOLDEN_X, Background(GOLDEN_BG), row_ids=["x"])
    t.to_csv(tmp_path / "i.csv")
    lines = (tmp_path / "i.csv").read_text().splitlines()
    assert lines[0] == "row_id,feature_i,feature_j,phi_ij"
    assert len(lines) == 1 + 6


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.integers(2, 6), depth=st.integers(1, 4), n_trees=st.integers(1, 12))
def test_matches_brute_force(seed, p, depth, n_trees):
    rng = np.random.default_rng(seed)
    model, X = random_model(rng, p, n_trees, depth, n=120)
    bg = make_background(X, 8, seed=seed)
    rows = X[:3]
    res = shap_values(model, rows, bg)
    tens = shap_interactions(model, rows, bg)
    for k in range(3):
        np.testing.assert_allclose(res.phi[k], brute_force_shap(model, rows[k], bg), atol=1e-9)
        np.testing.assert_allclose(tens.phi2[k], brute_force_interactions(model, rows[k], bg), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10**6), p=st.integers(2, 7))
def test_interaction_invariants(seed, p):
    rng = np.random.default_rng(seed)
    model, X = random_model(rng, p, 15, 4, n=150)
    bg = make_background(X, 32, seed=seed)
    t = shap_interactions(model, X[:20], bg)
    assert np.array_equal(t.phi2, np.transpose(t.phi2, (0, 2, 1)))
    main = shap_values(model, X[:20], bg)
    np.testing.assert_allclose(t.phi2.sum(axis=2), main.phi, atol=1e-10)
    full = t.base_value + t.phi2.sum(axis=(1, 2))
    np.testing.assert_allclose(full, model.predict(X[:20]), atol=1e-10)


def test_additive_model_has_no_interactions():
    rng = np.random.default_rng(4)
    X = rng.uniform(0, 100, (400, 2))
    y = np.sin(X[:, 0] / 20) + X[:, 1] / 50
    # depth 1 trees are additive by construction
    model, _ = fit(X, y, BoostConfig(iterations=60, learning_rate=0.3, max_depth=1, min_samples_leaf=5))
    t = shap_interactions(model, X[:100], make_background(X, 64))
    assert np.max(np.abs(t.phi2[:, 0, 1])) < 1e-12


def test_tensor_pair_lookup():
    t = InteractionTensor(0.0, np.zeros((2, 2, 2)), ["a", "b"], ["u", "v"])
    assert t.pair("u", "v").shape == (2,)
    with pytest.raises(SchemaError):
        t.index_of("w")
