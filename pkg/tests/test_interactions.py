import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modal_attrib.data_model import split
from modal_attrib.errors import ConfigError, JoinError
from modal_attrib.gbdt import BoostConfig, fit
from modal_attrib.interactions import (
    classify_pattern,
    default_tolerance,
    pair_response,
    quadrant_regression,
    scatter_records,
    top_interacting_pairs,
    write_patterns_json,
    write_quadrant_csv,
)
from modal_attrib.shapley import InteractionTensor, make_background, shap_interactions

from conftest import make_table


def test_classify_templates():
    assert classify_pattern([0.01, -0.02, -1.0, 1.1]) == "x_threshold"
    assert classify_pattern([0.01, -1.0, 0.02, 1.1]) == "y_threshold"
    assert classify_pattern([1.0, -1.0, -1.0, 1.0]) == "symmetric_sign_change"
    assert classify_pattern([-1.0, 1.0, 1.0, -1.0]) == "symmetric_sign_change"
    assert classify_pattern([0.0, 0.0, 0.0, 0.0]) == "none"
    assert classify_pattern([1.0, 1.0, 1.0, 1.0]) == "none"


def test_classify_single_quadrant_effect_prefers_x():
    # only (+,+) differs from zero: both threshold rules hold
    assert classify_pattern([0.0, 0.0, 0.0, 1.0]) == "x_threshold"


def test_tolerance():
    assert default_tolerance([0.1, -2.0, 0.0, 1.0]) == 0.5
    assert default_tolerance([0.0, 0.0, 0.0, 0.0]) == 0.05
    with pytest.raises(ConfigError):
        classify_pattern([1, 2, 3, 4], tol=0.0)
    # an explicit tolerance overrides the default
    assert classify_pattern([0.2, -0.2, -1.0, 1.0], tol=0.1) == "symmetric_sign_change"


@settings(max_examples=100, deadline=None)
@given(betas=st.lists(st.floats(-10, 10), min_size=4, max_size=4), scale=st.floats(0.01, 100))
def test_classification_is_scale_free(betas, scale):
    # the default tolerance is relative, so positive rescaling keeps the label
    # whenever it stays above the absolute floor
    if max(abs(b) for b in betas) * min(scale, 1.0) < 0.2:
        return
    assert classify_pattern(betas) == classify_pattern([b * scale for b in betas])


@settings(max_examples=100, deadline=None)
@given(betas=st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_classification_output_domain(betas):
    assert classify_pattern(betas) in ("x_threshold", "y_threshold", "symmetric_sign_change", "none")


def _planted_tensor(x, y, phi_xy, diag_x=None, diag_y=None):
    n = len(x)
    phi2 = np.zeros((n, 2, 2))
    phi2[:, 0, 1] = phi2[:, 1, 0] = phi_xy
    phi2[:, 0, 0] = 0.0 if diag_x is None else diag_x
    phi2[:, 1, 1] = 0.0 if diag_y is None else diag_y
    return InteractionTensor(0.0, phi2, [f"r{i}" for i in range(n)], ["x", "y"])


def test_quadrant_regression_on_planted_surface():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 100, (2000, 2))
    table = make_table(X, np.zeros(2000), names=["x", "y"])
    sx, sy = np.where(X[:, 0] > 50, 1, -1), np.where(X[:, 1] > 50, 1, -1)
    t = _planted_tensor(X[:, 0], X[:, 1], 0.5 * sx * sy)
    rep = quadrant_regression(t, table, "x", "y", response="interaction")
    assert rep.pattern == "symmetric_sign_change"
    assert (rep.x0, rep.y0) == (50.0, 50.0)
    assert [q.quadrant for q in rep.quadrants] == ["(-,-)", "(-,+)", "(+,-)", "(+,+)"]
    assert sum(q.n for q in rep.quadrants) == 2000
    # joint response adds diag terms: 0 here, so twice the interaction
    joint = quadrant_regression(t, table, "x", "y")
    np.testing.assert_allclose(joint.betas(), 2 * np.array(rep.betas()))


def test_x_threshold_surface_through_joint_response():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 100, (2000, 2))
    table = make_table(X, np.zeros(2000), names=["x", "y"])
    sy = np.where(X[:, 1] > 50, 1.0, -1.0)
    surface = (X[:, 0] > 50) * sy
    # split the surface arbitrarily between diagonal and pair terms
    t = _planted_tensor(X[:, 0], X[:, 1], 0.25 * surface, diag_x=0.3 * surface, diag_y=0.2 * surface)
    assert quadrant_regression(t, table, "x", "y").pattern == "x_threshold"
    t2 = _planted_tensor(X[:, 1], X[:, 0], 0.5 * surface)
    table2 = make_table(X[:, ::-1], np.zeros(2000), names=["x", "y"])
    assert quadrant_regression(t2, table2, "x", "y").pattern == "y_threshold"


def test_additive_model_has_flat_quadrants():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 100, (3000, 2))
    y = X[:, 0] / 50 + np.sin(X[:, 1] / 15)
    table = make_table(X, y, names=["x", "y"])
    model, _ = fit(X, y, BoostConfig(iterations=100, learning_rate=0.2, max_depth=1, min_samples_leaf=10),
                   feature_names=["x", "y"])
    t = shap_interactions(model, X[:800], make_background(X, 128), list(table.row_ids[:800]))
    rep = quadrant_regression(t, table, "x", "y", response="interaction")
    assert max(abs(b) for b in rep.betas()) < 1e-8
    assert rep.pattern == "none"


def test_median_threshold_for_continuous_and_empty_quadrants():
    X = np.column_stack([np.linspace(0, 10, 40), np.linspace(0, 40, 40)])
    table = make_table(X, np.zeros(40), names=["x", "y"], kinds=["continuous", "probabilistic"])
    t = _planted_tensor(X[:, 0], X[:, 1], np.ones(40))
    rep = quadrant_regression(t, table, "x", "y")
    assert rep.x0 == pytest.approx(50.0)  # min-max normalized, median of 0..100
    assert rep.y0 == 50.0
    statuses = {q.quadrant: q.status for q in rep.quadrants}
    assert statuses["(-,+)"] == "insufficient"
    assert statuses["(+,+)"] == "insufficient"


def test_centered_product_and_intercept_options():
    rng = np.random.default_rng(3)
    X = rng.uniform(0, 100, (500, 2))
    table = make_table(X, np.zeros(500), names=["x", "y"])
    prod = (X[:, 0] - 50) * (X[:, 1] - 50) / 1e4
    t = _planted_tensor(X[:, 0], X[:, 1], 3.0 * prod + 1.0)
    rep = quadrant_regression(t, table, "x", "y", regressor_mode="centered_product", response="interaction",
                              fit_intercept=True)
    np.testing.assert_allclose(rep.betas(), 3.0, atol=1e-9)
    for q in rep.quadrants:
        assert q.r == pytest.approx(1.0)


def test_option_validation_and_join():
    X = np.random.default_rng(4).uniform(0, 100, (20, 2))
    table = make_table(X, np.zeros(20), names=["x", "y"])
    t = _planted_tensor(X[:, 0], X[:, 1], np.zeros(20))
    with pytest.raises(ConfigError):
        quadrant_regression(t, table, "x", "y", threshold_mode="mean")
    with pytest.raises(ConfigError):
        quadrant_regression(t, table, "x", "y", regressor_mode="y_value")
    with pytest.raises(ConfigError):
        pair_response(t, "x", "x")
    other = InteractionTensor(0.0, t.phi2, ["zz"] * 20, ["x", "y"])
    with pytest.raises(JoinError):
        quadrant_regression(other, table, "x", "y")


def test_top_pairs_and_exports(tmp_path):
    rng = np.random.default_rng(5)
    n = 30
    phi2 = np.zeros((n, 3, 3))
    phi2[:, 0, 2] = phi2[:, 2, 0] = rng.normal(size=n) * 5
    phi2[:, 0, 1] = phi2[:, 1, 0] = rng.normal(size=n)
    t = InteractionTensor(0.0, phi2, [f"r{i}" for i in range(n)], ["b", "c", "a"])
    top = top_interacting_pairs(t, 2)
    assert [(a, b) for a, b, _ in top] == [("a", "b"), ("b", "c")]

    X = rng.uniform(0, 100, (n, 3))
    table = make_table(X, np.zeros(n), names=["b", "c", "a"])
    rep = quadrant_regression(t, table, "b", "a")
    write_quadrant_csv([rep], tmp_path / "q.csv")
    write_patterns_json([rep], tmp_path / "p.json")
    assert len((tmp_path / "q.csv").read_text().splitlines()) == 5
    assert json.loads((tmp_path / "p.json").read_text())[0]["pattern"] == rep.pattern
    recs = scatter_records(t, table, "b", "a")
    assert len(recs) == n and set(recs[0]) >= {"x", "y", "phi_xy", "joint"}


def test_pipeline_fragment_recovers_symmetric():
    rng = np.random.default_rng(6)
    X = rng.uniform(0, 100, (4000, 2))
    sx, sy = np.where(X[:, 0] > 50, 1, -1), np.where(X[:, 1] > 50, 1, -1)
    y = sx * sy + rng.normal(0, 0.25, 4000)
    table = make_table(X, y, names=["x", "y"])
    sp = split(table, 0.8, seed=0)
    model, _ = fit(X[sp.train_rows], y[sp.train_rows], BoostConfig(iterations=100, max_depth=3),
                   feature_names=["x", "y"])
    rows = sp.test_rows[:400]
    t = shap_interactions(model, X[rows], make_background(X[sp.train_rows], 256), [table.row_ids[i] for i in rows])
    rep = quadrant_regression(t, table, "x", "y")
    assert rep.pattern == "symmetric_sign_change"
    assert rep.beta("(+,+)") > 0
