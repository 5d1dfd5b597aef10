import json
from pathlib import Path

import numpy as np
import pytest

from modal_attrib.data_model import ColumnSpec, FeatureTable, normalize
from modal_attrib.gbdt import BoostConfig, BoostedModel, Tree, fit

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (description, passed)
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


def record_acceptance(number: int, description: str, passed: bool) -> None:
    ACCEPTANCE[number] = (description, passed)


@pytest.fixture
def acceptance():
    return record_acceptance


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        desc, ok = ACCEPTANCE[number]
        terminalreporter.write_line(f"AC{number} {'PASS' if ok else 'FAIL'}: {desc}")


def make_table(X, y, names=None, modalities=None, kinds=None) -> FeatureTable:
    X = np.asarray(X, dtype=np.float64)
    p = X.shape[1]
    names = names or [f"f{j}" for j in range(p)]
    modalities = modalities or ["text"] * p
    kinds = kinds or ["probabilistic"] * p
    schema = tuple(ColumnSpec(n, m, k) for n, m, k in zip(names, modalities, kinds))
    return normalize(FeatureTable(schema, X, np.asarray(y, dtype=np.float64), tuple(f"r{i}" for i in range(len(X)))))


def random_model(rng, p, n_trees, depth, n=400) -> tuple[BoostedModel, np.ndarray]:
    """A small boosted model fit to a random nonlinear target on 0-100 features."""
    X = rng.uniform(0, 100, (n, p)).round(1)
    w = rng.normal(size=p)
    y = X @ w / 100 + np.sin(X[:, 0] / 15) * (X[:, -1] > 50) + rng.normal(0, 0.1, n)
    cfg = BoostConfig(iterations=n_trees, learning_rate=0.3, max_depth=depth, min_samples_leaf=5)
    model, _ = fit(X, y, cfg)
    return model, X


def write_schema(path: Path, columns: list[dict], target="views", transform="log1p") -> Path:
    path.write_text(json.dumps({"target": {"name": target, "transform": transform}, "columns": columns}))
    return path


def golden_model() -> BoostedModel:
    """Two hand-built trees over three features."""
    t1 = Tree(
        feature=np.array([0, 1, -1, -1, -1]),
        threshold=np.array([50.0, 30.0, 0.0, 0.0, 0.0]),
        left=np.array([1, 3, -1, -1, -1]),
        right=np.array([2, 4, -1, -1, -1]),
        value=np.array([0.0, 0.0, 4.0, 1.0, 2.0]),
    )
    t2 = Tree(
        feature=np.array([2, -1, -1]),
        threshold=np.array([70.0, 0.0, 0.0]),
        left=np.array([1, -1, -1]),
        right=np.array([2, -1, -1]),
        value=np.array([0.0, -1.0, 3.0]),
    )
    return BoostedModel(base_score=0.5, learning_rate=1.0, trees=[t1, t2], n_features=3,
                        feature_names=["a", "b", "c"])
