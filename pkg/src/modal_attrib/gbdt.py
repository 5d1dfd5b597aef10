"""Gradient-boosted regression trees with squared-error loss.

One engine serves both model setups: ``within`` (fixed 1,000 rounds) and
``cross`` (up to 10,000 rounds, early stopping checked every 1,000).
Trees are ordinary greedy binary regression trees grown level by level with
exact split search over presorted feature columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np

from .data_model import FeatureTable, SplitIndex, schema_fingerprint
from .errors import ConfigError, SchemaError

MODEL_FORMAT = "modal_attrib.gbdt/1"


@dataclass(frozen=True)
class BoostConfig:
    iterations: int = 1000
    learning_rate: float = 0.1
    max_depth: int = 6
    min_samples_leaf: int = 20
    early_stop_eval_every: int | None = None
    early_stop_patience_evals: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")
        if (self.early_stop_eval_every is None) != (self.early_stop_patience_evals is None):
            raise ConfigError("early stopping needs both eval_every and patience, or neither")
        if self.early_stop_eval_every is not None and (
            self.early_stop_eval_every < 1 or self.early_stop_patience_evals < 1
        ):
            raise ConfigError("early stopping cadence and patience must be >= 1")

    @property
    def early_stopping(self) -> bool:
        return self.early_stop_eval_every is not None

    @classmethod
    def preset(cls, name: str, seed: int = 0, **overrides) -> "BoostConfig":
        if name == "within":
            base = dict(iterations=1000, learning_rate=0.1, max_depth=6)
        elif name == "cross":
            base = dict(
                iterations=10000,
                learning_rate=0.1,
                max_depth=6,
                early_stop_eval_every=1000,
                early_stop_patience_evals=1,
            )
        else:
            raise ConfigError(f"unknown preset {name!r}; expected 'within' or 'cross'")
        base.update(overrides)
        return cls(seed=seed, **base)


@dataclass(frozen=True)
class Tree:
    """Flat node arrays; ``feature == -1`` marks a leaf. Rows with
    ``x[feature] <= threshold`` go left."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        def walk(i: int) -> int:
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))

        return walk(0)

    def to_json(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Tree":
        return cls(
            feature=np.asarray(obj["feature"], dtype=np.int64),
            threshold=np.asarray(obj["threshold"], dtype=np.float64),
            left=np.asarray(obj["left"], dtype=np.int64),
            right=np.asarray(obj["right"], dtype=np.int64),
            value=np.asarray(obj["value"], dtype=np.float64),
        )

    @classmethod
    def leaf(cls, value: float) -> "Tree":
        return cls(
            feature=np.array([-1]),
            threshold=np.array([0.0]),
            left=np.array([-1]),
            right=np.array([-1]),
            value=np.array([float(value)]),
        )


@dataclass
class BoostedModel:
    base_score: float
    learning_rate: float
    trees: list[Tree]
    n_features: int
    feature_names: list[str] = field(default_factory=list)
    schema_fingerprint: str = ""
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    def _pack(self) -> tuple:
        if self._packed is None:
            offsets = np.zeros(len(self.trees) + 1, dtype=np.int64)
            for t, tree in enumerate(self.trees):
                offsets[t + 1] = offsets[t] + tree.n_nodes
            if self.trees:
                feat = np.concatenate([t.feature for t in self.trees]).astype(np.int64)
                thr = np.concatenate([t.threshold for t in self.trees]).astype(np.float64)
                left = np.concatenate([t.left + o for t, o in zip(self.trees, offsets)]).astype(np.int64)
                right = np.concatenate([t.right + o for t, o in zip(self.trees, offsets)]).astype(np.int64)
                val = np.concatenate([t.value for t in self.trees]).astype(np.float64)
            else:
                feat = np.zeros(0, np.int64)
                thr = np.zeros(0)
                left = np.zeros(0, np.int64)
                right = np.zeros(0, np.int64)
                val = np.zeros(0)
            self._packed = (offsets[:-1].copy(), feat, thr, left, right, val)
        return self._packed

    def check_rows(self, rows: np.ndarray) -> np.ndarray:
        rows = np.ascontiguousarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        if rows.ndim != 2 or rows.shape[1] != self.n_features:
            raise SchemaError(
                f"model expects {self.n_features} columns (schema {self.schema_fingerprint}), got shape {rows.shape}"
            )
        return rows

    def predict(self, rows: np.ndarray) -> np.ndarray:
        return predict(self, rows)

    def truncated(self, n_trees: int) -> "BoostedModel":
        return BoostedModel(
            base_score=self.base_score,
            learning_rate=self.learning_rate,
            trees=list(self.trees[:n_trees]),
            n_features=self.n_features,
            feature_names=list(self.feature_names),
            schema_fingerprint=self.schema_fingerprint,
        )

    def to_json(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "schema_fingerprint": self.schema_fingerprint,
            "trees": [t.to_json() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, obj: dict) -> "BoostedModel":
        if obj.get("format") != MODEL_FORMAT:
            raise SchemaError(f"unsupported model format {obj.get('format')!r}")
        return cls(
            base_score=float(obj["base_score"]),
            learning_rate=float(obj["learning_rate"]),
            trees=[Tree.from_json(t) for t in obj["trees"]],
            n_features=int(obj["n_features"]),
            feature_names=list(obj.get("feature_names", [])),
            schema_fingerprint=obj.get("schema_fingerprint", ""),
        )

    @classmethod
    def load(cls, path: str | Path) -> "BoostedModel":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except FileNotFoundError:
            raise SchemaError(f"model file not found: {path}") from None
        return cls.from_json(json.loads(text))


@dataclass
class TrainReport:
    config: dict
    n_train: int
    n_test: int
    rounds_trained: int
    best_round: int
    stopped_early: bool
    train_rmse: list[float]
    test_rmse: list[float]
    evaluations: list[dict]

    def to_json(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- kernels


@nb.njit(cache=True)
def _grow_tree(X, order, resid, max_depth, min_leaf):
    n, p = X.shape
    max_nodes = 2 ** (max_depth + 1) - 1
    feature = np.full(max_nodes, -1, np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, np.int64)
    right = np.full(max_nodes, -1, np.int64)
    value = np.zeros(max_nodes)
    node_sum = np.zeros(max_nodes)
    node_cnt = np.zeros(max_nodes, np.int64)
    node_of = np.zeros(n, np.int64)

    total = 0.0
    for i in range(n):
        total += resid[i]
    node_sum[0] = total
    node_cnt[0] = n
    n_nodes = 1

    active = np.zeros(max_nodes, np.bool_)
    level = np.zeros(max_nodes, np.int64)
    n_level = 0
    if n >= 2 * min_leaf:
        active[0] = True
        level[0] = 0
        n_level = 1

    best_gain = np.zeros(max_nodes)
    best_feat = np.full(max_nodes, -1, np.int64)
    best_thr = np.zeros(max_nodes)
    cum_sum = np.zeros(max_nodes)
    cum_cnt = np.zeros(max_nodes, np.int64)
    last_val = np.zeros(max_nodes)

    for _depth in range(max_depth):
        if n_level == 0:
            break
        for k in range(n_level):
            nd = level[k]
            best_gain[nd] = 0.0
            best_feat[nd] = -1
        for f in range(p):
            for k in range(n_level):
                nd = level[k]
                cum_sum[nd] = 0.0
                cum_cnt[nd] = 0
            for k in range(n):
                r = order[f, k]
                nd = node_of[r]
                if not active[nd]:
                    continue
                v = X[r, f]
                nl = cum_cnt[nd]
                if nl > 0 and v > last_val[nd]:
                    nr = node_cnt[nd] - nl
                    if nl >= min_leaf and nr >= min_leaf:
                        sl = cum_sum[nd]
                        sr = node_sum[nd] - sl
                        gain = sl * sl / nl + sr * sr / nr - node_sum[nd] * node_sum[nd] / node_cnt[nd]
                        if gain > best_gain[nd]:
                            best_gain[nd] = gain
                            best_feat[nd] = f
                            thr = 0.5 * (last_val[nd] + v)
                            if thr >= v:
                                thr = last_val[nd]
                            best_thr[nd] = thr
                cum_sum[nd] += resid[r]
                cum_cnt[nd] = nl + 1
                last_val[nd] = v

        n_split = 0
        for k in range(n_level):
            nd = level[k]
            active[nd] = False
            if best_feat[nd] >= 0:
                feature[nd] = best_feat[nd]
                threshold[nd] = best_thr[nd]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                n_nodes += 2
                n_split += 1
        if n_split == 0:
            break
        for r in range(n):
            nd = node_of[r]
            f = feature[nd]
            if f >= 0 and left[nd] >= 0 and best_feat[nd] >= 0:
                child = left[nd] if X[r, f] <= threshold[nd] else right[nd]
                node_of[r] = child
                node_sum[child] += resid[r]
                node_cnt[child] += 1
        for k in range(n_level):
            best_feat[level[k]] = -1
        new_n = 0
        for nd in range(n_nodes - 2 * n_split, n_nodes):
            if node_cnt[nd] >= 2 * min_leaf:
                active[nd] = True
                level[new_n] = nd
                new_n += 1
        n_level = new_n

    for nd in range(n_nodes):
        if feature[nd] < 0 and node_cnt[nd] > 0:
            value[nd] = node_sum[nd] / node_cnt[nd]
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        node_of,
    )


@nb.njit(cache=True)
def _apply_tree(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        nd = 0
        while feature[nd] >= 0:
            if X[i, feature[nd]] <= threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[i] = value[nd]
    return out


@nb.njit(cache=True)
def _predict_packed(roots, feature, threshold, left, right, value, base, lr, X):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = 0.0
        for t in range(roots.shape[0]):
            nd = roots[t]
            while feature[nd] >= 0:
                if X[i, feature[nd]] <= threshold[nd]:
                    nd = left[nd]
                else:
                    nd = right[nd]
            s += value[nd]
        out[i] = base + lr * s
    return out


# ---------------------------------------------------------------- public API


def predict(model: BoostedModel, rows: np.ndarray) -> np.ndarray:
    """``base_score + learning_rate * sum_t tree_t(x)``, trees summed in order."""
    rows = model.check_rows(rows)
    roots, feat, thr, left, right, val = model._pack()
    if len(roots) == 0:
        return np.full(rows.shape[0], model.base_score)
    return _predict_packed(roots, feat, thr, left, right, val, model.base_score, model.learning_rate, rows)


def _rmse(y: np.ndarray, pred: np.ndarray) -> float:
    return float(np.sqrt(np.mean((y - pred) ** 2))) if len(y) else float("nan")


def fit(
    X: np.ndarray,
    y: np.ndarray,
    config: BoostConfig,
    X_test: np.ndarray | None = None,
    y_test: np.ndarray | None = None,
    feature_names: Sequence[str] | None = None,
    fingerprint: str = "",
) -> tuple[BoostedModel, TrainReport]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ConfigError("training partition is empty")
    if X.shape[1] < 1:
        raise ConfigError("need at least one feature")
    n, p = X.shape
    has_test = X_test is not None and len(X_test) > 0
    if config.early_stopping and not has_test:
        raise ConfigError("early stopping requires a non-empty test partition")
    if has_test:
        X_test = np.ascontiguousarray(X_test, dtype=np.float64)
        y_test = np.ascontiguousarray(y_test, dtype=np.float64)

    base = float(np.mean(y))
    model = BoostedModel(
        base_score=base,
        learning_rate=config.learning_rate,
        trees=[],
        n_features=p,
        feature_names=list(feature_names) if feature_names is not None else [f"x{j}" for j in range(p)],
        schema_fingerprint=fingerprint,
    )
    pred = np.full(n, base)
    pred_test = np.full(len(y_test), base) if has_test else None
    train_hist: list[float] = []
    test_hist: list[float] = []
    evaluations: list[dict] = []
    best_round, best_rmse, bad_evals, stopped = 0, math.inf, 0, False

    if np.ptp(y) == 0.0:
        report = TrainReport(
            config=asdict(config), n_train=n, n_test=len(y_test) if has_test else 0,
            rounds_trained=0, best_round=0, stopped_early=False,
            train_rmse=[], test_rmse=[], evaluations=[],
        )
        return model, report

    order = np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)
    lr = config.learning_rate
    eval_every = config.early_stop_eval_every
    for t in range(1, config.iterations + 1):
        resid = y - pred
        feat, thr, left, right, val, node_of = _grow_tree(X, order, resid, config.max_depth, config.min_samples_leaf)
        tree = Tree(feat, thr, left, right, val)
        model.trees.append(tree)
        pred = pred + lr * val[node_of]
        train_hist.append(_rmse(y, pred))
        if has_test:
            pred_test = pred_test + lr * _apply_tree(feat, thr, left, right, val, X_test)
            test_hist.append(_rmse(y_test, pred_test))
        if eval_every is not None and t % eval_every == 0:
            evaluations.append({"round": t, "train_rmse": train_hist[-1], "test_rmse": test_hist[-1]})
            if test_hist[-1] < best_rmse:
                best_rmse, best_round, bad_evals = test_hist[-1], t, 0
            else:
                bad_evals += 1
                if bad_evals >= config.early_stop_patience_evals:
                    stopped = True
                    break

    rounds = len(model.trees)
    if eval_every is None or best_round == 0:
        best_round = rounds
    else:
        model = model.truncated(best_round)
    if eval_every is None:
        evaluations.append(
            {"round": rounds, "train_rmse": train_hist[-1], "test_rmse": test_hist[-1] if has_test else None}
        )
    report = TrainReport(
        config=asdict(config),
        n_train=n,
        n_test=len(y_test) if has_test else 0,
        rounds_trained=rounds,
        best_round=best_round,
        stopped_early=stopped,
        train_rmse=train_hist,
        test_rmse=test_hist,
        evaluations=evaluations,
    )
    return model, report


def train(table: FeatureTable, split: SplitIndex, config: BoostConfig) -> tuple[BoostedModel, TrainReport]:
    if len(split.train_rows) == 0:
        raise ConfigError("training partition is empty")
    X = table.values
    return fit(
        X[split.train_rows],
        table.target[split.train_rows],
        config,
        X[split.test_rows] if len(split.test_rows) else None,
        table.target[split.test_rows] if len(split.test_rows) else None,
        feature_names=table.feature_names,
        fingerprint=table.fingerprint(),
    )


def evaluate(model: BoostedModel, table: FeatureTable, rows: Sequence[int] | np.ndarray | None = None) -> dict:
    idx = np.arange(table.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    if len(idx) == 0:
        raise ConfigError("evaluate needs at least one row")
    y = table.target[idx]
    pred = predict(model, table.values[idx])
    sse = float(np.sum((y - pred) ** 2))
    sst = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else (1.0 if sse == 0 else 0.0)
    return {"rmse": math.sqrt(sse / len(idx)), "r2": r2}
