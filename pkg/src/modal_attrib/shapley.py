"""Exact interventional Shapley values and SHAP interaction values for tree ensembles.

The value of a coalition S for an explained row x is the mean model output
over background rows b with x's values on S and b's values elsewhere.

Each leaf is a box over the (at most ``max_depth``) features on its path.
For a pair (x, b) a path feature is satisfied by x, by b, by both or by
neither. The leaf's contribution to the coalition game is then
``v * 1[A subset of S] * 1[B disjoint from S]`` where A holds the features only
x satisfies and B those only b satisfies, and that game has closed-form
Shapley and interaction values depending only on |A| and |B|. Background rows
enter a leaf only through their in-box bit pattern, so each leaf gets a
lookup table indexed by the explained row's bit pattern.

``brute_force_shap`` and ``brute_force_interactions`` evaluate the Shapley
formulas literally over all subsets using nothing but ``model.predict`` and
serve as the independent oracle for the fast path.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Callable, Sequence

import numba as nb
import numpy as np

from .errors import ConfigError, SchemaError
from .gbdt import BoostedModel, predict

DEFAULT_BACKGROUND_SIZE = 1024
MAX_BRUTE_FORCE_FEATURES = 20
DEFAULT_INTERACTION_GUARD = 200
_LEAF_CHUNK_BYTES = 128 * 2**20


@dataclass(frozen=True)
class Background:
    rows: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        rows = np.ascontiguousarray(self.rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[0] < 1:
            raise ConfigError("background needs at least one row")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def size(self) -> int:
        return self.rows.shape[0]


def make_background(X: np.ndarray, size: int = DEFAULT_BACKGROUND_SIZE, seed: int = 0) -> Background:
    """Sample ``size`` rows without replacement (all rows if fewer), keeping source order."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ConfigError("cannot build a background from zero rows")
    if size >= X.shape[0]:
        return Background(X.copy(), seed)
    idx = np.sort(np.random.default_rng(seed).choice(X.shape[0], size=size, replace=False))
    return Background(X[idx], seed)


@dataclass
class ShapResult:
    base_value: float
    phi: np.ndarray
    row_ids: list[str]
    feature_names: list[str]

    def predictions(self) -> np.ndarray:
        return self.base_value + self.phi.sum(axis=1)

    def to_csv(self, path: str | Path, header_path: str | Path | None = None) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", "feature", "phi"])
            for i, rid in enumerate(self.row_ids):
                for j, name in enumerate(self.feature_names):
                    w.writerow([rid, name, repr(float(self.phi[i, j]))])
        if header_path is not None:
            header = {
                "base_value": self.base_value,
                "feature_names": self.feature_names,
                "n_rows": len(self.row_ids),
                "value_function": "interventional",
            }
            Path(header_path).write_text(json.dumps(header, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path, header_path: str | Path) -> "ShapResult":
        header = json.loads(Path(header_path).read_text(encoding="utf-8"))
        names = header["feature_names"]
        col = {n: j for j, n in enumerate(names)}
        rows: dict[str, np.ndarray] = {}
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                rid = rec["row_id"]
                if rid not in rows:
                    rows[rid] = np.zeros(len(names))
                if rec["feature"] not in col:
                    raise SchemaError(f"unknown feature {rec['feature']!r} in {path}", column=rec["feature"])
                rows[rid][col[rec["feature"]]] = float(rec["phi"])
        ids = list(rows)
        phi = np.vstack([rows[r] for r in ids]) if ids else np.zeros((0, len(names)))
        return cls(float(header["base_value"]), phi, ids, list(names))


@dataclass
class InteractionTensor:
    """``phi2[k, i, j]``: main effects on the diagonal, symmetric off-diagonal
    halves, so ``phi2[k, i].sum() == phi[k, i]``."""

    base_value: float
    phi2: np.ndarray
    row_ids: list[str]
    feature_names: list[str]
    phi: np.ndarray = field(default=None)

    def __post_init__(self) -> None:
        if self.phi is None:
            self.phi = self.phi2.sum(axis=2)

    def pair(self, a: str, b: str) -> np.ndarray:
        return self.phi2[:, self.index_of(a), self.index_of(b)]

    def index_of(self, name: str) -> int:
        try:
            return self.feature_names.index(name)
        except ValueError:
            raise SchemaError(f"unknown feature {name!r}", column=name) from None

    def to_csv(self, path: str | Path) -> None:
        p = len(self.feature_names)
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", "feature_i", "feature_j", "phi_ij"])
            for k, rid in enumerate(self.row_ids):
                for i in range(p):
                    for j in range(i, p):
                        w.writerow([rid, self.feature_names[i], self.feature_names[j], repr(float(self.phi2[k, i, j]))])


# ---------------------------------------------------------------- leaf boxes


@nb.njit(cache=True)
def _extract_leaves(roots, feature, threshold, left, right, value, lr, max_depth, n_leaves):
    K = max(max_depth, 1)
    leaf_feat = np.full((n_leaves, K), -1, np.int64)
    leaf_lo = np.full((n_leaves, K), -np.inf)
    leaf_hi = np.full((n_leaves, K), np.inf)
    leaf_val = np.zeros(n_leaves)
    path_f = np.zeros(max_depth + 1, np.int64)
    path_t = np.zeros(max_depth + 1)
    path_left = np.zeros(max_depth + 1, np.bool_)
    stack_node = np.zeros(2 * (max_depth + 2), np.int64)
    stack_depth = np.zeros(2 * (max_depth + 2), np.int64)
    stack_f = np.zeros(2 * (max_depth + 2), np.int64)
    stack_t = np.zeros(2 * (max_depth + 2))
    stack_left = np.zeros(2 * (max_depth + 2), np.bool_)
    n_out = 0
    k_max = 0
    for t in range(roots.shape[0]):
        sp = 0
        stack_node[0] = roots[t]
        stack_depth[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            nd = stack_node[sp]
            d = stack_depth[sp]
            if d > 0:
                path_f[d - 1] = stack_f[sp]
                path_t[d - 1] = stack_t[sp]
                path_left[d - 1] = stack_left[sp]
            if feature[nd] < 0:
                k = 0
                for e in range(d):
                    f = path_f[e]
                    pos = -1
                    for q in range(k):
                        if leaf_feat[n_out, q] == f:
                            pos = q
                    if pos < 0:
                        pos = k
                        leaf_feat[n_out, pos] = f
                        k += 1
                    if path_left[e]:
                        if path_t[e] < leaf_hi[n_out, pos]:
                            leaf_hi[n_out, pos] = path_t[e]
                    else:
                        if path_t[e] > leaf_lo[n_out, pos]:
                            leaf_lo[n_out, pos] = path_t[e]
                leaf_val[n_out] = lr * value[nd]
                if k > k_max:
                    k_max = k
                n_out += 1
            else:
                stack_node[sp] = right[nd]
                stack_depth[sp] = d + 1
                stack_f[sp] = feature[nd]
                stack_t[sp] = threshold[nd]
                stack_left[sp] = False
                sp += 1
                stack_node[sp] = left[nd]
                stack_depth[sp] = d + 1
                stack_f[sp] = feature[nd]
                stack_t[sp] = threshold[nd]
                stack_left[sp] = True
                sp += 1
    return leaf_feat, leaf_lo, leaf_hi, leaf_val, k_max


@dataclass(frozen=True)
class _Leaves:
    feat: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    val: np.ndarray
    width: int

    @property
    def n(self) -> int:
        return self.val.shape[0]


def _leaves(model: BoostedModel) -> _Leaves:
    roots, feat, thr, left, right, val = model._pack()
    n_leaves = int(np.sum(feat < 0))
    if n_leaves == 0:
        return _Leaves(np.zeros((0, 1), np.int64), np.zeros((0, 1)), np.zeros((0, 1)), np.zeros(0), 0)
    max_depth = max(t.depth() for t in model.trees)
    lf, lo, hi, lv, k = _extract_leaves(roots, feat, thr, left, right, val, model.learning_rate, max_depth, n_leaves)
    # leaves with no path constraints are constants and never contribute
    keep = lf[:, 0] >= 0
    width = max(int(k), 1)
    return _Leaves(
        np.ascontiguousarray(lf[keep, :width]),
        np.ascontiguousarray(lo[keep, :width]),
        np.ascontiguousarray(hi[keep, :width]),
        np.ascontiguousarray(lv[keep]),
        int(k),
    )


# ---------------------------------------------------------------- weights


def _shapley_weights(K: int) -> tuple[np.ndarray, np.ndarray]:
    """w_in[a, c] for a feature x alone satisfies, w_out[a, c] for one b alone satisfies."""
    w_in = np.zeros((K + 1, K + 1))
    w_out = np.zeros((K + 1, K + 1))
    f = math.factorial
    for a in range(K + 1):
        for c in range(K + 1 - a):
            m = a + c
            if a >= 1:
                w_in[a, c] = f(a - 1) * f(c) / f(m)
            if c >= 1:
                w_out[a, c] = f(a) * f(c - 1) / f(m)
    return w_in, w_out


def _interaction_weights(K: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half Shapley-interaction weights for pairs in A x A, A x B and B x B."""
    w_aa = np.zeros((K + 1, K + 1))
    w_ab = np.zeros((K + 1, K + 1))
    w_bb = np.zeros((K + 1, K + 1))
    f = math.factorial
    for a in range(K + 1):
        for c in range(K + 1 - a):
            m = a + c
            if m < 2:
                continue
            denom = 2.0 * f(m - 1)
            if a >= 2:
                w_aa[a, c] = f(a - 2) * f(c) / denom
            if a >= 1 and c >= 1:
                w_ab[a, c] = f(a - 1) * f(c - 1) / denom
            if c >= 2:
                w_bb[a, c] = f(a) * f(c - 2) / denom
    return w_aa, w_ab, w_bb


@nb.njit(cache=True)
def _popcount(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@nb.njit(cache=True)
def _pattern_counts(feat, lo, hi, B):
    L, K = feat.shape
    P = 1 << K
    counts = np.zeros((L, P), np.int64)
    for l in range(L):
        for r in range(B.shape[0]):
            bits = 0
            for q in range(K):
                f = feat[l, q]
                if f < 0:
                    bits |= 1 << q
                else:
                    x = B[r, f]
                    if x > lo[l, q] and x <= hi[l, q]:
                        bits |= 1 << q
            counts[l, bits] += 1
    return counts


@nb.njit(cache=True)
def _main_tables(counts, val, m, w_in, w_out):
    L, P = counts.shape
    K = 0
    while (1 << K) < P:
        K += 1
    full = P - 1
    T = np.zeros((L, P, K))
    for l in range(L):
        scale = val[l] / m
        for pb in range(P):
            cnt = counts[l, pb]
            if cnt == 0:
                continue
            for px in range(P):
                if (px | pb) != full:
                    continue
                A = px & ~pb
                Bm = pb & ~px
                a = _popcount(A)
                c = _popcount(Bm)
                if a + c == 0:
                    continue
                gi = cnt * w_in[a, c]
                go = cnt * w_out[a, c]
                for q in range(K):
                    bit = 1 << q
                    if A & bit:
                        T[l, px, q] += gi
                    elif Bm & bit:
                        T[l, px, q] -= go
        for px in range(P):
            for q in range(K):
                T[l, px, q] *= scale
    return T


@nb.njit(cache=True)
def _pair_tables(counts, val, m, pair_a, pair_b, w_aa, w_ab, w_bb):
    L, P = counts.shape
    n_pairs = pair_a.shape[0]
    full = P - 1
    T2 = np.zeros((L, P, n_pairs))
    for l in range(L):
        scale = val[l] / m
        for pb in range(P):
            cnt = counts[l, pb]
            if cnt == 0:
                continue
            for px in range(P):
                if (px | pb) != full:
                    continue
                A = px & ~pb
                Bm = pb & ~px
                a = _popcount(A)
                c = _popcount(Bm)
                if a + c < 2:
                    continue
                for s in range(n_pairs):
                    ba = 1 << pair_a[s]
                    bb = 1 << pair_b[s]
                    in_a = (A & ba) != 0
                    in_b = (A & bb) != 0
                    out_a = (Bm & ba) != 0
                    out_b = (Bm & bb) != 0
                    if in_a and in_b:
                        T2[l, px, s] += cnt * w_aa[a, c]
                    elif (in_a and out_b) or (out_a and in_b):
                        T2[l, px, s] -= cnt * w_ab[a, c]
                    elif out_a and out_b:
                        T2[l, px, s] += cnt * w_bb[a, c]
        for px in range(P):
            for s in range(n_pairs):
                T2[l, px, s] *= scale
    return T2


@nb.njit(cache=True, parallel=True)
def _accumulate_main(X, feat, lo, hi, T, phi):
    L, K = feat.shape
    for i in nb.prange(X.shape[0]):
        for l in range(L):
            px = 0
            for q in range(K):
                f = feat[l, q]
                if f < 0:
                    px |= 1 << q
                else:
                    x = X[i, f]
                    if x > lo[l, q] and x <= hi[l, q]:
                        px |= 1 << q
            for q in range(K):
                f = feat[l, q]
                if f >= 0:
                    phi[i, f] += T[l, px, q]


@nb.njit(cache=True, parallel=True)
def _accumulate_pairs(X, feat, lo, hi, T2, pair_a, pair_b, phi2):
    L, K = feat.shape
    n_pairs = pair_a.shape[0]
    for i in nb.prange(X.shape[0]):
        for l in range(L):
            px = 0
            for q in range(K):
                f = feat[l, q]
                if f < 0:
                    px |= 1 << q
                else:
                    x = X[i, f]
                    if x > lo[l, q] and x <= hi[l, q]:
                        px |= 1 << q
            for s in range(n_pairs):
                fa = feat[l, pair_a[s]]
                fb = feat[l, pair_b[s]]
                if fa < 0 or fb < 0:
                    continue
                v = T2[l, px, s]
                phi2[i, fa, fb] += v
                phi2[i, fb, fa] += v


# ---------------------------------------------------------------- public API


def _prepare(model: BoostedModel, rows: np.ndarray, background: Background) -> tuple[np.ndarray, np.ndarray]:
    X = model.check_rows(rows)
    B = model.check_rows(background.rows)
    return X, B


def _chunks(n_leaves: int, bytes_per_leaf: int):
    step = max(1, _LEAF_CHUNK_BYTES // max(bytes_per_leaf, 1))
    for start in range(0, n_leaves, step):
        yield start, min(n_leaves, start + step)


def _row_ids(row_ids: Sequence[str] | None, n: int) -> list[str]:
    if row_ids is None:
        return [str(i) for i in range(n)]
    if len(row_ids) != n:
        raise SchemaError(f"{len(row_ids)} row ids for {n} rows")
    return [str(r) for r in row_ids]


def _feature_names(model: BoostedModel) -> list[str]:
    return list(model.feature_names) or [f"x{j}" for j in range(model.n_features)]


def shap_values(
    model: BoostedModel,
    rows: np.ndarray,
    background: Background,
    row_ids: Sequence[str] | None = None,
    progress: Callable[[int, int], None] | None = None,
) -> ShapResult:
    X, B = _prepare(model, rows, background)
    base = float(np.mean(predict(model, B)))
    phi = np.zeros((X.shape[0], model.n_features))
    lv = _leaves(model)
    if lv.width > 0 and lv.n > 0:
        K = lv.width
        P = 1 << K
        w_in, w_out = _shapley_weights(K)
        for lo_i, hi_i in _chunks(lv.n, P * (K + 1) * 8):
            sl = slice(lo_i, hi_i)
            counts = _pattern_counts(lv.feat[sl], lv.lo[sl], lv.hi[sl], B)
            T = _main_tables(counts, lv.val[sl], float(B.shape[0]), w_in, w_out)
            _accumulate_main(X, lv.feat[sl], lv.lo[sl], lv.hi[sl], T, phi)
            if progress is not None:
                progress(hi_i, lv.n)
    return ShapResult(base, phi, _row_ids(row_ids, X.shape[0]), _feature_names(model))


def shap_interactions(
    model: BoostedModel,
    rows: np.ndarray,
    background: Background,
    row_ids: Sequence[str] | None = None,
    max_features: int = DEFAULT_INTERACTION_GUARD,
    progress: Callable[[int, int], None] | None = None,
) -> InteractionTensor:
    X, B = _prepare(model, rows, background)
    p = model.n_features
    if p > max_features:
        raise ConfigError(f"{p} features exceeds the interaction guard of {max_features}")
    main = shap_values(model, X, background, row_ids)
    phi2 = np.zeros((X.shape[0], p, p))
    lv = _leaves(model)
    if lv.width > 1 and lv.n > 0:
        K = lv.width
        P = 1 << K
        pairs = np.array(list(combinations(range(K), 2)), dtype=np.int64)
        pair_a = np.ascontiguousarray(pairs[:, 0])
        pair_b = np.ascontiguousarray(pairs[:, 1])
        w_aa, w_ab, w_bb = _interaction_weights(K)
        for lo_i, hi_i in _chunks(lv.n, P * (len(pairs) + 1) * 8):
            sl = slice(lo_i, hi_i)
            counts = _pattern_counts(lv.feat[sl], lv.lo[sl], lv.hi[sl], B)
            T2 = _pair_tables(counts, lv.val[sl], float(B.shape[0]), pair_a, pair_b, w_aa, w_ab, w_bb)
            _accumulate_pairs(X, lv.feat[sl], lv.lo[sl], lv.hi[sl], T2, pair_a, pair_b, phi2)
            if progress is not None:
                progress(hi_i, lv.n)
    diag = np.arange(p)
    off = phi2.sum(axis=2)
    phi2[:, diag, diag] = main.phi - off
    return InteractionTensor(main.base_value, phi2, main.row_ids, main.feature_names, phi=main.phi)


# ---------------------------------------------------------------- oracle


def _coalition_values(model: BoostedModel, x: np.ndarray, background: Background) -> np.ndarray:
    x = model.check_rows(x)[0]
    B = model.check_rows(background.rows)
    p = x.shape[0]
    if p > MAX_BRUTE_FORCE_FEATURES:
        raise ConfigError(f"brute force enumeration limited to {MAX_BRUTE_FORCE_FEATURES} features, got {p}")
    n_sets = 1 << p
    v = np.empty(n_sets)
    bits = 1 << np.arange(p)
    block = max(1, 2**16 // B.shape[0])
    for start in range(0, n_sets, block):
        masks = np.arange(start, min(n_sets, start + block))
        present = (masks[:, None] & bits[None, :]) != 0
        hybrid = np.where(present[:, None, :], x[None, None, :], B[None, :, :])
        out = predict(model, hybrid.reshape(-1, p)).reshape(len(masks), B.shape[0])
        v[masks] = out.mean(axis=1)
    return v


def brute_force_shap(model: BoostedModel, row: np.ndarray, background: Background) -> np.ndarray:
    """Shapley values by literal enumeration of every coalition (p <= 20)."""
    v = _coalition_values(model, row, background)
    p = model.n_features
    fact = [math.factorial(k) for k in range(p + 1)]
    masks = np.arange(1 << p)
    sizes = np.array([bin(s).count("1") for s in range(1 << p)])
    phi = np.zeros(p)
    for i in range(p):
        without = masks[(masks & (1 << i)) == 0]
        s = sizes[without]
        w = np.array([fact[k] * fact[p - k - 1] / fact[p] for k in s])
        phi[i] = np.sum(w * (v[without | (1 << i)] - v[without]))
    return phi


def brute_force_interactions(model: BoostedModel, row: np.ndarray, background: Background) -> np.ndarray:
    """SHAP interaction matrix by enumeration; off-diagonals carry the 1/2 convention."""
    v = _coalition_values(model, row, background)
    p = model.n_features
    fact = [math.factorial(k) for k in range(p + 1)]
    masks = np.arange(1 << p)
    sizes = np.array([bin(s).count("1") for s in range(1 << p)])
    out = np.zeros((p, p))
    for i in range(p):
        for j in range(i + 1, p):
            bi, bj = 1 << i, 1 << j
            S = masks[(masks & (bi | bj)) == 0]
            k = sizes[S]
            w = np.array([fact[s] * fact[p - s - 2] / (2.0 * fact[p - 1]) for s in k])
            delta = v[S | bi | bj] - v[S | bi] - v[S | bj] + v[S]
            out[i, j] = out[j, i] = np.sum(w * delta)
    phi = brute_force_shap(model, row, background)
    for i in range(p):
        out[i, i] = phi[i] - (out[i].sum() - out[i, i])
    return out
