"""Quadrant analysis of pairwise SHAP interaction surfaces.

Both features are split at a threshold (value strictly above -> "+", else
"-"), and within each of the four cells the response is regressed on a
regressor by least squares. The four slopes are then matched against three
sign templates: a threshold on x (flat left of x0, diverging right of it),
its transpose with the threshold on y, and a sign change that follows the
sign of the centered product.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .data_model import FeatureTable
from .errors import ConfigError, JoinError
from .shapley import InteractionTensor

QUADRANTS = (("-", "-"), ("-", "+"), ("+", "-"), ("+", "+"))
PATTERNS = ("x_threshold", "y_threshold", "symmetric_sign_change", "none")
THRESHOLD_MODES = ("median", "fixed50")
REGRESSOR_MODES = ("x_value", "centered_product")
RESPONSES = ("joint", "interaction")
TOL_FRACTION = 0.25
TOL_FLOOR = 0.05


def quadrant_label(q: tuple[str, str]) -> str:
    return f"({q[0]},{q[1]})"


@dataclass(frozen=True)
class QuadrantFit:
    quadrant: str
    n: int
    beta: float | None
    r: float | None
    mean_response: float | None
    status: str  # ok | insufficient | degenerate


@dataclass
class QuadrantReport:
    feature_x: str
    feature_y: str
    x0: float
    y0: float
    quadrants: list[QuadrantFit]
    pattern: str
    tolerance: float
    regressor_mode: str = "x_value"
    response: str = "joint"
    threshold_mode: str = "median"
    fit_intercept: bool = False
    meta: dict = field(default_factory=dict)

    def betas(self) -> list[float]:
        return [0.0 if q.beta is None else q.beta for q in self.quadrants]

    def beta(self, quadrant: str) -> float | None:
        for q in self.quadrants:
            if q.quadrant == quadrant:
                return q.beta
        raise KeyError(quadrant)

    def summary(self) -> dict:
        return {
            "feature_x": self.feature_x,
            "feature_y": self.feature_y,
            "x0": self.x0,
            "y0": self.y0,
            "pattern": self.pattern,
            "tolerance": self.tolerance,
            "regressor_mode": self.regressor_mode,
            "response": self.response,
            "threshold_mode": self.threshold_mode,
            "fit_intercept": self.fit_intercept,
            "betas": {q.quadrant: q.beta for q in self.quadrants},
            "correlations": {q.quadrant: q.r for q in self.quadrants},
            "counts": {q.quadrant: q.n for q in self.quadrants},
        }


def default_tolerance(betas: Sequence[float]) -> float:
    return max(TOL_FRACTION * max((abs(b) for b in betas), default=0.0), TOL_FLOOR)


def classify_pattern(betas: Sequence[float], tol: float | None = None) -> str:
    """Match quadrant slopes ordered (-,-), (-,+), (+,-), (+,+) to a pattern.

    A slope counts as flat when its magnitude is below ``tol``. Checked in
    order: sign change following the quadrant product (either orientation),
    then threshold on x, then threshold on y.
    """
    mm, mp, pm, pp = (float(b) for b in betas)
    if tol is None:
        tol = default_tolerance((mm, mp, pm, pp))
    if not tol > 0:
        raise ConfigError("tolerance must be > 0")

    def flat(b: float) -> bool:
        return abs(b) < tol

    if not any(flat(b) for b in (mm, mp, pm, pp)):
        signs = np.sign([mm, mp, pm, pp])
        template = np.array([1.0, -1.0, -1.0, 1.0])
        if np.all(signs == template) or np.all(signs == -template):
            return "symmetric_sign_change"
    if flat(mm) and flat(mp) and abs(pp - pm) >= tol:
        return "x_threshold"
    if flat(mm) and flat(pm) and abs(pp - mp) >= tol:
        return "y_threshold"
    return "none"


def _threshold(table: FeatureTable, name: str, values: np.ndarray, mode: str) -> float:
    if mode == "fixed50":
        return 50.0
    kind = table.schema[table.index_of(name)].kind
    if kind in ("probabilistic", "binary"):
        return 50.0
    return float(np.median(values))


def _align_rows(tensor: InteractionTensor, table: FeatureTable) -> np.ndarray:
    pos = {r: i for i, r in enumerate(table.row_ids)}
    try:
        return np.array([pos[r] for r in tensor.row_ids], dtype=np.int64)
    except KeyError as exc:
        raise JoinError(f"tensor row {exc.args[0]!r} not present in the feature table") from None


def pair_response(tensor: InteractionTensor, feature_x: str, feature_y: str, response: str = "joint") -> np.ndarray:
    """``interaction``: phi_xy. ``joint``: phi_xx + phi_yy + 2 phi_xy, the pair's share of the prediction."""
    if response not in RESPONSES:
        raise ConfigError(f"response must be one of {RESPONSES}")
    i, j = tensor.index_of(feature_x), tensor.index_of(feature_y)
    if i == j:
        raise ConfigError("quadrant analysis needs two distinct features")
    if response == "interaction":
        return tensor.phi2[:, i, j].copy()
    return tensor.phi2[:, i, i] + tensor.phi2[:, j, j] + 2.0 * tensor.phi2[:, i, j]


def _fit(reg: np.ndarray, z: np.ndarray, fit_intercept: bool) -> tuple[float | None, float | None, str]:
    if len(z) < 2:
        return None, None, "insufficient"
    if fit_intercept:
        rc = reg - reg.mean()
        sxx = float(rc @ rc)
        if sxx == 0.0:
            return None, None, "degenerate"
        beta = float(rc @ (z - z.mean())) / sxx
    else:
        sxx = float(reg @ reg)
        if sxx == 0.0:
            return None, None, "degenerate"
        beta = float(reg @ z) / sxx
    r = None
    if np.std(reg) > 0 and np.std(z) > 0:
        r = float(np.clip(np.corrcoef(reg, z)[0, 1], -1.0, 1.0))
    return beta, r, "ok"


def quadrant_regression(
    tensor: InteractionTensor,
    table: FeatureTable,
    feature_x: str,
    feature_y: str,
    threshold_mode: str = "median",
    regressor_mode: str = "x_value",
    response: str = "joint",
    fit_intercept: bool = False,
    tol: float | None = None,
) -> QuadrantReport:
    """Per-quadrant least-squares slope of the pair response on the regressor.

    Regressors live on the unit scale: ``x_value`` is x/100 and
    ``centered_product`` is (x - x0)(y - y0)/100^2. Without an intercept the
    slope is the regressor-weighted level of the response in that quadrant.
    """
    if threshold_mode not in THRESHOLD_MODES:
        raise ConfigError(f"threshold_mode must be one of {THRESHOLD_MODES}")
    if regressor_mode not in REGRESSOR_MODES:
        raise ConfigError(f"regressor_mode must be one of {REGRESSOR_MODES}")
    rows = _align_rows(tensor, table)
    x = table.values[rows, table.index_of(feature_x)]
    y = table.values[rows, table.index_of(feature_y)]
    z = pair_response(tensor, feature_x, feature_y, response)
    x0 = _threshold(table, feature_x, x, threshold_mode)
    y0 = _threshold(table, feature_y, y, threshold_mode)
    if regressor_mode == "x_value":
        reg = x / 100.0
    else:
        reg = (x - x0) * (y - y0) / 10000.0

    fits = []
    for qx, qy in QUADRANTS:
        mask = ((x > x0) == (qx == "+")) & ((y > y0) == (qy == "+"))
        beta, r, status = _fit(reg[mask], z[mask], fit_intercept)
        fits.append(QuadrantFit(
            quadrant=quadrant_label((qx, qy)),
            n=int(mask.sum()),
            beta=beta,
            r=r,
            mean_response=float(z[mask].mean()) if mask.any() else None,
            status=status,
        ))
    betas = [0.0 if f.beta is None else f.beta for f in fits]
    tol = default_tolerance(betas) if tol is None else tol
    return QuadrantReport(
        feature_x=feature_x,
        feature_y=feature_y,
        x0=x0,
        y0=y0,
        quadrants=fits,
        pattern=classify_pattern(betas, tol),
        tolerance=tol,
        regressor_mode=regressor_mode,
        response=response,
        threshold_mode=threshold_mode,
        fit_intercept=fit_intercept,
    )


def top_interacting_pairs(tensor: InteractionTensor, k: int = 10) -> list[tuple[str, str, float]]:
    """Off-diagonal pairs by mean |phi_ij|, ties broken by name pair."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    names = tensor.feature_names
    p = len(names)
    if tensor.phi2.shape[0] == 0:
        scores = np.zeros((p, p))
    else:
        scores = np.abs(tensor.phi2).mean(axis=0)
    pairs = []
    for i in range(p):
        for j in range(i + 1, p):
            a, b = sorted((names[i], names[j]))
            pairs.append((a, b, float(scores[i, j])))
    pairs.sort(key=lambda t: (-t[2], t[0], t[1]))
    return pairs[:k]


def write_quadrant_csv(reports: Sequence[QuadrantReport], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature_x", "feature_y", "quadrant", "n", "beta", "r", "mean_response", "status",
                    "x0", "y0", "regressor_mode", "response"])
        for rep in reports:
            for q in rep.quadrants:
                w.writerow([
                    rep.feature_x, rep.feature_y, q.quadrant, q.n,
                    "" if q.beta is None else repr(q.beta),
                    "" if q.r is None else repr(q.r),
                    "" if q.mean_response is None else repr(q.mean_response),
                    q.status, repr(rep.x0), repr(rep.y0), rep.regressor_mode, rep.response,
                ])


def write_patterns_json(reports: Sequence[QuadrantReport], path: str | Path) -> None:
    Path(path).write_text(json.dumps([r.summary() for r in reports], indent=2) + "\n", encoding="utf-8")


def scatter_records(tensor: InteractionTensor, table: FeatureTable, feature_x: str, feature_y: str) -> list[dict]:
    rows = _align_rows(tensor, table)
    x = table.values[rows, table.index_of(feature_x)]
    y = table.values[rows, table.index_of(feature_y)]
    phi = tensor.pair(feature_x, feature_y)
    joint = pair_response(tensor, feature_x, feature_y, "joint")
    return [
        {"feature_x": feature_x, "feature_y": feature_y, "row_id": rid,
         "x": float(x[k]), "y": float(y[k]), "phi_xy": float(phi[k]), "joint": float(joint[k])}
        for k, rid in enumerate(tensor.row_ids)
    ]


__all__ = [
    "QUADRANTS",
    "QuadrantFit",
    "QuadrantReport",
    "classify_pattern",
    "default_tolerance",
    "pair_response",
    "quadrant_regression",
    "scatter_records",
    "top_interacting_pairs",
    "write_patterns_json",
    "write_quadrant_csv",
]
