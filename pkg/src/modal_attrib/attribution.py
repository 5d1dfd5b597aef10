"""Summaries of point-level SHAP: feature-weighted betas, rankings, beeswarm data."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data_model import FeatureTable
from .errors import ConfigError, JoinError, SchemaError
from .shapley import ShapResult

CENTERINGS = ("half", "mean", "median")
NORMALIZATIONS = ("mean", "sum")
BOOT_BLOCK = 100


@dataclass(frozen=True)
class FeatureBeta:
    feature: str
    modality: str
    beta_shap: float
    mean_abs_phi: float
    n: int
    ci_lo: float | None = None
    ci_hi: float | None = None


@dataclass
class BetaSummary:
    features: list[FeatureBeta]
    centering: str = "half"
    normalization: str = "mean"
    ci_method: str | None = "percentile_bootstrap"
    n_boot: int = 0
    seed: int = 0
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> FeatureBeta:
        for f in self.features:
            if f.feature == name:
                return f
        raise KeyError(name)

    def betas(self) -> dict[str, float]:
        return {f.feature: f.beta_shap for f in self.features}

    def metadata(self) -> dict:
        return {
            "centering": self.centering,
            "normalization": self.normalization,
            "ci_method": self.ci_method,
            "ci_level": 0.95 if self.ci_method else None,
            "n_boot": self.n_boot,
            "seed": self.seed,
            "note": "interval bars are a seeded percentile bootstrap over rows",
            **self.meta,
        }

    def to_csv(self, path: str | Path, meta_path: str | Path | None = None) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["feature", "modality", "beta_shap", "ci_lo", "ci_hi", "mean_abs_phi", "n"])
            for f in self.features:
                w.writerow([
                    f.feature, f.modality, repr(f.beta_shap),
                    "" if f.ci_lo is None else repr(f.ci_lo),
                    "" if f.ci_hi is None else repr(f.ci_hi),
                    repr(f.mean_abs_phi), f.n,
                ])
        if meta_path is not None:
            Path(meta_path).write_text(json.dumps(self.metadata(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_csv(cls, path: str | Path, meta_path: str | Path | None = None) -> "BetaSummary":
        feats = []
        with Path(path).open(newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(fh):
                feats.append(FeatureBeta(
                    feature=rec["feature"],
                    modality=rec["modality"],
                    beta_shap=float(rec["beta_shap"]),
                    mean_abs_phi=float(rec["mean_abs_phi"]),
                    n=int(rec["n"]),
                    ci_lo=float(rec["ci_lo"]) if rec["ci_lo"] else None,
                    ci_hi=float(rec["ci_hi"]) if rec["ci_hi"] else None,
                ))
        meta = json.loads(Path(meta_path).read_text(encoding="utf-8")) if meta_path else {}
        return cls(
            feats,
            centering=meta.get("centering", "half"),
            normalization=meta.get("normalization", "mean"),
            ci_method=meta.get("ci_method"),
            n_boot=meta.get("n_boot", 0),
            seed=meta.get("seed", 0),
        )


def align(shap: ShapResult, table: FeatureTable) -> tuple[np.ndarray, np.ndarray]:
    """Row indices into ``table`` matching ``shap.row_ids`` and column indices matching its features."""
    pos = {r: i for i, r in enumerate(table.row_ids)}
    try:
        rows = np.array([pos[r] for r in shap.row_ids], dtype=np.int64)
    except KeyError as exc:
        raise JoinError(f"SHAP row {exc.args[0]!r} not present in the feature table") from None
    names = table.feature_names
    missing = [f for f in shap.feature_names if f not in names]
    if missing:
        raise JoinError(f"SHAP features not in table: {missing}")
    cols = np.array([names.index(f) for f in shap.feature_names], dtype=np.int64)
    return rows, cols


def centered_weights(x: np.ndarray, centering: str = "half") -> np.ndarray:
    """Rescale 0-100 values to the unit interval and center them."""
    if centering not in CENTERINGS:
        raise ConfigError(f"centering must be one of {CENTERINGS}")
    x = np.ascontiguousarray(x, dtype=np.float64)
    if centering == "half":
        return x / 100.0 - 0.5
    if centering == "median":
        u = x / 100.0
        return u - np.median(u)
    sd = x.std()
    if sd == 0:
        return np.zeros_like(x)
    return (x - x.mean()) / sd


def _weighted(xt: np.ndarray, phi: np.ndarray, normalization: str) -> float:
    s = float(np.sum(np.ascontiguousarray(xt) * np.ascontiguousarray(phi)))
    return s / len(phi) if normalization == "mean" else s


def beta_shap(
    shap: ShapResult,
    table: FeatureTable,
    centering: str = "half",
    normalization: str = "mean",
    n_boot: int = 1000,
    seed: int = 0,
) -> BetaSummary:
    """Feature-weighted SHAP: mean (or sum) over rows of centered value times phi.

    ``n_boot=0`` skips the bootstrap interval.
    """
    if normalization not in NORMALIZATIONS:
        raise ConfigError(f"normalization must be one of {NORMALIZATIONS}")
    rows, cols = align(shap, table)
    n = len(rows)
    modality = {c.name: c.modality for c in table.schema}
    xt = np.column_stack([centered_weights(table.values[rows, c], centering) for c in cols]) if n else np.zeros((0, len(cols)))
    betas = [_weighted(xt[:, j], shap.phi[:, j], normalization) if n else 0.0 for j in range(len(cols))]

    lo = hi = [None] * len(cols)
    if n_boot > 0 and n > 0:
        prod = xt * shap.phi
        rng = np.random.default_rng(seed)
        boots = np.empty((n_boot, len(cols)))
        for start in range(0, n_boot, BOOT_BLOCK):
            k = min(BOOT_BLOCK, n_boot - start)
            w = rng.multinomial(n, np.full(n, 1.0 / n), size=k).astype(np.float64)
            boots[start:start + k] = w @ prod
        if normalization == "mean":
            boots /= n
        lo = np.percentile(boots, 2.5, axis=0).tolist()
        hi = np.percentile(boots, 97.5, axis=0).tolist()

    features = [
        FeatureBeta(
            feature=name,
            modality=modality[name],
            beta_shap=betas[j],
            mean_abs_phi=float(np.mean(np.abs(shap.phi[:, j]))) if n else 0.0,
            n=n,
            ci_lo=lo[j],
            ci_hi=hi[j],
        )
        for j, name in enumerate(shap.feature_names)
    ]
    return BetaSummary(
        features,
        centering=centering,
        normalization=normalization,
        ci_method="percentile_bootstrap" if n_boot > 0 else None,
        n_boot=n_boot,
        seed=seed,
    )


def _desc_key(f: FeatureBeta):
    return (-f.beta_shap, -f.mean_abs_phi, f.feature)


def ordered(summary: BetaSummary | Iterable[FeatureBeta]) -> list[FeatureBeta]:
    feats = summary.features if isinstance(summary, BetaSummary) else list(summary)
    return sorted(feats, key=_desc_key)


def importance_ranking(
    summary: BetaSummary,
    top_k_pos: int = 5,
    top_k_neg: int = 5,
    group_by_modality: bool = True,
) -> dict[str, dict[str, list[FeatureBeta]]]:
    """Per modality (or ``"all"``): strongest positive betas first, most negative first.

    Ties fall back to larger mean |phi|, then feature name.
    """
    if top_k_pos < 0 or top_k_neg < 0:
        raise ConfigError("top_k values must be >= 0")
    groups: dict[str, list[FeatureBeta]] = {}
    for f in summary.features:
        groups.setdefault(f.modality if group_by_modality else "all", []).append(f)
    out = {}
    for key in sorted(groups):
        feats = groups[key]
        pos = sorted((f for f in feats if f.beta_shap > 0), key=_desc_key)[:top_k_pos]
        neg = sorted((f for f in feats if f.beta_shap < 0), key=lambda f: (f.beta_shap, -f.mean_abs_phi, f.feature))[:top_k_neg]
        out[key] = {"positive": pos, "negative": neg}
    return out


def ranking_to_json(ranking: dict) -> dict:
    return {k: {side: [asdict(f) for f in v[side]] for side in ("positive", "negative")} for k, v in ranking.items()}


def beeswarm_export(
    shap: ShapResult,
    table: FeatureTable,
    features: Sequence[str] | None = None,
    summary: BetaSummary | None = None,
) -> list[dict]:
    """Long-format beeswarm records, features in ranking order, rows in SHAP order."""
    rows, cols = align(shap, table)
    col_of = dict(zip(shap.feature_names, cols))
    phi_col = {name: j for j, name in enumerate(shap.feature_names)}
    wanted = list(shap.feature_names) if features is None else list(features)
    for f in wanted:
        if f not in phi_col:
            raise SchemaError(f"unknown feature {f!r}", column=f)
    if summary is None:
        summary = beta_shap(shap, table, n_boot=0)
    order = [f.feature for f in ordered(summary) if f.feature in set(wanted)]
    modality = {c.name: c.modality for c in table.schema}
    records = []
    for name in order:
        j = phi_col[name]
        xs = table.values[rows, col_of[name]]
        for k, rid in enumerate(shap.row_ids):
            records.append({
                "feature": name,
                "modality": modality[name],
                "row_id": rid,
                "phi": float(shap.phi[k, j]),
                "feature_value": float(xs[k]),
            })
    return records


def write_jsonl(records: Iterable[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")


def read_jsonl(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def beta_from_beeswarm(records: Iterable[dict], centering: str = "half", normalization: str = "mean") -> dict[str, float]:
    by_feature: dict[str, tuple[list[float], list[float]]] = {}
    for rec in records:
        xs, ps = by_feature.setdefault(rec["feature"], ([], []))
        xs.append(rec["feature_value"])
        ps.append(rec["phi"])
    return {
        name: _weighted(centered_weights(np.array(xs), centering), np.array(ps), normalization)
        for name, (xs, ps) in by_feature.items()
    }
