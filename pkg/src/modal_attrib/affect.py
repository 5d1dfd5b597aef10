"""Facial-emotion aggregation and emotion-weighted sentiment with confidence intervals."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ParseError

EMOTIONS = ("happiness", "sadness", "anger", "fear", "surprise", "disgust", "neutral")
POSITIVE = ("happiness", "surprise", "neutral")
NEGATIVE = ("anger", "disgust", "fear", "sadness")
SOURCES = ("caption", "transcript")
CI_METHODS = ("normal", "bootstrap")


@dataclass(frozen=True)
class AffectRecord:
    """One frame (or one video, if already averaged) with its text sentiments."""

    row_id: str
    happiness: float
    sadness: float
    anger: float
    fear: float
    surprise: float
    disgust: float
    neutral: float
    caption_sentiment: float
    transcript_sentiment: float

    def __post_init__(self) -> None:
        for e in EMOTIONS:
            v = getattr(self, e)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ConfigError(f"{self.row_id}: emotion {e}={v!r} outside [0, 1]")
        for s in ("caption_sentiment", "transcript_sentiment"):
            v = getattr(self, s)
            if not (math.isfinite(v) and -1.0 <= v <= 1.0):
                raise ConfigError(f"{self.row_id}: {s}={v!r} outside [-1, 1]")

    def sentiment(self, source: str) -> float:
        if source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}")
        return getattr(self, f"{source}_sentiment")


def affect_aggregate(records: Iterable[AffectRecord]) -> list[dict]:
    """Per record: positive = mean of happiness, surprise, neutral; negative = mean of the other four."""
    return [
        {
            "row_id": r.row_id,
            "positive_affect": sum(getattr(r, e) for e in POSITIVE) / len(POSITIVE),
            "negative_affect": sum(getattr(r, e) for e in NEGATIVE) / len(NEGATIVE),
        }
        for r in records
    ]


@dataclass(frozen=True)
class AffectCell:
    emotion: str
    source: str
    weighted_mean: float
    ci_lo: float | None
    ci_hi: float | None
    n: int
    ci_method: str = "normal"
    level: float = 0.95


def _video_level(records: Sequence[AffectRecord], emotion: str, source: str) -> tuple[np.ndarray, np.ndarray]:
    """Mean frame emotion per row_id, paired with that row's sentiment (first seen)."""
    groups: dict[str, list[AffectRecord]] = {}
    for r in records:
        groups.setdefault(r.row_id, []).append(r)
    emo = np.array([np.mean([getattr(r, emotion) for r in g]) for g in groups.values()], dtype=np.float64)
    sent = np.array([g[0].sentiment(source) for g in groups.values()], dtype=np.float64)
    return emo, sent


def weighted_sentiment(
    records: Sequence[AffectRecord],
    emotion: str,
    source: str,
    ci: str = "normal",
    level: float = 0.95,
    n_boot: int = 2000,
    seed: int = 0,
    frame_level: bool = False,
) -> AffectCell:
    """Mean of emotion times sentiment over videos (or frames), with a CI.

    The normal interval is mean +/- z * s / sqrt(n) with the sample standard
    deviation; the bootstrap interval is a seeded percentile interval. With
    fewer than two units the interval is left undefined.
    """
    if emotion not in EMOTIONS:
        raise ConfigError(f"emotion must be one of {EMOTIONS}")
    if source not in SOURCES:
        raise ConfigError(f"source must be one of {SOURCES}")
    if ci not in CI_METHODS:
        raise ConfigError(f"ci must be one of {CI_METHODS}")
    if not 0.0 < level < 1.0:
        raise ConfigError("level must be in (0, 1)")
    if frame_level:
        emo = np.array([getattr(r, emotion) for r in records], dtype=np.float64)
        sent = np.array([r.sentiment(source) for r in records], dtype=np.float64)
    else:
        emo, sent = _video_level(records, emotion, source)
    prod = emo * sent
    n = len(prod)
    if n == 0:
        return AffectCell(emotion, source, float("nan"), None, None, 0, ci, level)
    mean = float(prod.mean())
    lo = hi = None
    if n >= 2:
        if ci == "normal":
            half = NormalDist().inv_cdf(0.5 + level / 2.0) * float(prod.std(ddof=1)) / math.sqrt(n)
            lo, hi = mean - half, mean + half
        else:
            rng = np.random.default_rng(seed)
            idx = rng.integers(0, n, size=(n_boot, n))
            boots = prod[idx].mean(axis=1)
            alpha = (1.0 - level) / 2.0
            lo = float(np.quantile(boots, alpha))
            hi = float(np.quantile(boots, 1.0 - alpha))
            # keep the point estimate inside a (possibly skewed) percentile interval
            lo, hi = min(lo, mean), max(hi, mean)
    return AffectCell(emotion, source, mean, lo, hi, n, ci, level)


def affect_comparison(
    records: Sequence[AffectRecord],
    emotions: Sequence[str] = EMOTIONS,
    sources: Sequence[str] = SOURCES,
    **kwargs,
) -> list[AffectCell]:
    return [weighted_sentiment(records, e, s, **kwargs) for e in emotions for s in sources]


def write_comparison_csv(cells: Iterable[AffectCell], path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["emotion", "source", "weighted_mean", "ci_lo", "ci_hi", "n"])
        for c in cells:
            w.writerow([
                c.emotion, c.source, repr(c.weighted_mean),
                "" if c.ci_lo is None else repr(c.ci_lo),
                "" if c.ci_hi is None else repr(c.ci_hi),
                c.n,
            ])


def read_affect_csv(path: str | Path) -> list[AffectRecord]:
    """CSV with row_id, the seven emotions and both sentiment columns."""
    need = ("row_id", *EMOTIONS, "caption_sentiment", "transcript_sentiment")
    out = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in need if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"{path}: missing columns {missing}")
        for lineno, rec in enumerate(reader, start=2):
            try:
                vals = {c: float(rec[c]) for c in need[1:]}
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}", row=lineno) from None
            out.append(AffectRecord(row_id=rec["row_id"], **vals))
    return out


__all__ = [
    "EMOTIONS",
    "AffectCell",
    "AffectRecord",
    "affect_aggregate",
    "affect_comparison",
    "read_affect_csv",
    "weighted_sentiment",
    "write_comparison_csv",
]
