"""Zero-shot annotation records: parsing, flattening, a mock annotator, agreement.

Keys are matched after lowercasing and dropping everything that is not a
letter or digit, so ``"EmotionalSupport"``, ``"emotional_support"`` and
``"Emotional Support"`` all land on ``emotional_support``. A few extra
aliases cover common shorthand (``ALIASES`` below). Errors name the
CamelCase display form of the field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .data_model import ColumnSpec
from .errors import AnnotationError, ConfigError, DuplicateIdError, JoinError, ParseError

log = logging.getLogger(__name__)

TEXT_PROB_FIELDS = (
    "coping_strategies",
    "communication",
    "interpersonal_relationships",
    "self_growth",
    "situational_stressors",
    "humor",
    "emotional_support",
    "instrumental_support",
    "informational_support",
    "appraisal_support",
    "political",
    "healthcare",
    "foreign_affairs",
    "economic",
    "climate",
    "covid19",
    "immigration",
    "crime",
    "technology",
    "llm_ai",
    "advocacy",
    "awareness",
    "call_to_action",
    "self_disclosure",
)
VISUAL_PROB_FIELDS = (
    "text_prob",
    "special_effects",
    "close_up",
    "full_shot",
    "two_shot",
    "pov",
    "wide",
    "split",
    "selfie",
    "homemade",
    "professional",
    "meme",
    "illustration",
    "dance",
    "sing",
)
VISUAL_EXTRACTED = (
    "text_content",
    "hashtags",
    "location",
    "date",
    "link",
    "music",
    "relevant_objects",
    "known_individuals",
    "meme_source",
    "orientation",
)
INFO_DIRECTIONS = ("seeking", "providing", "both", "neither", "unclear")
AI_STANCES = ("positive", "neutral", "negative", "unclear")
REAL_OR_AI = ("real", "ai")
AGGREGATIONS = ("mean", "max")

DISPLAY = {
    "llm_ai": "LLMAI",
    "covid19": "Covid19",
    "pov": "POV",
    "text_prob": "Text",
    "real_or_ai": "RealOrAI",
}

ALIASES = {
    "coping": "coping_strategies",
    "interpersonal": "interpersonal_relationships",
    "stressors": "situational_stressors",
    "emotional": "emotional_support",
    "instrumental": "instrumental_support",
    "informational": "informational_support",
    "appraisal": "appraisal_support",
    "foreignpolicy": "foreign_affairs",
    "economy": "economic",
    "climatechange": "climate",
    "covid": "covid19",
    "llm": "llm_ai",
    "artificialintelligence": "llm_ai",
    "informationdirection": "info_direction",
    "direction": "info_direction",
    "mentalhealthconditions": "mh_conditions",
    "conditions": "mh_conditions",
    "profiles": "mentioned_profiles",
    "mentionedplatforms": "platforms",
    "stanceonai": "ai_stance",
    "text": "text_prob",
    "closeup": "close_up",
    "realorai": "real_or_ai",
    "realai": "real_or_ai",
    "id": "row_id",
}


def _norm(key: str) -> str:
    return re.sub(r"[^0-9a-z]", "", str(key).lower())


def display_name(name: str) -> str:
    return DISPLAY.get(name, "".join(part.capitalize() for part in name.split("_")))


def _canonical_keys(obj: Mapping, known: Sequence[str]) -> dict[str, object]:
    lookup = {_norm(k): k for k in known}
    out: dict[str, object] = {}
    for key, value in obj.items():
        nk = _norm(key)
        target = lookup.get(nk) or (ALIASES.get(nk) if ALIASES.get(nk) in known else None)
        if target is not None and target not in out:
            out[target] = value
    return out


def _prob(name: str, value: object) -> tuple[float, bool]:
    """Coerce a percent (number or ``"95%"``) and clamp it; returns (value, clamped)."""
    if isinstance(value, bool) or value is None:
        raise AnnotationError(display_name(name), f"{display_name(name)}: expected a percentage, got {value!r}")
    if isinstance(value, str):
        s = value.strip().rstrip("%").strip()
        try:
            value = float(s)
        except ValueError:
            raise AnnotationError(display_name(name), f"{display_name(name)}: not a number: {value!r}") from None
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise AnnotationError(display_name(name), f"{display_name(name)}: not a number: {value!r}") from None
    if not math.isfinite(v):
        raise AnnotationError(display_name(name), f"{display_name(name)}: non-finite value")
    if v < 0.0 or v > 100.0:
        return min(max(v, 0.0), 100.0), True
    return v, False


def _enum(name: str, value: object, allowed: Sequence[str], default: str | None) -> str | None:
    if value is None or value == "":
        return default
    v = _norm(value)
    for a in allowed:
        if _norm(a) == v:
            return a
    if name == "real_or_ai" and v in ("aigenerated", "generated", "synthetic"):
        return "ai"
    raise AnnotationError(display_name(name), f"{display_name(name)}: {value!r} not in {list(allowed)}")


def _str_list(name: str, value: object) -> tuple[str, ...]:
    if value is None or value == "":
        return ()
    if isinstance(value, str):
        return tuple(s.strip() for s in value.split(",") if s.strip())
    if isinstance(value, (list, tuple)):
        return tuple(str(s) for s in value)
    raise AnnotationError(display_name(name), f"{display_name(name)}: expected a list of strings")


def _load_object(json_text: str | Mapping) -> Mapping:
    if isinstance(json_text, Mapping):
        return json_text
    try:
        obj = json.loads(json_text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"annotation is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ParseError("annotation JSON must be an object")
    return obj


@dataclass(frozen=True)
class TextAnnotation:
    coping_strategies: float
    communication: float
    interpersonal_relationships: float
    self_growth: float
    situational_stressors: float
    humor: float
    emotional_support: float
    instrumental_support: float
    informational_support: float
    appraisal_support: float
    political: float
    healthcare: float
    foreign_affairs: float
    economic: float
    climate: float
    covid19: float
    immigration: float
    crime: float
    technology: float
    llm_ai: float
    advocacy: float
    awareness: float
    call_to_action: float
    self_disclosure: float
    info_direction: str = "unclear"
    mh_conditions: tuple[str, ...] = ()
    mentioned_profiles: tuple[str, ...] = ()
    platforms: tuple[str, ...] = ()
    ai_stance: str | None = None
    row_id: str | None = None
    clamped: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        for name in TEXT_PROB_FIELDS:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 100.0):
                raise AnnotationError(display_name(name), f"{display_name(name)}: {v!r} outside [0, 100]")
        if self.info_direction not in INFO_DIRECTIONS:
            raise AnnotationError("InfoDirection", f"InfoDirection: {self.info_direction!r} not allowed")
        if self.ai_stance is not None and self.ai_stance not in AI_STANCES:
            raise AnnotationError("AiStance", f"AiStance: {self.ai_stance!r} not allowed")
        for name in ("mh_conditions", "mentioned_profiles", "platforms"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def probabilities(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in TEXT_PROB_FIELDS}


@dataclass(frozen=True)
class VisualAnnotation:
    real_or_ai: str
    text_prob: float
    special_effects: float
    close_up: float
    full_shot: float
    two_shot: float
    pov: float
    wide: float
    split: float
    selfie: float
    homemade: float
    professional: float
    meme: float
    illustration: float
    dance: float
    sing: float
    description: str = ""
    segments: int | None = None
    extracted: dict = field(default_factory=dict)
    row_id: str | None = None
    clamped: int = field(default=0, compare=False)
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        for name in VISUAL_PROB_FIELDS:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 100.0):
                raise AnnotationError(display_name(name), f"{display_name(name)}: {v!r} outside [0, 100]")
        if self.real_or_ai not in REAL_OR_AI:
            raise AnnotationError("RealOrAI", f"RealOrAI: {self.real_or_ai!r} not in {list(REAL_OR_AI)}")
        if self.segments is not None and (isinstance(self.segments, bool) or not isinstance(self.segments, int) or self.segments < 0):
            raise AnnotationError("Segments", f"Segments: expected a non-negative integer, got {self.segments!r}")
        unknown = set(self.extracted) - set(VISUAL_EXTRACTED)
        if unknown:
            raise AnnotationError(display_name(sorted(unknown)[0]), f"unknown extracted fields {sorted(unknown)}")

    def probabilities(self) -> dict[str, float]:
        out = {name: float(getattr(self, name)) for name in VISUAL_PROB_FIELDS}
        # the real/ai call is categorical; expose it as two 0/100 indicators
        out["real"] = 100.0 if self.real_or_ai == "real" else 0.0
        out["ai"] = 100.0 if self.real_or_ai == "ai" else 0.0
        return out


Annotation = TextAnnotation | VisualAnnotation


def parse_text_annotation(json_text: str | Mapping, row_id: str | None = None) -> TextAnnotation:
    obj = _canonical_keys(_load_object(json_text), TEXT_PROB_FIELDS + (
        "info_direction", "mh_conditions", "mentioned_profiles", "platforms", "ai_stance", "row_id"))
    kwargs: dict[str, object] = {}
    clamped = 0
    for name in TEXT_PROB_FIELDS:
        if name not in obj:
            raise AnnotationError(display_name(name), f"missing required field {display_name(name)}")
        kwargs[name], hit = _prob(name, obj[name])
        clamped += hit
    kwargs["info_direction"] = _enum("info_direction", obj.get("info_direction"), INFO_DIRECTIONS, "unclear")
    kwargs["ai_stance"] = _enum("ai_stance", obj.get("ai_stance"), AI_STANCES, None)
    for name in ("mh_conditions", "mentioned_profiles", "platforms"):
        kwargs[name] = _str_list(name, obj.get(name))
    rid = obj.get("row_id", row_id)
    kwargs["row_id"] = None if rid is None else str(rid)
    if clamped:
        log.warning("clamped %d probability value(s) into [0, 100]", clamped)
    return TextAnnotation(**kwargs, clamped=clamped)


def parse_visual_annotation(json_text: str | Mapping, row_id: str | None = None) -> VisualAnnotation:
    known = VISUAL_PROB_FIELDS + VISUAL_EXTRACTED + ("real_or_ai", "description", "segments", "row_id")
    raw = _load_object(json_text)
    obj = _canonical_keys(raw, known)
    # extracted fields may also arrive nested under one key
    nested = raw.get("extracted") if isinstance(raw.get("extracted"), Mapping) else {}
    obj.update({k: v for k, v in _canonical_keys(nested, VISUAL_EXTRACTED).items() if k not in obj})

    kwargs: dict[str, object] = {}
    clamped = 0
    for name in VISUAL_PROB_FIELDS:
        if name not in obj:
            raise AnnotationError(display_name(name), f"missing required field {display_name(name)}")
        kwargs[name], hit = _prob(name, obj[name])
        clamped += hit
    if obj.get("real_or_ai") in (None, ""):
        raise AnnotationError("RealOrAI", "missing required field RealOrAI")
    kwargs["real_or_ai"] = _enum("real_or_ai", obj["real_or_ai"], REAL_OR_AI, None)
    kwargs["description"] = "" if obj.get("description") is None else str(obj["description"])

    seg = obj.get("segments")
    if seg is not None and seg != "":
        try:
            as_float = float(seg)
        except (TypeError, ValueError):
            raise AnnotationError("Segments", f"Segments: not a number: {seg!r}") from None
        if isinstance(seg, bool) or not as_float.is_integer() or as_float < 0:
            raise AnnotationError("Segments", f"Segments: expected a non-negative integer, got {seg!r}")
        kwargs["segments"] = int(as_float)
    notes = []
    if kwargs.get("segments") and kwargs["split"] < 50.0:
        notes.append("segments reported while split probability is below 50")
        log.warning("segments=%s with split=%s", kwargs["segments"], kwargs["split"])

    kwargs["extracted"] = {k: obj[k] for k in VISUAL_EXTRACTED if obj.get(k) not in (None, "", [])}
    rid = obj.get("row_id", row_id)
    kwargs["row_id"] = None if rid is None else str(rid)
    if clamped:
        log.warning("clamped %d probability value(s) into [0, 100]", clamped)
    return VisualAnnotation(**kwargs, clamped=clamped, notes=tuple(notes))


def to_json(ann: Annotation) -> dict:
    out: dict[str, object] = {}
    for f in fields(ann):
        if f.name in ("clamped", "notes"):
            continue
        v = getattr(ann, f.name)
        if v is None:
            continue
        out[f.name] = list(v) if isinstance(v, tuple) else v
    return out


def serialize(ann: Annotation) -> str:
    return json.dumps(to_json(ann), sort_keys=True)


def parse_annotation(json_text: str | Mapping, kind: str = "text") -> Annotation:
    if kind == "text":
        return parse_text_annotation(json_text)
    if kind == "visual":
        return parse_visual_annotation(json_text)
    raise ConfigError(f"kind must be 'text' or 'visual', got {kind!r}")


@dataclass
class FlatColumns:
    row_ids: list[str]
    columns: list[ColumnSpec]
    values: np.ndarray  # (rows, columns), all in [0, 100]
    sidecar: list[dict]  # non-numeric fields, one record per output row

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row_id", *self.names])
            for rid, row in zip(self.row_ids, self.values):
                w.writerow([rid, *(repr(float(v)) for v in row)])


def _sidecar(ann: Annotation) -> dict:
    if isinstance(ann, TextAnnotation):
        return {
            "info_direction": ann.info_direction,
            "mh_conditions": list(ann.mh_conditions),
            "mentioned_profiles": list(ann.mentioned_profiles),
            "platforms": list(ann.platforms),
            "ai_stance": ann.ai_stance,
        }
    return {
        "real_or_ai": ann.real_or_ai,
        "description": ann.description,
        "segments": ann.segments,
        "extracted": dict(ann.extracted),
    }


def flatten(
    annotations: Sequence[Annotation],
    prefix: str,
    aggregate: str | None = None,
    modality: str | None = None,
) -> FlatColumns:
    """One probabilistic column per numeric field, named ``<prefix>_<field>``.

    With ``aggregate`` set, records sharing a row_id (e.g. frames of one
    video) collapse to one row by mean or max; sidecar entries keep every
    record's non-numeric fields in a ``records`` list.
    """
    if not annotations:
        return FlatColumns([], [], np.zeros((0, 0)), [])
    kinds = {type(a) for a in annotations}
    if len(kinds) != 1:
        raise ConfigError("flatten needs annotations of a single kind")
    kind = kinds.pop()
    if aggregate is not None and aggregate not in AGGREGATIONS:
        raise ConfigError(f"aggregate must be one of {AGGREGATIONS} or None")
    names = TEXT_PROB_FIELDS if kind is TextAnnotation else VISUAL_PROB_FIELDS
    if modality is None:
        modality = "text" if kind is TextAnnotation else "visual"
    ids = [a.row_id if a.row_id is not None else f"item{i:06d}" for i, a in enumerate(annotations)]
    mat = np.array([[getattr(a, n) for n in names] for a in annotations], dtype=np.float64)

    if aggregate is None:
        seen = set()
        for rid in ids:
            if rid in seen:
                raise DuplicateIdError(f"duplicate row_id {rid!r} in annotation batch")
            seen.add(rid)
        out_ids, values = ids, mat
        sidecar = [{"row_id": rid, **_sidecar(a)} for rid, a in zip(ids, annotations)]
    else:
        groups: dict[str, list[int]] = {}
        for k, rid in enumerate(ids):
            groups.setdefault(rid, []).append(k)
        out_ids = list(groups)
        reduce = np.mean if aggregate == "mean" else np.max
        values = np.array([reduce(mat[idx], axis=0) for idx in groups.values()])
        sidecar = [
            {"row_id": rid, "n_records": len(idx), "records": [_sidecar(annotations[k]) for k in idx]}
            for rid, idx in groups.items()
        ]
    cols = [ColumnSpec(f"{prefix}_{n}", modality, "probabilistic") for n in names]
    return FlatColumns(list(out_ids), cols, np.clip(values, 0.0, 100.0), sidecar)


class Annotator(Protocol):
    def annotate(self, text: str) -> TextAnnotation: ...


# keyword -> fields it pushes to a high probability
KEYWORD_RULES: dict[str, tuple[str, ...]] = {
    "lol": ("humor",),
    "lmao": ("humor",),
    "haha": ("humor",),
    "funny": ("humor",),
    "joke": ("humor",),
    "meme": ("humor",),
    "tips": ("informational_support",),
    "advice": ("informational_support",),
    "how to": ("informational_support",),
    "guide": ("informational_support",),
    "not alone": ("emotional_support",),
    "proud of you": ("emotional_support",),
    "sending love": ("emotional_support",),
    "coping": ("coping_strategies",),
    "cope": ("coping_strategies",),
    "breathing": ("coping_strategies",),
    "journaling": ("coping_strategies",),
    "therapy": ("healthcare", "coping_strategies"),
    "therapist": ("healthcare",),
    "doctor": ("healthcare",),
    "medication": ("healthcare",),
    "diagnosed": ("self_disclosure", "healthcare"),
    "my story": ("self_disclosure",),
    "i have": ("self_disclosure",),
    "work": ("situational_stressors",),
    "school": ("situational_stressors",),
    "exam": ("situational_stressors",),
    "bills": ("situational_stressors", "economic"),
    "friend": ("interpersonal_relationships",),
    "partner": ("interpersonal_relationships",),
    "family": ("interpersonal_relationships",),
    "chatgpt": ("llm_ai", "technology"),
    "ai": ("llm_ai", "technology"),
    "app": ("technology",),
    "covid": ("covid19",),
    "pandemic": ("covid19",),
    "election": ("political",),
    "vote": ("political", "call_to_action"),
    "follow": ("call_to_action",),
    "share": ("call_to_action",),
    "awareness": ("awareness",),
    "stigma": ("advocacy", "awareness"),
    "grow": ("self_growth",),
    "healing": ("self_growth",),
}
MH_TERMS = ("anxiety", "depression", "adhd", "ptsd", "ocd", "bipolar", "autism", "burnout")
PLATFORM_TERMS = ("tiktok", "instagram", "youtube", "reddit", "twitter")


def _has(term: str, text: str) -> bool:
    return re.search(r"\b" + re.escape(term) + r"\b", text) is not None


def mock_annotate(text: str, seed: int = 0) -> TextAnnotation:
    """Deterministic stand-in for a zero-shot labeler.

    Background probabilities are drawn in [0, 30) from a generator keyed on
    (seed, text); every field hit by a keyword rule is raised into [70, 95].
    Empty text yields all zeros and an ``unclear`` direction.
    """
    lowered = text.lower().strip()
    if not lowered:
        return TextAnnotation(**{n: 0.0 for n in TEXT_PROB_FIELDS}, info_direction="unclear")
    digest = hashlib.sha256(f"{seed}\x00{text}".encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
    probs = {n: round(float(rng.uniform(0.0, 30.0)), 1) for n in TEXT_PROB_FIELDS}
    boosts = rng.uniform(70.0, 95.0, len(TEXT_PROB_FIELDS))
    hit = set()
    for term, targets in KEYWORD_RULES.items():
        if _has(term, lowered):
            hit.update(targets)
    for k, n in enumerate(TEXT_PROB_FIELDS):
        if n in hit:
            probs[n] = round(float(boosts[k]), 1)

    seeking = "?" in lowered or _has("anyone", lowered) or _has("help", lowered)
    providing = "informational_support" in hit
    direction = "both" if seeking and providing else "seeking" if seeking else "providing" if providing else "neither"
    return TextAnnotation(
        **probs,
        info_direction=direction,
        mh_conditions=tuple(t for t in MH_TERMS if _has(t, lowered)),
        platforms=tuple(t for t in PLATFORM_TERMS if _has(t, lowered)),
        ai_stance="unclear" if "llm_ai" in hit else None,
    )


@dataclass(frozen=True)
class MockAnnotator:
    seed: int = 0

    def annotate(self, text: str) -> TextAnnotation:
        return mock_annotate(text, self.seed)


@dataclass
class AgreementReport:
    per_category: dict[str, float]
    overall: float  # matches over all item-category judgments
    overall_category_mean: float
    n: int
    threshold: float
    n_judgments: int = 0
    matches: dict[str, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "per_category": self.per_category,
            "matches": self.matches,
            "overall": self.overall,
            "overall_category_mean": self.overall_category_mean,
            "n": self.n,
            "n_judgments": self.n_judgments,
            "threshold": self.threshold,
        }


def machine_probabilities(rec: Annotation | Mapping) -> dict[str, float]:
    """Normalized-key probability map for an annotation or a raw record."""
    if isinstance(rec, (TextAnnotation, VisualAnnotation)):
        probs = rec.probabilities()
        out = {_norm(k): v for k, v in probs.items()}
        for alias, target in ALIASES.items():
            if target in probs:
                out.setdefault(alias, probs[target])
        return out
    out = {}
    for k, v in rec.items():
        if _norm(k) in ("rowid", "id") or isinstance(v, (list, dict, bool)) or v is None:
            continue
        try:
            out[_norm(k)], _ = _prob(k, v)
        except AnnotationError:
            if isinstance(v, str):
                continue  # free-text field
            raise
    return out


def _record_id(rec: Annotation | Mapping) -> str:
    rid = rec.row_id if isinstance(rec, (TextAnnotation, VisualAnnotation)) else rec.get("row_id", rec.get("id"))
    if rid is None:
        raise JoinError("every record needs a row_id for agreement")
    return str(rid)


def _human_positive(category: str, value: object) -> bool:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise AnnotationError(category, f"human label for {category!r} is not numeric: {value!r}") from None
    if not math.isfinite(v):
        raise AnnotationError(category, f"human label for {category!r} is not finite")
    return v != 0.0


def agreement(
    machine: Sequence[Annotation | Mapping],
    human: Sequence[Mapping],
    threshold: float = 50.0,
    categories: Sequence[str] | None = None,
) -> AgreementReport:
    """Percent agreement of thresholded machine probabilities with human 0/1 labels.

    A machine probability at or above ``threshold`` counts as positive; any
    nonzero human label counts as positive. Categories default to the human
    record's keys other than row_id.
    """
    if not 0.0 < threshold < 100.0:
        raise ConfigError("threshold must be in (0, 100)")
    if len(machine) != len(human):
        raise JoinError(f"machine has {len(machine)} records, human has {len(human)}")
    mach = {}
    for rec in machine:
        rid = _record_id(rec)
        if rid in mach:
            raise JoinError(f"duplicate machine row_id {rid!r}")
        mach[rid] = machine_probabilities(rec)
    hum = {}
    for rec in human:
        rid = _record_id(rec)
        if rid in hum:
            raise JoinError(f"duplicate human row_id {rid!r}")
        hum[rid] = rec
    if set(mach) != set(hum):
        diff = sorted(set(mach) ^ set(hum))
        raise JoinError(f"row_ids differ between machine and human records, e.g. {diff[:3]}")
    if categories is None:
        categories = [k for k in (human[0] if human else {}) if _norm(k) not in ("rowid", "id")]

    per_cat, matches = {}, {}
    total = 0
    for cat in categories:
        key = _norm(cat)
        hits = 0
        for rid in hum:
            if key not in mach[rid]:
                raise JoinError(f"machine record {rid!r} has no category {cat!r}")
            if cat not in hum[rid]:
                raise JoinError(f"human record {rid!r} has no category {cat!r}")
            hits += (mach[rid][key] >= threshold) == _human_positive(cat, hum[rid][cat])
        matches[cat] = hits
        per_cat[cat] = 100.0 * hits / len(hum) if hum else 0.0
        total += hits
    n_judgments = len(hum) * len(categories)
    return AgreementReport(
        per_category=per_cat,
        overall=100.0 * total / n_judgments if n_judgments else 0.0,
        overall_category_mean=float(np.mean(list(per_cat.values()))) if per_cat else 0.0,
        n=len(hum),
        threshold=float(threshold),
        n_judgments=n_judgments,
        matches=matches,
    )


def read_jsonl_annotations(path: str | Path, kind: str = "auto") -> list[Annotation | dict]:
    """One JSON object per line. ``auto`` tries text, then visual, then keeps the raw record."""
    if kind not in ("auto", "text", "visual", "raw"):
        raise ConfigError(f"unknown annotation kind {kind!r}")
    out: list[Annotation | dict] = []
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"line {lineno}: invalid JSON: {exc}", row=lineno) from None
            if kind in ("text", "visual"):
                out.append(parse_annotation(obj, kind))
                continue
            if kind == "raw":
                out.append(obj)
                continue
            for parser in (parse_text_annotation, parse_visual_annotation):
                try:
                    out.append(parser(obj))
                    break
                except AnnotationError:
                    continue
            else:
                out.append(obj)
    return out


def read_human_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "row_id" not in reader.fieldnames:
            raise ParseError(f"{path}: human label CSV needs a row_id column")
        return [dict(rec) for rec in reader]


def write_jsonl_annotations(annotations: Iterable[Annotation], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ann in annotations:
            fh.write(serialize(ann) + "\n")


__all__ = [
    "AgreementReport",
    "Annotator",
    "FlatColumns",
    "MockAnnotator",
    "TextAnnotation",
    "VisualAnnotation",
    "agreement",
    "flatten",
    "mock_annotate",
    "parse_text_annotation",
    "parse_visual_annotation",
    "read_human_csv",
    "read_jsonl_annotations",
    "serialize",
]
