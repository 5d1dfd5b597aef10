import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modal_attrib.annotations import (
    TEXT_PROB_FIELDS,
    VISUAL_PROB_FIELDS,
    MockAnnotator,
    TextAnnotation,
    VisualAnnotation,
    agreement,
    display_name,
    flatten,
    mock_annotate,
    parse_text_annotation,
    parse_visual_annotation,
    read_human_csv,
    read_jsonl_annotations,
    serialize,
)
from modal_attrib.errors import AnnotationError, ConfigError, DuplicateIdError, JoinError, ParseError

from conftest import FIXTURES


def text_payload(**overrides):
    obj = {display_name(f): 10 for f in TEXT_PROB_FIELDS}
    obj.update(overrides)
    return obj


def visual_payload(**overrides):
    obj = {display_name(f): 10 for f in VISUAL_PROB_FIELDS}
    obj["RealOrAI"] = "real"
    obj.update(overrides)
    return obj


def test_parse_camel_case():
    ann = parse_text_annotation(json.dumps(text_payload(Humor=95, InformationalSupport=10)))
    assert ann.humor == 95
    assert ann.informational_support == 10
    assert ann.info_direction == "unclear"
    assert ann.clamped == 0


def test_key_variants_and_percent_strings():
    obj = {f: "20%" for f in TEXT_PROB_FIELDS}
    obj["Emotional Support"] = obj.pop("emotional_support")
    obj["covid"] = obj.pop("covid19")
    obj["InfoDirection"] = "Seeking"
    obj["Platforms"] = "TikTok, Reddit"
    ann = parse_text_annotation(obj)
    assert ann.emotional_support == 20.0 and ann.covid19 == 20.0
    assert ann.info_direction == "seeking"
    assert ann.platforms == ("TikTok", "Reddit")


def test_clamping_counts():
    ann = parse_text_annotation(json.dumps(text_payload(Humor=150, Crime=-3)))
    assert ann.humor == 100.0 and ann.crime == 0.0
    assert ann.clamped == 2


def test_missing_field_names_it():
    obj = text_payload()
    del obj["EmotionalSupport"]
    with pytest.raises(AnnotationError) as ei:
        parse_text_annotation(json.dumps(obj))
    assert ei.value.field == "EmotionalSupport"


def test_bad_inputs():
    with pytest.raises(ParseError):
        parse_text_annotation("{not json")
    with pytest.raises(ParseError):
        parse_text_annotation("[1, 2]")
    with pytest.raises(AnnotationError):
        parse_text_annotation(text_payload(Humor="lots"))
    with pytest.raises(AnnotationError):
        parse_text_annotation(text_payload(InfoDirection="sideways"))
    with pytest.raises(AnnotationError):
        parse_text_annotation(text_payload(Humor=True))


def test_visual_parse():
    ann = parse_visual_annotation(visual_payload(Text=80, Segments=2, Split=90, Hashtags=["#a"], RealOrAI="AI-generated"))
    assert ann.text_prob == 80 and ann.real_or_ai == "ai"
    assert ann.segments == 2 and ann.extracted == {"hashtags": ["#a"]}
    assert ann.notes == ()
    odd = parse_visual_annotation(visual_payload(Segments=3, Split=5))
    assert odd.notes  # soft warning only
    with pytest.raises(AnnotationError) as ei:
        parse_visual_annotation(visual_payload(Segments=-1))
    assert ei.value.field == "Segments"
    obj = visual_payload()
    del obj["RealOrAI"]
    with pytest.raises(AnnotationError):
        parse_visual_annotation(obj)


prob = st.floats(0, 100, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    probs=st.lists(prob, min_size=len(TEXT_PROB_FIELDS), max_size=len(TEXT_PROB_FIELDS)),
    direction=st.sampled_from(["seeking", "providing", "both", "neither", "unclear"]),
    stance=st.sampled_from([None, "positive", "neutral", "negative", "unclear"]),
    conditions=st.lists(st.text(alphabet="abcxyz ", min_size=1, max_size=8).filter(lambda s: s.strip() == s and "," not in s), max_size=3),
)
def test_text_round_trip(probs, direction, stance, conditions):
    ann = TextAnnotation(**dict(zip(TEXT_PROB_FIELDS, probs)), info_direction=direction, ai_stance=stance,
                         mh_conditions=tuple(conditions), row_id="v1")
    assert parse_text_annotation(serialize(ann)) == ann


@settings(max_examples=60, deadline=None)
@given(
    probs=st.lists(prob, min_size=len(VISUAL_PROB_FIELDS), max_size=len(VISUAL_PROB_FIELDS)),
    real=st.sampled_from(["real", "ai"]),
    segments=st.one_of(st.none(), st.integers(0, 9)),
    desc=st.text(max_size=20),
)
def test_visual_round_trip(probs, real, segments, desc):
    ann = VisualAnnotation(real, *probs, description=desc, segments=segments,
                           extracted={"music": "song", "hashtags": ["#x"]})
    assert parse_visual_annotation(serialize(ann)) == ann


def test_flatten_text():
    anns = [mock_annotate("lol", 0), mock_annotate("tips", 0)]
    anns = [TextAnnotation(**{**a.__dict__, "row_id": rid}) for a, rid in zip(anns, ["a", "b"])]
    flat = flatten(anns, "caption")
    assert flat.names[:2] == ["caption_coping_strategies", "caption_communication"]
    assert "caption_humor" in flat.names and "caption_informational_support" in flat.names
    assert {c.modality for c in flat.columns} == {"text"}
    assert {c.kind for c in flat.columns} == {"probabilistic"}
    assert flat.values.shape == (2, len(TEXT_PROB_FIELDS))
    assert flat.sidecar[0]["row_id"] == "a" and "info_direction" in flat.sidecar[0]


def test_flatten_frames_by_mean_and_max():
    frames = []
    for k in range(5):
        frames.append(VisualAnnotation("real", *([float(10 * k)] * len(VISUAL_PROB_FIELDS)), row_id="video1"))
    frames.append(VisualAnnotation("ai", *([100.0] * len(VISUAL_PROB_FIELDS)), row_id="video2"))
    mean = flatten(frames, "frame", aggregate="mean")
    assert mean.row_ids == ["video1", "video2"]
    np.testing.assert_array_equal(mean.values[0], 20.0)
    assert mean.sidecar[0]["n_records"] == 5
    assert {c.modality for c in mean.columns} == {"visual"}
    np.testing.assert_array_equal(flatten(frames, "frame", aggregate="max").values[0], 40.0)
    with pytest.raises(DuplicateIdError):
        flatten(frames, "frame")


def test_flatten_edge_cases():
    flat = flatten([], "caption")
    assert flat.columns == [] and flat.row_ids == []
    with pytest.raises(ConfigError):
        flatten([mock_annotate("a", 0), VisualAnnotation("real", *([0.0] * len(VISUAL_PROB_FIELDS)))], "x")


def test_mock_annotator_rules():
    a = mock_annotate("tips for coping with anxiety", seed=7)
    assert a == mock_annotate("tips for coping with anxiety", seed=7)
    assert a.informational_support >= 70
    assert a.coping_strategies >= 70
    assert a.mh_conditions == ("anxiety",)
    assert mock_annotate("lol this is me", 1).humor >= 70
    assert mock_annotate("a quiet walk", 1).humor < 30
    empty = mock_annotate("", 3)
    assert all(getattr(empty, f) == 0 for f in TEXT_PROB_FIELDS)
    assert empty.info_direction == "unclear"
    assert MockAnnotator(7).annotate("tips for coping with anxiety") == a


@settings(max_examples=50, deadline=None)
@given(text=st.text(max_size=80), seed=st.integers(0, 1000))
def test_mock_annotator_invariants(text, seed):
    a = mock_annotate(text, seed)
    assert all(0 <= getattr(a, f) <= 100 for f in TEXT_PROB_FIELDS)
    assert parse_text_annotation(serialize(a)) == a


def _raw(ids, probs):
    return [{"row_id": r, "cat": p} for r, p in zip(ids, probs)]


def test_agreement_basics():
    ids = ["a", "b", "c", "d"]
    machine = _raw(ids, [80, 50, 49.9, 0])
    human = [{"row_id": r, "cat": v} for r, v in zip(ids, ["1", "1", "0", "1"])]
    rep = agreement(machine, human)
    assert rep.per_category == {"cat": 75.0}
    assert rep.overall == 75.0 and rep.n == 4 and rep.threshold == 50.0


def test_agreement_identity_and_errors():
    ids = [f"i{k}" for k in range(10)]
    labels = [k % 2 for k in range(10)]
    machine = _raw(ids, [100 * v for v in labels])
    human = [{"row_id": r, "cat": v} for r, v in zip(ids, labels)]
    assert agreement(machine, human).overall == 100.0
    with pytest.raises(JoinError):
        agreement(machine, human[:-1])
    with pytest.raises(JoinError):
        agreement(machine, human[:-1] + [{"row_id": "zzz", "cat": 1}])
    with pytest.raises(ConfigError):
        agreement(machine, human, threshold=100)


@settings(max_examples=50, deadline=None)
@given(a=st.lists(st.tuples(st.booleans(), st.booleans(), st.booleans()), min_size=1, max_size=30))
def test_agreement_symmetric_for_binary_labels(a):
    ids = [f"r{k}" for k in range(len(a))]
    left = [{"row_id": r, "x": 100 * u, "y": 100 * v, "z": 100 * w} for r, (u, v, w) in zip(ids, a)]
    rng = np.random.default_rng(len(a))
    right = [{"row_id": r, **{k: 100 * int(rng.integers(0, 2)) for k in "xyz"}} for r in ids]
    one, two = agreement(left, right), agreement(right, left)
    assert one.per_category == two.per_category
    assert one.overall == two.overall


def test_agreement_overall_vs_category_mean():
    ids = ["a", "b"]
    machine = [{"row_id": "a", "p": 100, "q": 100}, {"row_id": "b", "p": 0, "q": 100}]
    human = [{"row_id": "a", "p": 1, "q": 0}, {"row_id": "b", "p": 0, "q": 0}]
    rep = agreement(machine, human)
    assert rep.per_category == {"p": 100.0, "q": 0.0}
    assert rep.overall == 50.0 and rep.overall_category_mean == 50.0
    assert rep.n_judgments == 4 and ids


def test_fixture_loaders_pick_annotation_kinds():
    caption = read_jsonl_annotations(FIXTURES / "agreement" / "caption_machine.jsonl")
    image = read_jsonl_annotations(FIXTURES / "agreement" / "image_machine.jsonl")
    assert all(isinstance(a, TextAnnotation) for a in caption)
    assert all(isinstance(a, VisualAnnotation) for a in image)
    human = read_human_csv(FIXTURES / "agreement" / "caption_human.csv")
    assert len(caption) == len(human) == 20
    rep = agreement(caption, human)
    assert rep.per_category["situational_stressors"] == 65.0
