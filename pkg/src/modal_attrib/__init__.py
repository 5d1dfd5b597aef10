"""Shapley attribution for multimodal engagement models built on boosted trees."""

import os

# The bundled TBB is too old for numba's TBB layer and warns on every import.
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from .affect import AffectRecord, affect_aggregate, affect_comparison, weighted_sentiment  # noqa: E402
from .annotations import (  # noqa: E402
    MockAnnotator,
    TextAnnotation,
    VisualAnnotation,
    agreement,
    flatten,
    mock_annotate,
    parse_text_annotation,
    parse_visual_annotation,
)
from .attribution import BetaSummary, beeswarm_export, beta_shap, importance_ranking  # noqa: E402
from .data_model import ColumnSpec, FeatureTable, SplitIndex, ingest, normalize, split, write_table  # noqa: E402
from .errors import (  # noqa: E402
    AnnotationError,
    ConfigError,
    DuplicateIdError,
    JoinError,
    ModalAttribError,
    ParseError,
    SchemaError,
    StaleArtifactError,
)
from .gbdt import BoostConfig, BoostedModel, evaluate, predict, train  # noqa: E402
from .interactions import classify_pattern, quadrant_regression, top_interacting_pairs  # noqa: E402
from .shapley import (  # noqa: E402
    Background,
    InteractionTensor,
    ShapResult,
    brute_force_interactions,
    brute_force_shap,
    make_background,
    shap_interactions,
    shap_values,
)
from .synthetic import PlantedSpec, generate, scenario_spec  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "AffectRecord",
    "AnnotationError",
    "Background",
    "BetaSummary",
    "BoostConfig",
    "BoostedModel",
    "ColumnSpec",
    "ConfigError",
    "DuplicateIdError",
    "FeatureTable",
    "InteractionTensor",
    "JoinError",
    "MockAnnotator",
    "ModalAttribError",
    "ParseError",
    "PlantedSpec",
    "SchemaError",
    "ShapResult",
    "SplitIndex",
    "StaleArtifactError",
    "TextAnnotation",
    "VisualAnnotation",
    "affect_aggregate",
    "affect_comparison",
    "agreement",
    "beeswarm_export",
    "beta_shap",
    "brute_force_interactions",
    "brute_force_shap",
    "classify_pattern",
    "evaluate",
    "flatten",
    "generate",
    "importance_ranking",
    "ingest",
    "make_background",
    "mock_annotate",
    "normalize",
    "parse_text_annotation",
    "parse_visual_annotation",
    "predict",
    "quadrant_regression",
    "scenario_spec",
    "shap_interactions",
    "shap_values",
    "split",
    "top_interacting_pairs",
    "train",
    "weighted_sentiment",
    "write_table",
]
