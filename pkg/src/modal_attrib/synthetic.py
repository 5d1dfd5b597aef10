"""Seeded synthetic tables with planted main effects and quadrant interactions."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data_model import ColumnSpec, FeatureTable, normalize, write_table
from .errors import ConfigError

DISTRIBUTIONS = ("uniform_0_100", "bernoulli_scaled")
SCENARIOS = ("x_threshold", "y_threshold", "symmetric")

# Sign of the planted term in each quadrant, ordered (-,-), (-,+), (+,-), (+,+).
SCENARIO_SIGNS = {
    "x_threshold": (0, 0, -1, 1),
    "y_threshold": (0, -1, 0, 1),
    "symmetric": (1, -1, -1, 1),
}
SCENARIO_PATTERN = {
    "x_threshold": "x_threshold",
    "y_threshold": "y_threshold",
    "symmetric": "symmetric_sign_change",
}


@dataclass(frozen=True)
class FeatureDef:
    name: str
    modality: str = "text"
    distribution: str = "uniform_0_100"


@dataclass(frozen=True)
class MainEffect:
    feature: str
    coefficient: float


@dataclass(frozen=True)
class PlantedInteraction:
    feature_x: str
    feature_y: str
    scenario: str
    magnitude: float = 1.0


@dataclass(frozen=True)
class PlantedSpec:
    n_rows: int
    features: tuple[FeatureDef, ...]
    main_effects: tuple[MainEffect, ...] = ()
    interactions: tuple[PlantedInteraction, ...] = ()
    noise_sd: float = 0.0
    seed: int = 0
    target_name: str = "log_views"

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "main_effects", tuple(self.main_effects))
        object.__setattr__(self, "interactions", tuple(self.interactions))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ConfigError("feature names must be unique")
        if self.n_rows < 1:
            raise ConfigError("n_rows must be >= 1")
        if not self.noise_sd >= 0:
            raise ConfigError("noise_sd must be >= 0")
        for f in self.features:
            if f.distribution not in DISTRIBUTIONS:
                raise ConfigError(f"unknown distribution {f.distribution!r}")
        for m in self.main_effects:
            if m.feature not in names:
                raise ConfigError(f"main effect references unknown feature {m.feature!r}")
            if not np.isfinite(m.coefficient):
                raise ConfigError("coefficients must be finite")
        for it in self.interactions:
            for name in (it.feature_x, it.feature_y):
                if name not in names:
                    raise ConfigError(f"interaction references unknown feature {name!r}")
            if it.scenario not in SCENARIOS:
                raise ConfigError(f"unknown scenario {it.scenario!r}")
            if not np.isfinite(it.magnitude):
                raise ConfigError("magnitudes must be finite")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "PlantedSpec":
        try:
            return cls(
                n_rows=int(obj["n_rows"]),
                features=tuple(FeatureDef(**f) for f in obj["features"]),
                main_effects=tuple(MainEffect(**m) for m in obj.get("main_effects", [])),
                interactions=tuple(PlantedInteraction(**i) for i in obj.get("interactions", [])),
                noise_sd=float(obj.get("noise_sd", 0.0)),
                seed=int(obj.get("seed", 0)),
                target_name=obj.get("target_name", "log_views"),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed planted spec: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "PlantedSpec":
        try:
            return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
        except FileNotFoundError:
            raise ConfigError(f"spec file not found: {path}") from None


def _side(v: np.ndarray) -> np.ndarray:
    """+1 strictly above 50, -1 otherwise (boundary goes to the low side)."""
    return np.where(v > 50.0, 1.0, -1.0)


def interaction_term(scenario: str, x: np.ndarray, y: np.ndarray, magnitude: float) -> np.ndarray:
    if scenario == "x_threshold":
        return magnitude * (x > 50.0) * _side(y)
    if scenario == "y_threshold":
        return magnitude * (y > 50.0) * _side(x)
    if scenario == "symmetric":
        return magnitude * _side(x) * _side(y)
    raise ConfigError(f"unknown scenario {scenario!r}")


@dataclass
class GroundTruth:
    spec: PlantedSpec
    terms: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"spec": self.spec.to_json(), "terms": self.terms}


def generate(spec: PlantedSpec) -> tuple[FeatureTable, GroundTruth]:
    """Features drawn in declaration order from one generator, then noise."""
    rng = np.random.default_rng(spec.seed)
    n = spec.n_rows
    cols = {}
    schema = []
    for f in spec.features:
        if f.distribution == "uniform_0_100":
            cols[f.name] = rng.uniform(0.0, 100.0, n)
            schema.append(ColumnSpec(f.name, f.modality, "probabilistic"))
        else:
            cols[f.name] = 100.0 * rng.integers(0, 2, n).astype(np.float64)
            schema.append(ColumnSpec(f.name, f.modality, "binary"))
    noise = rng.normal(0.0, spec.noise_sd, n) if spec.noise_sd > 0 else np.zeros(n)

    target = np.zeros(n)
    terms = []
    for m in spec.main_effects:
        target += m.coefficient * cols[m.feature] / 100.0
        terms.append({"type": "main", "feature": m.feature, "coefficient": m.coefficient,
                      "form": "coefficient * x / 100"})
    for it in spec.interactions:
        target += interaction_term(it.scenario, cols[it.feature_x], cols[it.feature_y], it.magnitude)
        sign = 1 if it.magnitude > 0 else -1 if it.magnitude < 0 else 0
        terms.append({
            "type": "interaction",
            "feature_x": it.feature_x,
            "feature_y": it.feature_y,
            "scenario": it.scenario,
            "magnitude": it.magnitude,
            "expected_pattern": SCENARIO_PATTERN[it.scenario],
            "quadrant_signs": {
                q: s * sign for q, s in zip(("(-,-)", "(-,+)", "(+,-)", "(+,+)"), SCENARIO_SIGNS[it.scenario])
            },
        })
    terms.append({"type": "noise", "distribution": "normal", "sd": spec.noise_sd})
    target = target + noise

    table = FeatureTable(
        schema=tuple(schema),
        values=np.column_stack([cols[f.name] for f in spec.features]),
        target=target,
        row_ids=tuple(f"r{i:06d}" for i in range(n)),
        target_name=spec.target_name,
        target_transform="none",
    )
    return normalize(table), GroundTruth(spec, terms)


def write_synthetic(out_dir: str | Path, table: FeatureTable, truth: GroundTruth) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "features": out / "features.csv",
        "schema": out / "schema.json",
        "ground_truth": out / "ground_truth.json",
    }
    write_table(table, paths["features"], paths["schema"])
    paths["ground_truth"].write_text(json.dumps(truth.to_json(), indent=2) + "\n", encoding="utf-8")
    return paths


def scenario_spec(scenario: str, n_rows: int = 20000, magnitude: float = 1.0, noise_sd: float = 0.25, seed: int = 0) -> PlantedSpec:
    """Two interacting visual/text features plus two main-effect distractors."""
    return PlantedSpec(
        n_rows=n_rows,
        features=(
            FeatureDef("meme", "visual"),
            FeatureDef("humor", "text"),
            FeatureDef("informational_support", "text"),
            FeatureDef("special_effects", "visual", "bernoulli_scaled"),
        ),
        main_effects=(MainEffect("informational_support", 1.0), MainEffect("special_effects", -0.5)),
        interactions=(PlantedInteraction("meme", "humor", scenario, magnitude),),
        noise_sd=noise_sd,
        seed=seed,
    )
