"""Multimodal feature tables: schema, CSV/JSON ingestion, 0-100 normalization, splits."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DuplicateIdError, ParseError, SchemaError

MODALITIES = ("text", "visual", "audio", "meta")
KINDS = ("probabilistic", "continuous", "binary")
TARGET_TRANSFORMS = ("log1p", "none")
MISSING_POLICIES = ("drop_row", "fill_zero")
ROW_ID = "row_id"

PROB_RANGE = (0.0, 100.0)


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    modality: str
    kind: str
    declared_range: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise SchemaError("column name must be a non-empty string", column=str(self.name))
        if self.modality not in MODALITIES:
            raise SchemaError(f"column {self.name!r}: unknown modality {self.modality!r}", column=self.name)
        if self.kind not in KINDS:
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}", column=self.name)
        rng = self.declared_range
        if rng is not None:
            if len(rng) != 2 or not all(math.isfinite(float(v)) for v in rng) or float(rng[0]) >= float(rng[1]):
                raise SchemaError(f"column {self.name!r}: invalid range {rng!r}", column=self.name)
            object.__setattr__(self, "declared_range", (float(rng[0]), float(rng[1])))
        if self.kind == "probabilistic":
            if self.declared_range is None:
                object.__setattr__(self, "declared_range", PROB_RANGE)
            elif self.declared_range != PROB_RANGE:
                raise SchemaError(f"probabilistic column {self.name!r} must have range [0, 100]", column=self.name)

    def to_json(self) -> dict:
        out = {"name": self.name, "modality": self.modality, "kind": self.kind}
        if self.declared_range is not None:
            out["range"] = list(self.declared_range)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ColumnSpec":
        try:
            rng = obj.get("range")
            return cls(
                name=obj["name"],
                modality=obj["modality"],
                kind=obj["kind"],
                declared_range=tuple(rng) if rng is not None else None,
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed column entry {obj!r}: {exc}") from None


@dataclass(frozen=True)
class Schema:
    target: str
    transform: str
    columns: tuple[ColumnSpec, ...]
    # target values were already transformed upstream (set by write_table)
    source_transform: str | None = None

    def __post_init__(self) -> None:
        if self.transform not in TARGET_TRANSFORMS:
            raise SchemaError(f"unknown target transform {self.transform!r}", column=self.target)
        names = [c.name for c in self.columns]
        seen = set()
        for n in names:
            if n in seen:
                raise SchemaError(f"duplicate column name {n!r}", column=n)
            seen.add(n)
        if self.target in seen or self.target == ROW_ID:
            raise SchemaError(f"target {self.target!r} collides with a feature or row_id column", column=self.target)
        if ROW_ID in seen:
            raise SchemaError("row_id cannot be a feature column", column=ROW_ID)

    def to_json(self) -> dict:
        target = {"name": self.target, "transform": self.transform}
        if self.source_transform:
            target["source_transform"] = self.source_transform
        return {"target": target, "columns": [c.to_json() for c in self.columns]}


def load_schema(path: str | Path) -> Schema:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise SchemaError(f"schema file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"schema file {path} is not valid JSON: {exc}") from None
    if not isinstance(obj, dict) or "target" not in obj or "columns" not in obj:
        raise SchemaError(f"schema file {path} needs 'target' and 'columns'")
    tgt = obj["target"]
    if not isinstance(tgt, dict) or "name" not in tgt:
        raise SchemaError("schema 'target' must be an object with a 'name'")
    columns = tuple(ColumnSpec.from_json(c) for c in obj["columns"])
    return Schema(
        target=tgt["name"],
        transform=tgt.get("transform", "none"),
        columns=columns,
        source_transform=tgt.get("source_transform"),
    )


@dataclass(frozen=True)
class IngestReport:
    n_read: int
    dropped: int = 0
    filled: int = 0
    clamped: int = 0
    missing_policy: str = "drop_row"

    def to_json(self) -> dict:
        return {
            "n_read": self.n_read,
            "dropped": self.dropped,
            "filled": self.filled,
            "clamped": self.clamped,
            "missing_policy": self.missing_policy,
        }


@dataclass(frozen=True)
class FeatureTable:
    """Immutable modality-tagged feature matrix with a target and row ids.

    ``transforms`` maps each column to the ``(lo, hi)`` pair used by
    normalization, so ``raw = lo + normalized / 100 * (hi - lo)``; ``None``
    means the column passed through unchanged.
    """

    schema: tuple[ColumnSpec, ...]
    values: np.ndarray
    target: np.ndarray
    row_ids: tuple[str, ...]
    target_name: str = "target"
    target_transform: str = "none"
    transforms: dict = field(default_factory=dict)
    normalized: bool = False
    ingest_report: IngestReport | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, copy=True)
        target = np.array(self.target, dtype=np.float64, copy=True).reshape(-1)
        schema = tuple(self.schema)
        if values.ndim == 1 and len(schema) <= 1:
            values = values.reshape(-1, len(schema))
        if values.ndim != 2 or values.shape[1] != len(schema):
            raise SchemaError(f"values shape {values.shape} does not match {len(schema)} schema columns")
        n = values.shape[0]
        if target.shape[0] != n or len(self.row_ids) != n:
            raise SchemaError("values, target and row_ids must have the same number of rows")
        names = [c.name for c in schema]
        if len(set(names)) != len(names):
            dup = next(x for x in names if names.count(x) > 1)
            raise SchemaError(f"duplicate column name {dup!r}", column=dup)
        row_ids = tuple(str(r) for r in self.row_ids)
        if len(set(row_ids)) != n:
            seen = set()
            for r in row_ids:
                if r in seen:
                    raise DuplicateIdError(f"duplicate row_id {r!r}")
                seen.add(r)
        if not np.all(np.isfinite(values)):
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise ParseError(f"non-finite value in column {names[j]!r}", row=int(i), column=names[j])
        if not np.all(np.isfinite(target)):
            i = int(np.argwhere(~np.isfinite(target))[0][0])
            raise ParseError("non-finite target value", row=i, column=self.target_name)
        if self.normalized:
            for j, col in enumerate(schema):
                lo, hi = col.declared_range if col.kind == "probabilistic" else PROB_RANGE
                if n and (values[:, j].min() < lo or values[:, j].max() > hi):
                    raise SchemaError(f"column {col.name!r} outside [{lo}, {hi}] after normalization", column=col.name)
                if col.kind == "binary" and n and not np.all(np.isin(values[:, j], (0.0, 100.0))):
                    raise SchemaError(f"binary column {col.name!r} must be 0 or 100", column=col.name)
        values.setflags(write=False)
        target.setflags(write=False)
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "transforms", dict(self.transforms))

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def feature_names(self) -> list[str]:
        return [c.name for c in self.schema]

    @property
    def modalities(self) -> list[str]:
        return [c.modality for c in self.schema]

    def index_of(self, name: str) -> int:
        for j, c in enumerate(self.schema):
            if c.name == name:
                return j
        raise SchemaError(f"unknown feature {name!r}", column=name)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.index_of(name)]

    def take(self, rows: Sequence[int] | np.ndarray) -> "FeatureTable":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(
            self,
            values=self.values[rows],
            target=self.target[rows],
            row_ids=tuple(self.row_ids[i] for i in rows),
        )

    def select_modalities(self, modalities: Iterable[str]) -> "FeatureTable":
        keep = [j for j, c in enumerate(self.schema) if c.modality in set(modalities)]
        if not keep:
            raise SchemaError(f"no columns with modality in {sorted(set(modalities))}")
        return replace(
            self,
            schema=tuple(self.schema[j] for j in keep),
            values=self.values[:, keep],
            transforms={self.schema[j].name: self.transforms.get(self.schema[j].name) for j in keep},
        )

    def fingerprint(self) -> str:
        return schema_fingerprint(self.schema)


def schema_fingerprint(schema: Sequence[ColumnSpec]) -> str:
    import hashlib

    payload = json.dumps([[c.name, c.modality, c.kind] for c in schema], separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _normalize_column(col: ColumnSpec, x: np.ndarray) -> tuple[np.ndarray, tuple[float, float] | None]:
    if x.size and not np.all(np.isfinite(x)):
        i = int(np.argwhere(~np.isfinite(x))[0][0])
        raise ParseError(f"non-finite value in column {col.name!r}", row=i, column=col.name)
    if col.kind == "probabilistic":
        if x.size and (x.min() < 0.0 or x.max() > 100.0):
            bad = float(x[(x < 0.0) | (x > 100.0)][0])
            raise SchemaError(f"value {bad} outside [0, 100] in probabilistic column {col.name!r}", column=col.name)
        return x.copy(), None
    if col.kind == "binary":
        vals = set(np.unique(x).tolist())
        if vals <= {0.0, 100.0}:
            return x.copy(), None
        if vals <= {0.0, 1.0}:
            return x * 100.0, (0.0, 1.0)
        raise SchemaError(f"binary column {col.name!r} has values other than 0/1 or 0/100", column=col.name)
    # continuous
    if col.declared_range is not None:
        lo, hi = col.declared_range
        if x.size and (x.min() < lo or x.max() > hi):
            raise SchemaError(f"value outside declared range [{lo}, {hi}] in column {col.name!r}", column=col.name)
    elif x.size:
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            return np.full_like(x, 50.0), (lo, hi)
    else:
        return x.copy(), None
    if (lo, hi) == PROB_RANGE:
        return x.copy(), (lo, hi)
    return (x - lo) / (hi - lo) * 100.0, (lo, hi)


def normalize(table: FeatureTable) -> FeatureTable:
    """Map every column onto the 0-100 scale.

    Probabilistic columns pass through; binary 0/1 columns become 0/100;
    continuous columns are min-max rescaled (constant columns go to 50).
    """
    out = np.empty_like(table.values)
    transforms = {}
    for j, col in enumerate(table.schema):
        out[:, j], transforms[col.name] = _normalize_column(col, np.asarray(table.values[:, j]))
    return replace(table, values=out, transforms=transforms, normalized=True)


def denormalize_column(table: FeatureTable, name: str) -> np.ndarray:
    x = table.column(name)
    aff = table.transforms.get(name)
    if aff is None:
        return x.copy()
    lo, hi = aff
    if lo == hi:
        return np.full_like(x, lo)
    return lo + x / 100.0 * (hi - lo)


def _parse_cell(text: str, row: int, column: str) -> float | None:
    text = text.strip()
    if text == "" or text.lower() in ("na", "nan", "null"):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse {text!r} as a number (row {row}, column {column!r})", row=row, column=column) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r} (row {row}, column {column!r})", row=row, column=column)
    return value


def ingest(
    path: str | Path,
    schema_path: str | Path,
    missing_policy: str = "drop_row",
    clamp: bool = False,
) -> FeatureTable:
    """Read a feature CSV against its schema JSON and return a normalized table.

    ``row`` numbers in errors are 1-based data rows (the header is row 0).
    Rows whose target is missing are always dropped; ``fill_zero`` only
    applies to feature cells.
    """
    if missing_policy not in MISSING_POLICIES:
        raise ConfigError(f"missing_policy must be one of {MISSING_POLICIES}")
    schema = load_schema(schema_path)
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except FileNotFoundError:
        raise ParseError(f"feature file not found: {path}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty") from None
        expected = {c.name for c in schema.columns} | {ROW_ID, schema.target}
        for name in header:
            if name not in expected:
                raise SchemaError(f"CSV column {name!r} is not declared in the schema", column=name)
        for name in [ROW_ID, schema.target] + [c.name for c in schema.columns]:
            if name not in header:
                raise SchemaError(f"column {name!r} missing from {path}", column=name)
        if len(set(header)) != len(header):
            dup = next(h for h in header if header.count(h) > 1)
            raise SchemaError(f"duplicate CSV column {dup!r}", column=dup)
        pos = {h: i for i, h in enumerate(header)}
        feat_names = [c.name for c in schema.columns]
        rows, targets, ids = [], [], []
        n_read = dropped = filled = 0
        seen_ids: set[str] = set()
        for line_no, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"row {line_no} has {len(rec)} cells, expected {len(header)}", row=line_no)
            n_read += 1
            rid = rec[pos[ROW_ID]].strip()
            if not rid:
                raise ParseError(f"row {line_no} has an empty row_id", row=line_no, column=ROW_ID)
            if rid in seen_ids:
                raise DuplicateIdError(f"duplicate row_id {rid!r} at row {line_no}")
            seen_ids.add(rid)
            y = _parse_cell(rec[pos[schema.target]], line_no, schema.target)
            feats = [_parse_cell(rec[pos[n]], line_no, n) for n in feat_names]
            n_missing = sum(v is None for v in feats)
            if y is None or (n_missing and missing_policy == "drop_row"):
                dropped += 1
                continue
            if n_missing:
                filled += n_missing
                feats = [0.0 if v is None else v for v in feats]
            if schema.transform == "log1p":
                if y < 0:
                    raise ParseError(f"negative view count {y} at row {line_no}", row=line_no, column=schema.target)
                y = math.log1p(y)
            rows.append(feats)
            targets.append(y)
            ids.append(rid)

    values = np.array(rows, dtype=np.float64).reshape(len(rows), len(feat_names))
    clamped = 0
    if clamp:
        for j, col in enumerate(schema.columns):
            if col.kind == "probabilistic":
                bad = (values[:, j] < 0.0) | (values[:, j] > 100.0)
                clamped += int(bad.sum())
                values[:, j] = np.clip(values[:, j], 0.0, 100.0)
    report = IngestReport(n_read=n_read, dropped=dropped, filled=filled, clamped=clamped, missing_policy=missing_policy)
    raw = FeatureTable(
        schema=schema.columns,
        values=values,
        target=np.array(targets, dtype=np.float64),
        row_ids=tuple(ids),
        target_name=schema.target,
        target_transform=schema.source_transform or schema.transform,
        ingest_report=report,
    )
    return normalize(raw)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_table(table: FeatureTable, csv_path: str | Path, schema_path: str | Path) -> None:
    """Write a table so that ``ingest`` reproduces it bit for bit.

    The target is written already transformed; the schema records that via
    ``source_transform`` so reports still state the original transform.
    """
    columns = []
    for c in table.schema:
        if c.kind == "continuous" and table.normalized:
            c = replace(c, declared_range=PROB_RANGE)
        columns.append(c)
    schema = Schema(
        target=table.target_name,
        transform="none",
        columns=tuple(columns),
        source_transform=table.target_transform if table.target_transform != "none" else None,
    )
    Path(schema_path).write_text(json.dumps(schema.to_json(), indent=2) + "\n", encoding="utf-8")
    with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([ROW_ID] + table.feature_names + [table.target_name])
        for i in range(table.n_rows):
            w.writerow([table.row_ids[i]] + [_fmt(v) for v in table.values[i]] + [_fmt(table.target[i])])


@dataclass(frozen=True)
class SplitIndex:
    train_rows: np.ndarray
    test_rows: np.ndarray
    seed: int
    train_fraction: float

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "train_fraction": self.train_fraction,
            "train_rows": self.train_rows.tolist(),
            "test_rows": self.test_rows.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SplitIndex":
        return cls(
            train_rows=np.asarray(obj["train_rows"], dtype=np.int64),
            test_rows=np.asarray(obj["test_rows"], dtype=np.int64),
            seed=int(obj["seed"]),
            train_fraction=float(obj["train_fraction"]),
        )


def split(table: FeatureTable | int, train_fraction: float = 0.8, seed: int = 0) -> SplitIndex:
    """Seeded permutation, prefix becomes train; both index lists are sorted."""
    n = table if isinstance(table, int) else table.n_rows
    if not (0.0 < train_fraction < 1.0):
        raise ConfigError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    if n < 5:
        raise ConfigError(f"need at least 5 rows to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    return SplitIndex(
        train_rows=np.sort(perm[:n_train]),
        test_rows=np.sort(perm[n_train:]),
        seed=seed,
        train_fraction=train_fraction,
    )
