"""Command-line pipeline: simulate, ingest, train, explain, aggregate, interact,
affect, validate, flatten, annotate, report, plus a one-shot ``pipeline`` and
``rerun`` from a manifest.

Every command writes fixed file names under ``--out`` and exactly one
``manifest.<command>.json`` recording the argument vector, resolved
configuration, and sha256 of every input and output.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from contextlib import contextmanager
from dataclasses import replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .affect import affect_aggregate, affect_comparison, read_affect_csv, write_comparison_csv
from .annotations import (
    agreement,
    flatten,
    mock_annotate,
    read_human_csv,
    read_jsonl_annotations,
    write_jsonl_annotations,
)
from .attribution import beeswarm_export, beta_shap, importance_ranking, ordered, ranking_to_json, write_jsonl
from .charts import beeswarm_svg, forest_svg, quadrant_svg, write_svg
from .data_model import FeatureTable, SplitIndex, ingest, split, write_table
from .errors import ConfigError, ModalAttribError, ParseError, SchemaError, StaleArtifactError
from .gbdt import BoostConfig, BoostedModel, evaluate, train
from .interactions import (
    quadrant_regression,
    scatter_records,
    top_interacting_pairs,
    write_patterns_json,
    write_quadrant_csv,
)
from .shapley import ShapResult, make_background, shap_interactions, shap_values
from .synthetic import PlantedSpec, generate, scenario_spec, write_synthetic

THREADS_ENV = "MODAL_ATTRIB_THREADS"
MANIFEST_FORMAT = "modal_attrib.manifest/1"


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class Run:
    """Tracks inputs and outputs of one command invocation."""

    def __init__(self, command: str, argv: Sequence[str], out: Path, strict: bool):
        self.command = command
        self.argv = list(argv)
        self.out = out
        self.strict = strict
        self.inputs: dict[str, str] = {}
        self.outputs: list[str] = []
        self.config: dict = {}
        self.timings: dict[str, float] = {}
        out.mkdir(parents=True, exist_ok=True)

    def input(self, path: str | Path, error: type[ModalAttribError] = ParseError) -> Path:
        p = Path(path)
        if not p.is_file():
            raise error(f"input file not found: {p}")
        key = str(p.resolve())
        if key in self.inputs:
            return p
        produced_here = p.resolve().parent == self.out.resolve() and p.name in self.outputs
        digest = sha256_file(p)
        if self.strict and not produced_here:
            check_upstream(p, digest)
        self.inputs[key] = digest
        return p

    def output(self, name: str) -> Path:
        if name not in self.outputs:
            self.outputs.append(name)
        return self.out / name

    @contextmanager
    def timed(self, stage: str):
        t0 = time.perf_counter()
        yield
        self.timings[stage] = round(time.perf_counter() - t0, 6)

    def write_manifest(self) -> Path:
        manifest = {
            "format": MANIFEST_FORMAT,
            "version": __version__,
            "command": self.command,
            "argv": self.argv,
            "cwd": os.getcwd(),
            "config": self.config,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": {name: sha256_file(self.out / name) for name in self.outputs},
            "timings_seconds": self.timings,
        }
        path = self.out / f"manifest.{self.command}.json"
        _dump_json(manifest, path)
        return path


def check_upstream(path: Path, digest: str) -> None:
    """Compare ``path`` against any sibling manifest that lists it as an output."""
    for mf in sorted(path.resolve().parent.glob("manifest.*.json")):
        try:
            recorded = json.loads(mf.read_text(encoding="utf-8")).get("outputs", {})
        except (json.JSONDecodeError, OSError):
            continue
        if path.name in recorded and recorded[path.name] != digest:
            raise StaleArtifactError(f"{path} does not match the hash recorded in {mf.name}")


# ---------------------------------------------------------------- helpers


def _load_table(run: Run, args) -> FeatureTable:
    schema = run.input(args.schema, SchemaError)
    data = run.input(args.input)
    return ingest(data, schema, missing_policy=getattr(args, "missing_policy", "drop_row"))


def _load_model(run: Run, path: str) -> BoostedModel:
    return BoostedModel.load(run.input(path, SchemaError))


def _model_matrix(model: BoostedModel, table: FeatureTable) -> np.ndarray:
    names = table.feature_names
    missing = [f for f in model.feature_names if f not in names]
    if missing:
        raise SchemaError(f"model features missing from table: {missing}", column=missing[0])
    return np.ascontiguousarray(table.values[:, [names.index(f) for f in model.feature_names]])


def _select_rows(run: Run, args, table: FeatureTable) -> tuple[np.ndarray, np.ndarray]:
    """Rows to explain and rows to draw the background from."""
    every = np.arange(table.n_rows)
    if args.split:
        sp = SplitIndex.from_json(json.loads(run.input(args.split).read_text(encoding="utf-8")))
        if len(sp.train_rows) + len(sp.test_rows) != table.n_rows:
            raise ConfigError("split does not match the table's row count")
        chosen = {"test": sp.test_rows, "train": sp.train_rows, "all": every}[args.rows]
        pool = sp.train_rows
    else:
        chosen, pool = every, every
    if args.max_rows is not None:
        chosen = chosen[: args.max_rows]
    return np.asarray(chosen, dtype=np.int64), np.asarray(pool, dtype=np.int64)


def _parse_pair(text: str) -> tuple[str, str]:
    parts = text.split(":")
    if len(parts) != 2 or not all(parts):
        raise ConfigError(f"pair must look like feature_x:feature_y, got {text!r}")
    return parts[0], parts[1]


# ---------------------------------------------------------------- commands


def cmd_simulate(args, run: Run) -> None:
    if args.spec:
        spec = PlantedSpec.load(run.input(args.spec, ConfigError))
        if args.seed is not None:
            spec = PlantedSpec.from_json({**spec.to_json(), "seed": args.seed})
    else:
        spec = scenario_spec(args.scenario, args.n_rows, args.magnitude, args.noise_sd,
                             0 if args.seed is None else args.seed)
    run.config["planted_spec"] = spec.to_json()
    with run.timed("generate"):
        table, truth = generate(spec)
        paths = write_synthetic(run.out, table, truth)
    for p in paths.values():
        run.output(p.name)
    _dump_json(spec.to_json(), run.output("planted_spec.json"))


def cmd_ingest(args, run: Run) -> None:
    with run.timed("ingest"):
        table = _load_table(run, args)
        write_table(table, run.output("table.csv"), run.output("table_schema.json"))
    _dump_json(table.ingest_report.to_json() if table.ingest_report else {}, run.output("ingest_report.json"))


def cmd_train(args, run: Run) -> None:
    table = _load_table(run, args)
    if args.modalities:
        table = table.select_modalities(args.modalities.split(","))
    overrides = {
        k: v for k, v in {
            "iterations": args.iterations,
            "learning_rate": args.learning_rate,
            "max_depth": args.max_depth,
            "min_samples_leaf": args.min_samples_leaf,
        }.items() if v is not None
    }
    config = BoostConfig.preset(args.preset, seed=args.seed or 0, **overrides)
    sp = split(table, args.train_fraction, args.seed or 0)
    run.config["boost"] = {"preset": args.preset, **config.__dict__}
    with run.timed("train"):
        model, report = train(table, sp, config)
    model.save(run.output("model.json"))
    _dump_json(report.to_json(), run.output("train_report.json"))
    _dump_json(sp.to_json(), run.output("split.json"))
    metrics = {"train": evaluate(model, table, sp.train_rows), "n_trees": len(model.trees)}
    if len(sp.test_rows):
        metrics["test"] = evaluate(model, table, sp.test_rows)
    _dump_json(metrics, run.output("metrics.json"))


def cmd_explain(args, run: Run) -> None:
    model = _load_model(run, args.model)
    table = _load_table(run, args)
    X = _model_matrix(model, table)
    rows, pool = _select_rows(run, args, table)
    bg = make_background(X[pool], args.background_size, args.seed or 0)
    run.config["background_rows"] = bg.size
    with run.timed("shap"):
        res = shap_values(model, X[rows], bg, [table.row_ids[i] for i in rows])
    res.to_csv(run.output("shap.csv"), run.output("shap_header.json"))


def cmd_aggregate(args, run: Run) -> None:
    shap_path = run.input(args.shap)
    header = args.shap_header or str(Path(args.shap).with_name("shap_header.json"))
    res = ShapResult.from_csv(shap_path, run.input(header))
    table = _load_table(run, args)
    with run.timed("beta"):
        summary = beta_shap(res, table, args.centering, args.normalization, args.n_boot, args.seed or 0)
    summary.features = ordered(summary)
    summary.to_csv(run.output("beta.csv"), run.output("beta_meta.json"))
    ranking = importance_ranking(summary, args.top_k_pos, args.top_k_neg, not args.pooled)
    _dump_json(ranking_to_json(ranking), run.output("ranking.json"))
    write_jsonl(beeswarm_export(res, table, summary=summary), run.output("beeswarm.jsonl"))


def cmd_interact(args, run: Run) -> None:
    model = _load_model(run, args.model)
    table = _load_table(run, args)
    X = _model_matrix(model, table)
    rows, pool = _select_rows(run, args, table)
    bg = make_background(X[pool], args.background_size, args.seed or 0)
    with run.timed("interactions"):
        tensor = shap_interactions(model, X[rows], bg, [table.row_ids[i] for i in rows])
    tensor.to_csv(run.output("interactions.csv"))
    top = top_interacting_pairs(tensor, max(args.top_pairs, 1))
    _dump_json([{"feature_a": a, "feature_b": b, "mean_abs_phi": s} for a, b, s in top], run.output("top_pairs.json"))

    pairs = [_parse_pair(p) for p in args.pair] if args.pair else [(a, b) for a, b, _ in top[: args.top_pairs]]
    reports = []
    scatter = []
    with run.timed("quadrants"):
        for fx, fy in pairs:
            reports.append(quadrant_regression(
                tensor, table, fx, fy,
                threshold_mode=args.threshold_mode,
                regressor_mode=args.regressor,
                response=args.response,
                fit_intercept=args.fit_intercept,
                tol=args.tol,
            ))
            scatter.extend(scatter_records(tensor, table, fx, fy))
    write_quadrant_csv(reports, run.output("quadrants.csv"))
    write_patterns_json(reports, run.output("patterns.json"))
    write_jsonl(scatter, run.output("scatter.jsonl"))


def cmd_affect(args, run: Run) -> None:
    records = read_affect_csv(run.input(args.input))
    cells = affect_comparison(records, ci=args.ci, level=args.level, n_boot=args.n_boot,
                              seed=args.seed or 0, frame_level=args.frame_level)
    write_comparison_csv(cells, run.output("affect_comparison.csv"))
    with run.output("affect_aggregate.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row_id", "positive_affect", "negative_affect"])
        for rec in affect_aggregate(records):
            w.writerow([rec["row_id"], repr(rec["positive_affect"]), repr(rec["negative_affect"])])


def cmd_validate(args, run: Run) -> None:
    machine = read_jsonl_annotations(run.input(args.machine), args.kind)
    human = read_human_csv(run.input(args.human))
    report = agreement(machine, human, args.threshold)
    _dump_json(report.to_json(), run.output("agreement.json"))
    print(json.dumps({"overall": report.overall, "per_category": report.per_category}))


def cmd_flatten(args, run: Run) -> None:
    anns = read_jsonl_annotations(run.input(args.input), args.kind)
    flat = flatten(anns, args.prefix, None if args.aggregate == "none" else args.aggregate, args.modality)
    flat.write_csv(run.output("flat_features.csv"))
    _dump_json({"columns": [c.to_json() for c in flat.columns]}, run.output("flat_columns.json"))
    write_jsonl(flat.sidecar, run.output("flat_sidecar.jsonl"))


def cmd_annotate(args, run: Run) -> None:
    with run.input(args.input).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"row_id", "text"} <= set(reader.fieldnames):
            raise ParseError(f"{args.input}: needs row_id and text columns")
        items = [(rec["row_id"], rec["text"] or "") for rec in reader]
    anns = []
    for rid, text in items:
        anns.append(replace(mock_annotate(text, args.seed or 0), row_id=rid))
    write_jsonl_annotations(anns, run.output("annotations.jsonl"))


def _read_csv_dicts(path: Path) -> list[dict]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def cmd_report(args, run: Run) -> None:
    src = Path(args.run_dir or run.out)
    summary: dict = {}

    def have(name: str) -> Path | None:
        p = src / name
        return run.input(p) if p.is_file() else None

    if p := have("metrics.json"):
        summary["metrics"] = json.loads(p.read_text(encoding="utf-8"))
    if p := have("beta.csv"):
        rows = [
            {
                "feature": r["feature"],
                "modality": r["modality"],
                "beta_shap": float(r["beta_shap"]),
                "ci_lo": float(r["ci_lo"]) if r["ci_lo"] else None,
                "ci_hi": float(r["ci_hi"]) if r["ci_hi"] else None,
            }
            for r in _read_csv_dicts(p)
        ]
        summary["beta"] = rows
        write_svg(forest_svg(rows), run.output("forest.svg"))
    if p := have("beeswarm.jsonl"):
        records = [json.loads(line) for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]
        write_svg(beeswarm_svg(records), run.output("beeswarm.svg"))
    if p := have("patterns.json"):
        patterns = json.loads(p.read_text(encoding="utf-8"))
        summary["patterns"] = patterns
        sc = have("scatter.jsonl")
        if patterns and sc:
            first = patterns[0]
            pts = [
                rec for rec in (json.loads(line) for line in sc.read_text(encoding="utf-8").splitlines() if line.strip())
                if rec["feature_x"] == first["feature_x"] and rec["feature_y"] == first["feature_y"]
            ]
            write_svg(quadrant_svg(pts, first, "joint" if first["response"] == "joint" else "phi_xy"),
                      run.output("quadrant.svg"))
    if p := have("agreement.json"):
        summary["agreement"] = json.loads(p.read_text(encoding="utf-8"))
    if p := have("affect_comparison.csv"):
        summary["affect"] = _read_csv_dicts(p)
    if p := have("ground_truth.json"):
        summary["ground_truth"] = json.loads(p.read_text(encoding="utf-8"))["terms"]
    _dump_json(summary, run.output("summary.json"))


def cmd_pipeline(args, run: Run) -> None:
    """simulate (with --spec) or ingest, then train, explain, aggregate, interact, report in one directory."""
    out = str(run.out)
    common = ["--out", out, "--seed", str(args.seed or 0)]
    pairs: list[str] = list(args.pair or [])
    if args.spec:
        seed = [] if args.seed is None else ["--seed", str(args.seed)]
        cmd_simulate(_sub(["simulate", "--spec", args.spec, "--out", out, *seed]), run)
        data, schema = str(run.out / "features.csv"), str(run.out / "schema.json")
        if not pairs:
            truth = json.loads((run.out / "ground_truth.json").read_text(encoding="utf-8"))
            pairs = [f"{t['feature_x']}:{t['feature_y']}" for t in truth["terms"] if t["type"] == "interaction"]
    elif args.input and args.schema:
        data, schema = args.input, args.schema
    else:
        raise ConfigError("pipeline needs --spec or both --input and --schema")
    io = ["--input", data, "--schema", schema]
    train_argv = ["train", *io, "--preset", args.preset, *common]
    if args.iterations is not None:
        train_argv += ["--iterations", str(args.iterations)]
    cmd_train(_sub(train_argv), run)
    model, sp = str(run.out / "model.json"), str(run.out / "split.json")
    rows = ["--split", sp, "--background-size", str(args.background_size)]
    if args.max_rows is not None:
        rows += ["--max-rows", str(args.max_rows)]
    cmd_explain(_sub(["explain", "--model", model, *io, *rows, *common]), run)
    cmd_aggregate(_sub(["aggregate", "--shap", str(run.out / "shap.csv"), *io, "--n-boot", str(args.n_boot), *common]), run)
    pair_flags = [x for p in pairs for x in ("--pair", p)]
    cmd_interact(_sub(["interact", "--model", model, *io, *rows, *pair_flags, *common]), run)
    cmd_report(_sub(["report", "--run-dir", out, *common]), run)


COMMANDS: dict[str, Callable] = {
    "simulate": cmd_simulate,
    "ingest": cmd_ingest,
    "train": cmd_train,
    "explain": cmd_explain,
    "aggregate": cmd_aggregate,
    "interact": cmd_interact,
    "affect": cmd_affect,
    "validate": cmd_validate,
    "flatten": cmd_flatten,
    "annotate": cmd_annotate,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="seed for every random choice (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads; default ${THREADS_ENV} or all cores")
    common.add_argument("--strict", action="store_true",
                        help="fail if an input no longer matches the hash in its upstream manifest")

    table = argparse.ArgumentParser(add_help=False)
    table.add_argument("--input", required=True, help="feature CSV")
    table.add_argument("--schema", required=True, help="schema JSON")
    table.add_argument("--missing-policy", default="drop_row", choices=("drop_row", "fill_zero"))

    rows = argparse.ArgumentParser(add_help=False)
    rows.add_argument("--model", required=True)
    rows.add_argument("--split", default=None, help="split.json from train; background comes from its train rows")
    rows.add_argument("--rows", default="test", choices=("test", "train", "all"))
    rows.add_argument("--max-rows", type=int, default=None)
    rows.add_argument("--background-size", type=int, default=1024)

    p = argparse.ArgumentParser(prog="modal-attrib", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="write a synthetic table with planted effects")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="planted spec JSON")
    g.add_argument("--scenario", choices=("x_threshold", "y_threshold", "symmetric"))
    s.add_argument("--n-rows", type=int, default=20000)
    s.add_argument("--magnitude", type=float, default=1.0)
    s.add_argument("--noise-sd", type=float, default=0.25)

    sub.add_parser("ingest", parents=[common, table], help="validate and normalize a feature CSV")

    s = sub.add_parser("train", parents=[common, table], help="fit a boosted regression model")
    s.add_argument("--preset", default="within", choices=("within", "cross"))
    s.add_argument("--train-fraction", type=float, default=0.8)
    s.add_argument("--modalities", default=None, help="comma-separated modalities to keep")
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--learning-rate", type=float, default=None)
    s.add_argument("--max-depth", type=int, default=None)
    s.add_argument("--min-samples-leaf", type=int, default=None)

    sub.add_parser("explain", parents=[common, table, rows], help="per-row SHAP values")

    s = sub.add_parser("aggregate", parents=[common, table], help="feature-weighted SHAP, ranking, beeswarm data")
    s.add_argument("--shap", required=True)
    s.add_argument("--shap-header", default=None)
    s.add_argument("--centering", default="half", choices=("half", "mean", "median"))
    s.add_argument("--normalization", default="mean", choices=("mean", "sum"))
    s.add_argument("--n-boot", type=int, default=1000)
    s.add_argument("--top-k-pos", type=int, default=5)
    s.add_argument("--top-k-neg", type=int, default=5)
    s.add_argument("--pooled", action="store_true", help="rank across modalities instead of within each")

    s = sub.add_parser("interact", parents=[common, table, rows], help="interaction values and quadrant patterns")
    s.add_argument("--pair", action="append", help="feature_x:feature_y (repeatable)")
    s.add_argument("--top-pairs", type=int, default=3)
    s.add_argument("--threshold-mode", default="median", choices=("median", "fixed50"))
    s.add_argument("--regressor", default="x_value", choices=("x_value", "centered_product"))
    s.add_argument("--response", default="joint", choices=("joint", "interaction"))
    s.add_argument("--fit-intercept", action="store_true")
    s.add_argument("--tol", type=float, default=None)

    s = sub.add_parser("affect", parents=[common], help="emotion-weighted sentiment with intervals")
    s.add_argument("--input", required=True)
    s.add_argument("--ci", default="normal", choices=("normal", "bootstrap"))
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--n-boot", type=int, default=2000)
    s.add_argument("--frame-level", action="store_true")

    s = sub.add_parser("validate", parents=[common], help="percent agreement against human labels")
    s.add_argument("--machine", required=True)
    s.add_argument("--human", required=True)
    s.add_argument("--threshold", type=float, default=50.0)
    s.add_argument("--kind", default="auto", choices=("auto", "text", "visual", "raw"))

    s = sub.add_parser("flatten", parents=[common], help="annotation JSONL to probabilistic columns")
    s.add_argument("--input", required=True)
    s.add_argument("--kind", default="auto", choices=("auto", "text", "visual"))
    s.add_argument("--prefix", required=True)
    s.add_argument("--aggregate", default="none", choices=("none", "mean", "max"))
    s.add_argument("--modality", default=None)

    s = sub.add_parser("annotate", parents=[common], help="label texts with the deterministic mock annotator")
    s.add_argument("--input", required=True, help="CSV with row_id,text")

    s = sub.add_parser("report", parents=[common], help="summary JSON and SVG charts from a run directory")
    s.add_argument("--run-dir", default=None, help="directory holding upstream outputs (default --out)")

    s = sub.add_parser("pipeline", parents=[common], help="end-to-end run into one directory")
    s.add_argument("--spec", default=None)
    s.add_argument("--input", default=None)
    s.add_argument("--schema", default=None)
    s.add_argument("--preset", default="within", choices=("within", "cross"))
    s.add_argument("--iterations", type=int, default=None)
    s.add_argument("--pair", action="append")
    s.add_argument("--background-size", type=int, default=1024)
    s.add_argument("--max-rows", type=int, default=None)
    s.add_argument("--n-boot", type=int, default=1000)

    s = sub.add_parser("rerun", help="replay the command recorded in a manifest")
    s.add_argument("--manifest", required=True)
    s.add_argument("--out", default=None, help="write to this directory instead of the recorded one")
    return p


def _sub(argv: list[str]) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _set_threads(requested: int | None) -> int:
    import numba

    n = requested
    if n is None and os.environ.get(THREADS_ENV):
        try:
            n = int(os.environ[THREADS_ENV])
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer") from None
    if n is None:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("--threads must be >= 1")
    n = min(n, numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n


def _rerun(manifest_path: str, out: str | None) -> int:
    try:
        manifest = json.loads(Path(manifest_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {manifest_path}: {exc}") from None
    if manifest.get("format") != MANIFEST_FORMAT:
        raise ConfigError(f"{manifest_path} is not a run manifest")
    argv = list(manifest["argv"])
    if out is not None:
        argv += ["--out", str(Path(out).resolve())]
    prev = os.getcwd()
    os.chdir(manifest.get("cwd", prev))
    try:
        return main(argv)
    finally:
        os.chdir(prev)


def _fail(exc: BaseException, code: int) -> int:
    payload = exc.to_dict() if isinstance(exc, ModalAttribError) else {"kind": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "rerun":
            return _rerun(args.manifest, args.out)
        threads = _set_threads(args.threads)
        run = Run(args.command, argv, Path(args.out), args.strict)
        run.config.update({k: v for k, v in vars(args).items() if k not in ("threads",)})
        run.config["seed"] = args.seed or 0
        run.config["threads"] = threads
        with run.timed("total"):
            COMMANDS[args.command](args, run)
        run.write_manifest()
    except ModalAttribError as exc:
        return _fail(exc, 2)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
