"""Command-line interface. Each workflow stage is its own subcommand; ``run`` does them all.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric error.
"""
import argparse
import json
import os
import sys

import numpy as np

from . import __version__, classifiers, metrics, pipeline, stats, svg, tuning
from .data_model import clean_csv, load_schema, write_csv
from .errors import ConfigError, DataError, MDRError
from .features import encode_dataset, load_family_map
from .persistence import canonical_bytes, model_to_document, read_json, write_json
from .synth import SynthConfig, generate


def _read_bytes(path):
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def _json_arg(text):
    """Inline JSON or a path to a JSON file."""
    if text is None:
        return None
    if os.path.isfile(text):
        text = _read_bytes(text).decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON argument: {exc}") from None


def _emit(args, text, default_name=None):
    out = args.out or default_name
    if out is None:
        sys.stdout.write(text)
    else:
        pipeline.write_text(out, text)


def _require_out(args, what):
    if not args.out:
        raise ConfigError(f"--out is required for {what}")
    return args.out


def cmd_gen(args):
    schema = load_schema(args.schema)
    cfg = SynthConfig(n_records=args.n, seed=args.seed, mdr_prevalence=args.prevalence,
                      signal_strength=args.signal, noise_rate=args.noise,
                      missing_rate=args.missing)
    raw, truth = generate(cfg, schema)
    out = _require_out(args, "gen")
    pipeline.write_bytes(out, raw)
    if args.truth:
        write_json(args.truth, truth)


def cmd_clean(args):
    schema = load_schema(args.schema)
    records, report = clean_csv(_read_bytes(args.input), schema)
    _emit(args, write_csv(records, schema))
    doc = report.to_dict()
    if args.report:
        write_json(args.report, doc)
    else:
        sys.stderr.write(json.dumps(doc, sort_keys=True) + "\n")


def cmd_features(args):
    schema = load_schema(args.schema)
    fmap = load_family_map(args.families)
    fmap.validate_against(schema)
    records, _ = clean_csv(_read_bytes(args.input), schema)
    ds = encode_dataset(records, fmap, schema, args.mdr_threshold)
    _emit(args, ds.to_csv())


def cmd_split(args):
    ds = pipeline.read_dataset(args.input)
    sp = tuning.stratified_split(ds.y, args.test_fraction, args.seed)
    _emit(args, canonical_bytes(sp.to_dict()).decode("utf-8"))


def _train_rows(args, ds):
    if args.split:
        return pipeline.read_split(args.split)
    all_idx = np.arange(len(ds))
    return tuning.SplitIndices(train=all_idx, test=all_idx[:0], seed=args.seed)


def cmd_train(args):
    ds = pipeline.read_dataset(args.input)
    sp = _train_rows(args, ds)
    spec = classifiers.ClassifierSpec(args.kind, _json_arg(args.params) or {}, args.seed)
    y = ds.y[sp.train]
    cw = tuning.balanced_class_weights(y) if not args.unweighted else None
    model = classifiers.fit(spec, ds.X[sp.train], y, tuning.sample_weights(y, cw),
                            ds.feature_names, n_jobs=args.n_jobs)
    meta = {"seed": args.seed, "data_sha256": pipeline.sha256_file(args.input),
            "class_weights": {str(k): v for k, v in (cw or {}).items()}}
    pipeline.write_bytes(_require_out(args, "train"), canonical_bytes(model_to_document(model, meta)))


def cmd_tune(args):
    ds = pipeline.read_dataset(args.input)
    sp = _train_rows(args, ds)
    result = pipeline.tune_one(ds, sp, args.kind, _json_arg(args.grid), args.folds, args.seed,
                               args.n_jobs)
    meta = pipeline.model_metadata(result, pipeline.sha256_file(args.input), args.seed)
    pipeline.write_bytes(_require_out(args, "tune"),
                         canonical_bytes(model_to_document(result.model, meta)))
    if args.result:
        write_json(args.result, result.to_dict())


def cmd_evaluate(args):
    ds = pipeline.read_dataset(args.input)
    sp = pipeline.read_split(args.split)
    models = pipeline.load_models(args.model)
    metrics_doc, preds_doc = pipeline.evaluate_models(models, ds, sp)
    write_json(_require_out(args, "evaluate"), metrics_doc)
    if args.predictions:
        write_json(args.predictions, preds_doc)
    if args.table:
        reports = {k: metrics.MetricsReport(**v) for k, v in metrics_doc["reports"].items()}
        pipeline.write_text(args.table, metrics.table_csv(reports))


def cmd_compare(args):
    preds_doc = read_json(args.predictions)
    folds = {}
    for path in args.tuning or []:
        doc = read_json(path)
        best = doc["cells"][doc["best_index"]]
        folds[doc["kind"]] = {"f1": best["fold_f1"], "auc": best["fold_auc"]}
    matrix = pipeline.compare_predictions(preds_doc, folds)
    _emit(args, canonical_bytes(matrix).decode("utf-8"))
    if args.csv:
        pipeline.write_text(args.csv, stats.matrix_csv(matrix))


def cmd_explain(args):
    ds = pipeline.read_dataset(args.input)
    sp = pipeline.read_split(args.split)
    models = pipeline.load_models([args.model])
    (name, model), = models.items()
    if args.instances:
        ids = [int(v) for v in args.instances.split(",")]
        if any(not 0 <= i < len(ds) for i in ids):
            raise DataError("instance id out of range")
    else:
        ids = pipeline.choose_instances(sp, args.n, args.seed)
    settings = {"n_samples": args.n_samples, "top_k": args.top_k}
    if args.kernel_width is not None:
        settings["kernel_width"] = args.kernel_width
    config = pipeline.lime_config(settings, args.seed)
    out = _require_out(args, "explain")
    for exp in pipeline.explain_rows(model, ds, sp, ids, config):
        doc = exp.to_dict()
        write_json(os.path.join(out, f"instance_{exp.instance_id}.json"), doc)
        bars = [(e["condition"], e["weight"]) for e in doc["entries"]]
        title = f"{name}, instance {exp.instance_id} (p = {exp.predicted_proba:.3f})"
        pipeline.write_text(os.path.join(out, f"instance_{exp.instance_id}.svg"),
                            svg.bar_chart(bars, title))


def cmd_report(args):
    for path in pipeline.render_reports(args.run_dir):
        print(path)


def cmd_run(args):
    manifest = pipeline.run_pipeline(args.config, out_dir=args.out, n_jobs=args.n_jobs,
                                     seed=args.seed)
    print(f"{len(manifest['files'])} files written")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    common.add_argument("--schema", help="schema JSON (default: bundled)")
    common.add_argument("--families", help="antibiotic family map JSON (default: bundled)")
    common.add_argument("--out", help="output file or directory")

    parser = argparse.ArgumentParser(prog="mdrml", parents=[common],
                                     description="Multidrug-resistance prediction workflow.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text,
                           argument_default=argparse.SUPPRESS)
        p.set_defaults(func=fn)
        return p

    p = add("gen", cmd_gen, "generate a synthetic raw CSV")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--prevalence", type=float, default=0.35)
    p.add_argument("--signal", type=float, default=6.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--missing", type=float, default=0.0)
    p.add_argument("--truth", default=None, help="write generator ground truth JSON here")

    p = add("clean", cmd_clean, "validate and normalise a raw CSV")
    p.add_argument("input")
    p.add_argument("--report", default=None, help="write the cleaning report JSON here")

    p = add("features", cmd_features, "encode a (raw or cleaned) CSV into the feature matrix")
    p.add_argument("input")
    p.add_argument("--mdr-threshold", type=int, default=3)

    p = add("split", cmd_split, "stratified train/test split")
    p.add_argument("input")
    p.add_argument("--test-fraction", type=float, default=0.2)

    for name, fn, help_text in (("train", cmd_train, "fit one classifier"),
                                ("tune", cmd_tune, "grid-search one classifier kind")):
        p = add(name, fn, help_text)
        p.add_argument("input")
        p.add_argument("--kind", required=True, choices=classifiers.KINDS)
        p.add_argument("--split", default=None, help="split JSON; training rows only")
        p.add_argument("--n-jobs", type=int, default=1)
        if name == "train":
            p.add_argument("--params", default=None, help="hyperparameters (JSON or file)")
            p.add_argument("--unweighted", action="store_true", default=False)
        else:
            p.add_argument("--grid", default=None, help="grid (JSON or file)")
            p.add_argument("--folds", type=int, default=5)
            p.add_argument("--result", default=None, help="write the CV table JSON here")

    p = add("evaluate", cmd_evaluate, "score models on the test split")
    p.add_argument("input")
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True, nargs="+")
    p.add_argument("--predictions", default=None)
    p.add_argument("--table", default=None, help="write the metrics table CSV here")

    p = add("compare", cmd_compare, "pairwise significance tests")
    p.add_argument("predictions")
    p.add_argument("--tuning", nargs="*", default=None, help="tuning result JSONs for paired t")
    p.add_argument("--csv", default=None)

    p = add("explain", cmd_explain, "local explanations for test instances")
    p.add_argument("input")
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--instances", default=None, help="comma-separated row indices")
    p.add_argument("--n", type=int, default=pipeline.DEFAULT_N_EXPLAIN)
    p.add_argument("--n-samples", type=int, default=5000)
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--kernel-width", type=float, default=None)

    p = add("report", cmd_report, "render tables and charts for a run directory")
    p.add_argument("run_dir")

    p = add("run", cmd_run, "run the whole workflow from a JSON config")
    p.add_argument("config")
    p.add_argument("--n-jobs", type=int, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "run" and args.seed is None:
        args.seed = 0
    try:
        args.func(args)
    except MDRError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
