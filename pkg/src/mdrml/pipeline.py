"""End-to-end workflow: clean, encode, split, tune, evaluate, compare, explain, report.

Every stage reads and writes files under one run directory. Randomness comes
from the master seed through named substreams, and all files are written in
canonical form, so a run is reproducible byte for byte at any ``n_jobs``.
"""
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, classifiers, lime, metrics, stats, svg, tuning
from .data_model import clean_csv, load_schema, write_csv
from .errors import ConfigError, DataError, MDRError, ReportError
from .features import LabeledDataset, encode_dataset, load_family_map
from .persistence import canonical_bytes, load_model, model_to_document, read_json, write_json
from .rng import ALGORITHM, derive_seed, make_rng
from .synth import SynthConfig, generate

CONFIG_KEYS = {
    "seed", "input_csv", "synth", "schema", "families", "mdr_threshold", "test_fraction",
    "cv_folds", "kinds", "grids", "n_explain", "lime", "n_jobs",
}
DEFAULT_N_EXPLAIN = 3
SUSCEPTIBILITY_LABELS = {0.0: "S", 1.0: "I", 2.0: "R"}
YES_NO = {0.0: "no", 1.0: "yes"}
FREQUENCY_LABELS = {0.0: "never", 1.0: "rare", 2.0: "sometimes", 3.0: "often"}


@dataclass
class RunConfig:
    seed: int = 0
    input_csv: str = None
    synth: dict = None
    schema: str = None
    families: str = None
    mdr_threshold: int = 3
    test_fraction: float = 0.2
    cv_folds: int = 5
    kinds: list = field(default_factory=lambda: list(classifiers.KINDS))
    grids: dict = field(default_factory=dict)
    n_explain: int = DEFAULT_N_EXPLAIN
    lime: dict = field(default_factory=dict)
    n_jobs: int = 1

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        return cls.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))

    @classmethod
    def from_dict(cls, doc, base_dir="."):
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(doc) - CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**doc)
        for key in ("input_csv", "schema", "families"):
            value = getattr(cfg, key)
            if value is not None and not os.path.isabs(value):
                setattr(cfg, key, os.path.normpath(os.path.join(base_dir, value)))
        cfg.validate()
        return cfg

    def validate(self):
        if self.input_csv is None and self.synth is None:
            raise ConfigError("config needs either input_csv or a synth block")
        if self.input_csv is not None and not os.path.isfile(self.input_csv):
            raise ConfigError(f"input_csv not found: {self.input_csv}")
        for key in ("schema", "families"):
            path = getattr(self, key)
            if path is not None and not os.path.isfile(path):
                raise ConfigError(f"{key} file not found: {path}")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("test_fraction must lie in (0, 1)")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")
        if not self.kinds:
            raise ConfigError("kinds must not be empty")
        for kind in self.kinds:
            if kind not in classifiers.KINDS:
                raise ConfigError(f"unknown classifier kind {kind!r}")
        for kind, grid in self.grids.items():
            if kind not in classifiers.KINDS:
                raise ConfigError(f"grid given for unknown kind {kind!r}")
            for cell in tuning.Grid(grid).cells():
                classifiers.ClassifierSpec(kind, cell)
        if self.n_explain < 0:
            raise ConfigError("n_explain must be >= 0")
        unknown = sorted(set(self.lime) - {"n_samples", "kernel_width", "top_k", "ridge_alpha"})
        if unknown:
            raise ConfigError(f"unknown lime settings: {unknown}")
        if self.synth is not None:
            try:
                SynthConfig(**{"seed": self.seed, **self.synth})
            except TypeError as exc:
                raise ConfigError(f"bad synth block: {exc}") from None
        if int(self.n_jobs) < 1:
            raise ConfigError("n_jobs must be >= 1")


# -- shared stage helpers ------------------------------------------------------

def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_bytes(path, data):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def write_text(path, text):
    write_bytes(path, text.encode("utf-8"))


def read_dataset(path, mdr_threshold=3):
    try:
        with open(path, encoding="utf-8") as fh:
            return LabeledDataset.from_csv(fh.read(), mdr_threshold)
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from None


def read_split(path):
    try:
        return tuning.SplitIndices.from_dict(read_json(path))
    except (OSError, KeyError, ValueError) as exc:
        raise DataError(f"cannot read split file {path}: {exc}") from None


def value_labels(names):
    """Readable labels for categorical feature values, keyed by feature name."""
    out = {}
    for name in names:
        if name in ("age",):
            continue
        if name == "infection_frequency":
            out[name] = FREQUENCY_LABELS
        elif name.startswith(("gender=", "species=", "family:")) or name in (
                "diabetes", "hypertension", "prior_hospitalization"):
            out[name] = YES_NO
        else:
            out[name] = SUSCEPTIBILITY_LABELS
    return out


def tune_one(dataset, split, kind, grid, folds, seed, n_jobs):
    result = tuning.grid_search(dataset.X, dataset.y, kind, grid=grid, k=folds, seed=seed,
                                train_idx=split.train, feature_names=dataset.feature_names,
                                n_jobs=n_jobs)
    return result


def model_metadata(result, data_sha, seed):
    best = result.best
    return {
        "seed": int(seed),
        "data_sha256": data_sha,
        "class_weights": {str(k): v for k, v in result.class_weights.items()},
        "grid_cell": best.params,
        "cv_fold_f1": list(best.fold_f1),
        "cv_fold_auc": list(best.fold_auc),
        "cv_mean_f1": best.mean_f1,
    }


def evaluate_models(models, dataset, split):
    """Return ``(metrics doc, predictions doc)`` for named models on the test rows."""
    X, y = dataset.X[split.test], dataset.y[split.test]
    reports, preds = {}, {}
    for name, model in models.items():
        proba = classifiers.predict_proba(model, X, dataset.feature_names)
        reports[name] = metrics.evaluate(y, proba).to_dict()
        preds[name] = {"proba": proba.tolist(),
                       "pred": (proba >= classifiers.THRESHOLD).astype(int).tolist()}
    metrics_doc = {"models": list(models), "reports": reports}
    preds_doc = {"test_indices": split.test.tolist(), "y_true": y.tolist(), "models": preds}
    return metrics_doc, preds_doc


def compare_predictions(preds_doc, fold_scores=None):
    fold_scores = fold_scores or {}
    hard = {name: np.asarray(m["pred"]) for name, m in preds_doc["models"].items()}
    f1 = {k: v["f1"] for k, v in fold_scores.items()} or None
    auc = {k: v["auc"] for k, v in fold_scores.items()} or None
    return stats.significance_matrix(np.asarray(preds_doc["y_true"]), hard, f1, auc)


def lime_config(settings, seed):
    return lime.PerturbationConfig(seed=seed, **settings)


def choose_instances(split, n, seed):
    n = min(n, split.test.size)
    rng = make_rng(seed, "explain")
    return np.sort(rng.choice(split.test, size=n, replace=False)).tolist()


def explain_rows(model, dataset, split, instance_ids, config):
    tr = lime.training_stats(dataset.X[split.train], dataset.feature_names,
                             value_labels=value_labels(dataset.feature_names))
    return [lime.explain_instance(model, dataset.X[i], tr, config, instance_id=int(i))
            for i in instance_ids]


# -- reports -------------------------------------------------------------------

REPORT_INPUTS = ("evaluation/metrics.json", "evaluation/predictions.json")


def _report_from_dict(doc):
    return metrics.MetricsReport(**doc)


def render_reports(run_dir):
    """Write the metrics table, ROC/PR charts and LIME bar charts under ``reports/``."""
    missing = [p for p in REPORT_INPUTS if not os.path.isfile(os.path.join(run_dir, p))]
    if missing:
        raise ReportError(f"missing report inputs in {run_dir}: {', '.join(missing)}")
    metrics_doc = read_json(os.path.join(run_dir, REPORT_INPUTS[0]))
    preds_doc = read_json(os.path.join(run_dir, REPORT_INPUTS[1]))
    out_dir = os.path.join(run_dir, "reports")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, text):
        write_text(os.path.join(out_dir, name), text)
        written.append(f"reports/{name}")

    reports = {n: _report_from_dict(metrics_doc["reports"][n]) for n in metrics_doc["models"]}
    emit("metrics_table.csv", metrics.table_csv(reports))

    y = np.asarray(preds_doc["y_true"])
    roc_all, pr_all = [], []
    for name in metrics_doc["models"]:
        proba = np.asarray(preds_doc["models"][name]["proba"])
        try:
            roc = metrics.roc_auc(y, proba)
            pr = metrics.pr_auc(y, proba)
        except metrics.UndefinedCurveError:
            continue
        roc_label = f"{name} (AUC = {roc.auc:.3f})"
        pr_label = f"{name} (AUC = {pr.auc:.3f})"
        roc_all.append((roc_label, roc.points))
        pr_all.append((pr_label, pr.points))
        emit(f"roc_{name}.svg", svg.curve_chart([(roc_label, roc.points)], f"ROC curve: {name}",
                                                "False positive rate", "True positive rate",
                                                diagonal=True))
        emit(f"pr_{name}.svg", svg.curve_chart([(pr_label, pr.points)], f"Precision-recall: {name}",
                                               "Recall", "Precision"))
    if roc_all:
        emit("roc_all.svg", svg.curve_chart(roc_all, "ROC curves", "False positive rate",
                                            "True positive rate", diagonal=True))
        emit("pr_all.svg", svg.curve_chart(pr_all, "Precision-recall curves", "Recall", "Precision"))

    exp_dir = os.path.join(run_dir, "explanations")
    if os.path.isdir(exp_dir):
        for model_name in sorted(os.listdir(exp_dir)):
            sub = os.path.join(exp_dir, model_name)
            if not os.path.isdir(sub):
                continue
            for fname in sorted(os.listdir(sub)):
                if not fname.endswith(".json"):
                    continue
                doc = read_json(os.path.join(sub, fname))
                bars = [(e["condition"], e["weight"]) for e in doc["entries"]]
                title = (f"{model_name}, instance {doc['instance_id']} "
                         f"(p = {doc['predicted_proba']:.3f})")
                emit(f"lime_{model_name}_{fname[:-5]}.svg", svg.bar_chart(bars, title))
    return written


# -- full run ------------------------------------------------------------------

class _Recorder:
    """Collects per-stage input/output hashes for the manifest."""

    def __init__(self, run_dir):
        self.run_dir = run_dir
        self.stages = []

    def rel(self, path):
        return os.path.relpath(path, self.run_dir).replace(os.sep, "/")

    def hashes(self, paths):
        return {self.rel(p): sha256_file(p) for p in sorted(paths)}

    def record(self, name, seed, inputs, outputs):
        self.stages.append({"stage": name, "seed": seed, "inputs": self.hashes(inputs),
                            "outputs": self.hashes(outputs)})


def _stage(name):
    def wrap(fn):
        def run(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except MDRError as exc:
                exc.args = (f"stage {name} failed: {exc}",)
                exc.stage = name
                raise
        return run
    return wrap


def run_pipeline(config_path, out_dir=None, n_jobs=None, seed=None):
    """Execute the whole workflow and return the manifest dictionary."""
    cfg = RunConfig.from_file(config_path)
    if seed is not None:
        cfg.seed = int(seed)
    if n_jobs is not None:
        cfg.n_jobs = int(n_jobs)
    run_dir = out_dir or os.path.join(os.path.dirname(os.path.abspath(config_path)), "run")
    return run_config(cfg, run_dir)


def run_config(cfg, run_dir):
    os.makedirs(run_dir, exist_ok=True)
    rec = _Recorder(run_dir)
    p = lambda *parts: os.path.join(run_dir, *parts)  # noqa: E731
    schema = load_schema(cfg.schema)
    fmap = load_family_map(cfg.families)
    fmap.validate_against(schema)

    @_stage("ingest")
    def ingest():
        if cfg.input_csv is not None:
            with open(cfg.input_csv, "rb") as fh:
                raw = fh.read()
            write_bytes(p("data", "raw.csv"), raw)
            rec.record("ingest", None, [], [p("data", "raw.csv")])
            return raw
        synth_cfg = SynthConfig(**{"seed": derive_seed(cfg.seed, "synth"), **cfg.synth})
        raw, truth = generate(synth_cfg, schema)
        write_bytes(p("data", "raw.csv"), raw)
        write_json(p("data", "truth.json"), truth)
        rec.record("gen", synth_cfg.seed, [], [p("data", "raw.csv"), p("data", "truth.json")])
        return raw

    @_stage("clean")
    def clean(raw):
        records, report = clean_csv(raw, schema)
        write_text(p("data", "clean.csv"), write_csv(records, schema))
        write_json(p("data", "cleaning_report.json"), report.to_dict())
        rec.record("clean", None, [p("data", "raw.csv")],
                   [p("data", "clean.csv"), p("data", "cleaning_report.json")])
        return records

    @_stage("features")
    def featurize(records):
        ds = encode_dataset(records, fmap, schema, cfg.mdr_threshold)
        write_text(p("data", "features.csv"), ds.to_csv())
        rec.record("features", None, [p("data", "clean.csv")], [p("data", "features.csv")])
        return ds

    @_stage("split")
    def split(ds):
        seed = derive_seed(cfg.seed, "split")
        sp = tuning.stratified_split(ds.y, cfg.test_fraction, seed)
        write_json(p("split.json"), sp.to_dict())
        rec.record("split", seed, [p("data", "features.csv")], [p("split.json")])
        return sp

    @_stage("tune")
    def tune(ds, sp):
        data_sha = sha256_file(p("data", "features.csv"))
        models, folds = {}, {}
        outputs = []
        seed = derive_seed(cfg.seed, "tune")
        for kind in cfg.kinds:
            result = tune_one(ds, sp, kind, cfg.grids.get(kind), cfg.cv_folds, seed, cfg.n_jobs)
            models[kind] = result.model
            folds[kind] = {"f1": result.best.fold_f1, "auc": result.best.fold_auc}
            doc = model_to_document(result.model, model_metadata(result, data_sha, seed))
            write_bytes(p("models", f"{kind}.json"), canonical_bytes(doc))
            write_json(p("tuning", f"{kind}.json"), result.to_dict())
            outputs += [p("models", f"{kind}.json"), p("tuning", f"{kind}.json")]
        rec.record("tune", seed, [p("data", "features.csv"), p("split.json")], outputs)
        return models, folds

    @_stage("evaluate")
    def evaluate(ds, sp, models):
        metrics_doc, preds_doc = evaluate_models(models, ds, sp)
        write_json(p("evaluation", "metrics.json"), metrics_doc)
        write_json(p("evaluation", "predictions.json"), preds_doc)
        reports = {k: _report_from_dict(v) for k, v in metrics_doc["reports"].items()}
        write_text(p("evaluation", "metrics_table.csv"), metrics.table_csv(reports))
        rec.record("evaluate", None, [p("models", f"{k}.json") for k in models],
                   [p("evaluation", f) for f in ("metrics.json", "predictions.json",
                                                  "metrics_table.csv")])
        return preds_doc

    @_stage("compare")
    def compare(preds_doc, folds):
        matrix = compare_predictions(preds_doc, folds)
        write_json(p("compare", "significance.json"), matrix)
        write_text(p("compare", "significance.csv"), stats.matrix_csv(matrix))
        rec.record("compare", None, [p("evaluation", "predictions.json")],
                   [p("compare", "significance.json"), p("compare", "significance.csv")])

    @_stage("explain")
    def explain(ds, sp, models):
        seed = derive_seed(cfg.seed, "lime")
        ids = choose_instances(sp, cfg.n_explain, cfg.seed)
        config = lime_config(cfg.lime, seed)
        outputs = []
        for kind, model in models.items():
            for exp in explain_rows(model, ds, sp, ids, config):
                path = p("explanations", kind, f"instance_{exp.instance_id}.json")
                os.makedirs(os.path.dirname(path), exist_ok=True)
                write_json(path, exp.to_dict())
                outputs.append(path)
        rec.record("explain", seed, [p("models", f"{k}.json") for k in models], outputs)

    @_stage("report")
    def report():
        written = render_reports(run_dir)
        rec.record("report", None, [p(f) for f in REPORT_INPUTS], [p(f) for f in written])

    raw = ingest()
    records = clean(raw)
    ds = featurize(records)
    sp = split(ds)
    models, folds = tune(ds, sp)
    preds_doc = evaluate(ds, sp, models)
    compare(preds_doc, folds)
    explain(ds, sp, models)
    report()

    files = []
    for root, _, names in os.walk(run_dir):
        files += [os.path.join(root, n) for n in names]
    files = [f for f in files if rec.rel(f) != "manifest.json"]
    manifest = {
        "package_version": __version__,
        "rng": ALGORITHM,
        "seed": int(cfg.seed),
        "config": _config_doc(cfg, run_dir),
        "stages": rec.stages,
        "files": rec.hashes(files),
    }
    write_json(p("manifest.json"), manifest)
    return manifest


def _config_doc(cfg, run_dir):
    """Config as recorded in the manifest; n_jobs omitted so parallelism leaves no trace."""
    doc = {k: getattr(cfg, k) for k in sorted(CONFIG_KEYS) if k != "n_jobs"}
    for key in ("input_csv", "schema", "families"):
        if doc[key] is not None:
            doc[key] = {"name": os.path.basename(doc[key]), "sha256": sha256_file(doc[key])}
    return doc


def load_models(paths):
    out = {}
    for path in paths:
        model, _ = load_model(path)
        name = model.spec.kind
        if name in out:
            name = os.path.splitext(os.path.basename(path))[0]
        out[name] = model
    return out
