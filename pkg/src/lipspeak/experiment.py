"""Speaker-identification experiments: feature extraction x classifier grids.

A run is load/generate -> stratified split -> feature model fit on the
training partition -> classifier training -> test evaluation. Every random
stage draws its seed from the master seed and a fixed stage tag, so runs are
pure functions of their configuration. Wall-clock timings are kept apart
from the deterministic payload.
"""

import json
import logging
import time
import zlib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import persistence
from .bp import BpArchitecture, BpTrainParams, bp_forward, bp_init, bp_train
from .corpus import (Dataset, SyntheticSpec, default_class_means, generate_synthetic,
                     load_csv, raw_class_templates, split_stratified)
from .errors import InvalidInputError, NumericError, StageError
from .ica import ica_fit, ica_transform
from .lvq import LvqTrainParams, lvq_predict, lvq_train
from .pca import pca_fit, pca_transform
from .rbf import RbfTrainParams, rbf_outputs, rbf_train

log = logging.getLogger(__name__)

FEATURE_METHODS = ("pca", "ica", "none")
CLASSIFIERS = ("bp", "rbf", "lvq")
TABLE_ROWS = ("pca", "ica")
TABLE_ROW_LABELS = {"pca": "Recognition Rate with PCA", "ica": "Recognition Rate with ICA"}

# Hyperparameters of the reference protocol (6-20-25-7 BP, 6-125-7 RBF with
# spread 25, 6-40-7 LVQ1).
REFERENCE_BP = {"hidden": (20, 25), "learning_rate": 0.01, "max_epochs": 3000, "goal": 1e-3}
REFERENCE_RBF = {"n_centers": 125, "spread": 25.0, "ridge": 1e-8, "kmeans_iters": 100}
REFERENCE_LVQ = {"n_prototypes": 40, "alpha0": 0.001, "epochs": 200}
# Default mode halves the BP learning rate after a divergence, this many times at most.
BP_BACKOFFS = 4


# -- configuration -----------------------------------------------------------

def parse_config_file(path):
    """``key = value`` lines; ``#`` starts a comment. Returns a dict of strings."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidInputError(f"{path}: line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if not key:
                raise InvalidInputError(f"{path}: line {lineno}: empty key")
            out[key] = value
    return out


@dataclass(frozen=True)
class SyntheticConfig:
    """Synthetic corpus recipe as read from a spec file.

    ``mode = geometry`` emits six lip measurements per sample; ``mode = raw``
    emits flattened 75 x 100 mouth images rendered from the same geometries.
    """

    num_classes: int = 7
    per_class_count: int = 48
    noise_sigma: float = 1.0
    seed: int = 0
    mode: str = "geometry"
    min_separation: float = 8.0
    class_means: tuple = ()

    @classmethod
    def from_mapping(cls, d):
        known = {"num_classes", "classes", "per_class_count", "noise_sigma", "seed", "mode",
                 "min_separation"}
        means = {}
        for key, value in d.items():
            if key.startswith("class_mean"):
                idx = key[len("class_mean"):].lstrip("._")
                vals = tuple(float(v) for v in value.replace(",", " ").split())
                means[int(idx) if idx else len(means)] = vals
            elif key not in known:
                raise InvalidInputError(f"unknown synthetic spec key {key!r}")
        kw = {}
        if "classes" in d or "num_classes" in d:
            kw["num_classes"] = int(d.get("num_classes", d.get("classes")))
        for key, conv in (("per_class_count", int), ("noise_sigma", float), ("seed", int),
                          ("mode", str), ("min_separation", float)):
            if key in d:
                kw[key] = conv(d[key])
        if means:
            kw["class_means"] = tuple(means[k] for k in sorted(means))
            kw.setdefault("num_classes", len(means))
        cfg = cls(**kw)
        if cfg.mode not in ("geometry", "raw"):
            raise InvalidInputError(f"mode must be geometry or raw, got {cfg.mode!r}")
        if cfg.class_means and len(cfg.class_means) != cfg.num_classes:
            raise InvalidInputError("number of class_mean entries must equal num_classes")
        return cfg

    @classmethod
    def from_file(cls, path):
        return cls.from_mapping(parse_config_file(path))

    def spec(self):
        geometry = (np.array(self.class_means) if self.class_means
                    else default_class_means(self.num_classes, self.min_separation))
        means = raw_class_templates(geometry) if self.mode == "raw" else geometry
        return SyntheticSpec(means, self.noise_sigma, self.per_class_count, self.seed)

    def generate(self):
        ds = generate_synthetic(self.spec())
        ds.metadata["mode"] = self.mode
        return ds


@dataclass(frozen=True)
class ExperimentConfig:
    data_path: str | None = None
    synthetic: SyntheticConfig | None = None
    features: str = "pca"
    components: int = 6
    classifier: str = "rbf"
    split: float = 0.5
    paper_split: bool = False
    paper_params: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.features not in FEATURE_METHODS:
            raise InvalidInputError(f"features must be one of {FEATURE_METHODS}")
        if self.classifier not in CLASSIFIERS:
            raise InvalidInputError(f"classifier must be one of {CLASSIFIERS}")
        if self.components < 1:
            raise InvalidInputError("components must be >= 1")
        if (self.data_path is None) == (self.synthetic is None):
            raise InvalidInputError("exactly one of data_path / synthetic is required")
        if self.seed < 0:
            raise InvalidInputError("seed must be unsigned")

    @property
    def train_fraction(self):
        return 1.0 if self.paper_split else self.split

    def to_dict(self):
        d = asdict(self)
        if self.synthetic is not None:
            d["synthetic"]["class_means"] = [list(m) for m in self.synthetic.class_means]
        return d


def stage_seed(master, tag):
    """Independent 63-bit seed for one named stage of a run."""
    ss = np.random.SeedSequence([int(master), zlib.crc32(tag.encode("utf-8"))])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def load_dataset(config):
    if config.data_path is not None:
        if not Path(config.data_path).is_file():
            raise FileNotFoundError(f"data file not found: {config.data_path}")
        return load_csv(config.data_path)
    return config.synthetic.generate()


def make_split(config, ds):
    return split_stratified(ds, config.train_fraction, stage_seed(config.seed, "split"))


# -- pipeline ----------------------------------------------------------------

@dataclass(frozen=True)
class IdentityFeatures:
    n: int

    @property
    def m(self):
        return self.n


@dataclass(frozen=True)
class InputScaler:
    """Per-feature z-score fit on the training features."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, x):
        std = x.std(axis=0)
        return cls(x.mean(axis=0), np.where(std > 0, std, 1.0))

    def apply(self, x):
        return (x - self.mean) / self.scale


@dataclass
class Pipeline:
    feature_model: object
    classifier_model: object
    label_names: tuple
    scaler: InputScaler | None = None
    history: dict = field(default_factory=dict)

    @property
    def feature_kind(self):
        return feature_kind(self.feature_model)

    @property
    def classifier_kind(self):
        return persistence.kind_of(self.classifier_model)

    def features(self, x):
        return transform_features(self.feature_model, x)

    def classifier_input(self, x):
        y = self.features(x)
        return self.scaler.apply(y) if self.scaler is not None else y

    def outputs(self, x):
        z = self.classifier_input(x)
        kind = self.classifier_kind
        if kind == "bp":
            return bp_forward(self.classifier_model, z)[-1]
        if kind == "rbf":
            return rbf_outputs(self.classifier_model, z)
        raise InvalidInputError("LVQ has no continuous outputs")

    def predict(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if self.classifier_kind == "lvq":
            return np.asarray(lvq_predict(self.classifier_model, self.classifier_input(x)))
        return np.argmax(self.outputs(x), axis=1)

    def to_dict(self):
        feat = ({"kind": "none", "n": self.feature_model.n}
                if isinstance(self.feature_model, IdentityFeatures)
                else persistence.model_to_dict(self.feature_model))
        out = {"format": persistence.FORMAT, "features": feat,
               "classifier": persistence.model_to_dict(self.classifier_model),
               "label_mapping": list(self.label_names), "scaler": None}
        if self.scaler is not None:
            out["scaler"] = {"kind": "zscore", "mean": self.scaler.mean.tolist(),
                             "scale": self.scaler.scale.tolist()}
        return out

    @classmethod
    def from_dict(cls, d):
        if d.get("format") != persistence.FORMAT:
            raise InvalidInputError(f"unsupported model format {d.get('format')!r}")
        feat = d["features"]
        feature_model = (IdentityFeatures(int(feat["n"])) if feat["kind"] == "none"
                         else persistence.model_from_dict(feat))
        scaler = None
        if d.get("scaler"):
            scaler = InputScaler(np.asarray(d["scaler"]["mean"], float),
                                 np.asarray(d["scaler"]["scale"], float))
        return cls(feature_model, persistence.model_from_dict(d["classifier"]),
                   tuple(d["label_mapping"]), scaler)

    def save(self, path):
        Path(path).write_text(persistence.dumps(self.to_dict()), encoding="utf-8")

    @classmethod
    def load(cls, path):
        if not Path(path).is_file():
            raise FileNotFoundError(f"model file not found: {path}")
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def feature_kind(model):
    if isinstance(model, IdentityFeatures):
        return "none"
    return persistence.kind_of(model)


def fit_features(method, train, m, seed):
    if method == "pca":
        return pca_fit(train, m)
    if method == "ica":
        return ica_fit(train, m, seed=seed)
    if method == "none":
        return IdentityFeatures(train.feature_dim)
    raise InvalidInputError(f"unknown feature method {method!r}")


def transform_features(model, x):
    x = x.features if isinstance(x, Dataset) else np.atleast_2d(np.asarray(x, dtype=np.float64))
    if isinstance(model, IdentityFeatures):
        if x.shape[1] != model.n:
            raise InvalidInputError(f"expected dimension {model.n}, got {x.shape[1]}")
        return x
    if feature_kind(model) == "pca":
        return pca_transform(model, x)
    return ica_transform(model, x)


def classifier_params(classifier, paper_params, n_train, num_classes, seed):
    """Hyperparameters for one classifier.

    Reference mode (``--paper-params``) uses the fixed reference values.
    Default mode differs in three places: RBF spread is the median pairwise
    training distance, BP inputs are z-scored, and a diverging BP run is
    retried at half the learning rate.
    """
    if classifier == "bp":
        return BpTrainParams(REFERENCE_BP["learning_rate"], REFERENCE_BP["max_epochs"], REFERENCE_BP["goal"], seed)
    if classifier == "rbf":
        return RbfTrainParams(min(REFERENCE_RBF["n_centers"], n_train),
                              REFERENCE_RBF["spread"] if paper_params else None,
                              REFERENCE_RBF["ridge"], REFERENCE_RBF["kmeans_iters"], seed)
    if classifier == "lvq":
        return LvqTrainParams(max(REFERENCE_LVQ["n_prototypes"], num_classes), REFERENCE_LVQ["alpha0"],
                              REFERENCE_LVQ["epochs"], seed)
    raise InvalidInputError(f"unknown classifier {classifier!r}")


def train_classifier(classifier, train_feats, num_classes, paper_params, seed):
    """Returns ``(model, scaler, history)`` for features of ``train_feats`` (a Dataset)."""
    params = classifier_params(classifier, paper_params, len(train_feats), num_classes, seed)
    if classifier == "bp":
        scaler = None if paper_params else InputScaler.fit(train_feats.features)
        data = train_feats if scaler is None else train_feats.with_features(
            scaler.apply(train_feats.features))
        arch = BpArchitecture((data.feature_dim,) + REFERENCE_BP["hidden"] + (num_classes,))
        init = bp_init(arch, seed)
        backoffs = 0 if paper_params else BP_BACKOFFS
        for attempt in range(backoffs + 1):
            try:
                net, hist = bp_train(init, data, params)
                break
            except NumericError:
                if attempt == backoffs:
                    raise
                log.info("bp diverged at lr=%g; retrying at half", params.learning_rate)
                params = replace(params, learning_rate=params.learning_rate / 2)
        return net, scaler, {"mse": hist, "learning_rate": params.learning_rate}
    if classifier == "rbf":
        model = rbf_train(train_feats, params)
        return model, None, {"kmeans_objective": model.metadata.get("kmeans_objective", [])}
    hist = []
    book = lvq_train(train_feats, params, hist)
    return book, None, {"train_error": hist}


def _timed(stage, timings, fn, *args):
    t0 = time.perf_counter()
    try:
        result = fn(*args)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc
    timings[stage] = time.perf_counter() - t0
    return result


def fit_pipeline(train, features, classifier, components, paper_params, master_seed, timings=None):
    timings = {} if timings is None else timings
    tag = f"{features}/{classifier}"
    fmodel = _timed("feature_fit", timings, fit_features, features, train, components,
                    stage_seed(master_seed, tag + "/features"))
    ftrain = _timed("feature_transform_train", timings, transform_features, fmodel, train)
    model, scaler, hist = _timed(
        "classifier_train", timings, train_classifier, classifier, train.with_features(ftrain),
        train.num_classes, paper_params, stage_seed(master_seed, tag + "/classifier"))
    return Pipeline(fmodel, model, train.label_names, scaler, hist)


# -- evaluation --------------------------------------------------------------

def accuracy(predictions, labels):
    """Recognition rate in percent: 100 * matches / total."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.size == 0 or y.size == 0:
        raise InvalidInputError("accuracy of an empty prediction set is undefined")
    if p.shape != y.shape:
        raise InvalidInputError(f"length mismatch: {p.size} predictions vs {y.size} labels")
    return 100.0 * int(np.sum(p == y)) / p.size


def format_rate(rate):
    return f"{rate:.2f}"


def confusion_matrix(predictions, labels, num_classes):
    p = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(labels, dtype=np.int64)
    if p.shape != y.shape:
        raise InvalidInputError("predictions and labels must have equal length")
    if p.size and (min(p.min(), y.min()) < 0 or max(p.max(), y.max()) >= num_classes):
        raise InvalidInputError(f"class index out of range for {num_classes} classes")
    cm = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(cm, (y, p), 1)
    return cm


def model_summary(pipe):
    f = pipe.feature_model
    c = persistence.model_to_dict(pipe.classifier_model)
    summary = {"features": feature_kind(f), "input_dim": int(f.n), "feature_dim": int(f.m),
               "classifier": c["kind"], "input_scaling": "zscore" if pipe.scaler else "none"}
    if summary["features"] == "ica":
        summary["ica_iterations"] = [int(i) for i in f.convergence_iters]
    if summary["features"] == "pca":
        summary["pca_eigenvalues"] = [float(v) for v in f.eigenvalues]
    if c["kind"] == "bp":
        summary["layer_sizes"] = c["layer_sizes"]
        summary["transfers"] = c["transfers"]
        summary["epochs_run"] = len(pipe.history.get("mse", []))
        if "learning_rate" in pipe.history:
            summary["learning_rate"] = pipe.history["learning_rate"]
        if pipe.history.get("mse"):
            summary["final_train_mse"] = pipe.history["mse"][-1]
    elif c["kind"] == "rbf":
        summary["layer_sizes"] = [int(f.m), c["n_centers"], c["n_outputs"]]
        summary["spread"] = c["spread"]
    else:
        summary["layer_sizes"] = [int(f.m), c["n_prototypes"], len(pipe.label_names)]
    return summary


@dataclass
class EvaluationReport:
    config: dict
    correct: int
    total: int
    confusion: np.ndarray
    label_mapping: list
    model_summary: dict
    timings_seconds: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)

    @property
    def recognition_rate(self):
        return 100.0 * self.correct / self.total

    def payload(self):
        """Deterministic part of the report (everything except timings)."""
        return {"config": self.config,
                "recognition_rate_percent": self.recognition_rate,
                "recognition_rate_display": format_rate(self.recognition_rate),
                "correct": self.correct, "total": self.total,
                "confusion": self.confusion.tolist(),
                "label_mapping": list(self.label_mapping),
                "model_summary": self.model_summary}

    def to_dict(self):
        d = self.payload()
        d["timings_seconds"] = dict(self.timings_seconds)
        return d

    def render(self):
        lines = [f"features={self.model_summary['features']} "
                 f"classifier={self.model_summary['classifier']}",
                 f"recognition rate: {format_rate(self.recognition_rate)}% "
                 f"({self.correct}/{self.total})",
                 "confusion (rows = true, cols = predicted):"]
        width = max(len(str(int(self.confusion.max()))), 3)
        for name, row in zip(self.label_mapping, self.confusion):
            lines.append(f"  {name:>12} " + " ".join(f"{int(v):>{width}}" for v in row))
        return "\n".join(lines)


def evaluate_pipeline(pipe, test, config_echo, timings=None):
    timings = {} if timings is None else timings
    pred = _timed("predict", timings, pipe.predict, test.features)
    cm = confusion_matrix(pred, test.labels, test.num_classes)
    correct = int(np.trace(cm))
    return EvaluationReport(config_echo, correct, len(test), cm, list(test.label_names),
                            model_summary(pipe), timings, pipe.history)


def run_experiment(config, return_pipeline=False):
    timings = {}
    ds = _timed("load", timings, load_dataset, config)
    train, test = _timed("split", timings, make_split, config, ds)
    pipe = fit_pipeline(train, config.features, config.classifier, config.components,
                        config.paper_params, config.seed, timings)
    report = evaluate_pipeline(pipe, test, config.to_dict(), timings)
    report.config["train_size"] = len(train)
    report.config["test_size"] = len(test)
    return (report, pipe) if return_pipeline else report


# -- comparison grid ---------------------------------------------------------

@dataclass
class CellResult:
    features: str
    classifier: str
    report: EvaluationReport | None = None
    error: str | None = None

    @property
    def rate(self):
        return None if self.report is None else self.report.recognition_rate


@dataclass
class ComparisonTable:
    config: dict
    cells: dict
    train_size: int
    test_size: int

    def cell(self, features, classifier):
        return self.cells[(features, classifier)]

    @property
    def best(self):
        ok = [c for c in self.cells.values() if c.report is not None]
        if not ok:
            return None
        order = {(f, c): i for i, (f, c) in enumerate(self.cells)}
        return max(ok, key=lambda c: (c.rate, -order[(c.features, c.classifier)]))

    def payload(self):
        cells = {}
        for (f, c), cell in self.cells.items():
            key = f"{f}+{c}"
            if cell.report is None:
                cells[key] = {"status": "failed", "error": cell.error}
            else:
                cells[key] = {"status": "ok", **cell.report.payload()}
                del cells[key]["config"]
        best = self.best
        return {"config": self.config, "train_size": self.train_size, "test_size": self.test_size,
                "table": {TABLE_ROW_LABELS[f]: {c.upper(): self._rate_text(f, c) for c in CLASSIFIERS}
                          for f in TABLE_ROWS},
                "best": None if best is None else f"{best.features}+{best.classifier}",
                "cells": cells}

    def timings(self):
        return {f"{f}+{c}": (dict(cell.report.timings_seconds) if cell.report else {})
                for (f, c), cell in self.cells.items()}

    def to_dict(self):
        d = self.payload()
        d["timings_seconds"] = self.timings()
        return d

    def _rate_text(self, f, c):
        cell = self.cells[(f, c)]
        return "failed" if cell.report is None else format_rate(cell.rate)

    def rows(self, with_timings=True):
        """Delimited rows: header then one row per feature method."""
        header = ["Methods"] + [c.upper() for c in CLASSIFIERS]
        if with_timings:
            header += [f"{c.upper()} time (s)" for c in CLASSIFIERS]
        out = [header]
        for f in TABLE_ROWS:
            row = [TABLE_ROW_LABELS[f]] + [self._rate_text(f, c) for c in CLASSIFIERS]
            if with_timings:
                for c in CLASSIFIERS:
                    r = self.cells[(f, c)].report
                    row.append("" if r is None else f"{sum(r.timings_seconds.values()):.3f}")
            out.append(row)
        return out

    def render(self):
        rows = self.rows()
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(v.ljust(w) if i == 0 else v.rjust(w)
                           for i, (v, w) in enumerate(zip(r, widths))) for r in rows]
        lines.insert(1, "-" * len(lines[0]))
        best = self.best
        fit = {f: [self.cells[(f, c)].report.timings_seconds.get("feature_fit", np.nan)
                   for c in CLASSIFIERS if self.cells[(f, c)].report] for f in TABLE_ROWS}
        lines.append("")
        lines.append(f"train/test: {self.train_size}/{self.test_size}")
        for f in TABLE_ROWS:
            if fit[f]:
                lines.append(f"{f.upper()} feature-fit time (mean over cells): "
                             f"{np.mean(fit[f]):.4f} s")
        if best is not None:
            lines.append(f"best: {best.features.upper()} + {best.classifier.upper()} "
                         f"({format_rate(best.rate)}%)")
        for (f, c), cell in self.cells.items():
            if cell.error:
                lines.append(f"failed: {f}+{c}: {cell.error}")
        return "\n".join(lines)


def compare_all(config, feature_methods=TABLE_ROWS, classifiers=CLASSIFIERS):
    """Every feature method x classifier on one shared split.

    Cell failures are recorded in the cell; the table is always returned.
    """
    ds = load_dataset(config)
    train, test = make_split(config, ds)
    echo = config.to_dict()
    for key in ("features", "classifier"):
        echo.pop(key)
    cells = {}
    for f in feature_methods:
        for c in classifiers:
            timings = {}
            try:
                pipe = fit_pipeline(train, f, c, config.components, config.paper_params,
                                    config.seed, timings)
                report = evaluate_pipeline(pipe, test, {**echo, "features": f, "classifier": c},
                                           timings)
                cells[(f, c)] = CellResult(f, c, report)
            except StageError as exc:
                cells[(f, c)] = CellResult(f, c, error=str(exc))
    return ComparisonTable(echo, cells, len(train), len(test))


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
