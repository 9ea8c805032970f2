"""Config-driven analysis pipeline.

Stages run in a fixed order and each one leaves a JSON file in the output
directory that later stages read back:

    ingest   -> cleaned.csv, ingest.json   (impute, scaling params, split)
    reduce   -> reduce.json                (optional PCA / embeddings)
    fit      -> fit.json                   (model, metrics, baselines)
    explain  -> explain.json               (attributions and curves)
    anova    -> anova.json                 (one-way ANOVA + Tukey HSD)
    report   -> *.svg, report.json         (report.json is written last)

All randomness derives from the config seed, JSON is written with sorted
keys and no timestamps, and the output directory never appears inside a
report, so equal configs give byte-identical files wherever they run.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dimred import TsneConfig, isomap, lda_fit, mds, pairwise_distances, pca_fit, tsne
from .errors import ConfigError, CourtsideError, DataError, NumericError, UsageError
from .explain import (
    MAX_EXACT_FEATURES,
    feature_effect,
    lime_local,
    pdp,
    permutation_importance,
    shapley_exact,
    shapley_sample,
)
from .regress import (
    GlmSpec,
    LinearModel,
    MlpSpec,
    accuracy,
    fit_huber,
    fit_lasso,
    fit_ols,
    fit_ridge,
    fit_tree,
    fit_tweedie,
    mlp_train,
    model_from_dict,
    r2_score,
    standardized_coefficients,
)
from .stats import one_way_anova, tukey_hsd
from .svg import render_svg
from .tabular import (
    ScalingParams,
    SplitSpec,
    Table,
    apply_scaling,
    describe,
    drop_or_impute,
    expand_polynomial,
    load_csv,
    min_max_scale,
    polynomial_names,
    split_indices,
)

STAGES = ("ingest", "reduce", "fit", "explain", "anova", "report")
MODELS = ("ols", "ridge", "lasso", "huber", "tweedie", "tree", "mlp")
EXPLAINERS = ("standardized_coefficients", "permutation_importance", "shapley", "pdp", "lime", "feature_effect")
PLOTS = ("weight_plot", "pdp", "scree", "box_by_group", "scatter")
REDUCERS = ("pca", "mds", "isomap", "tsne", "lda")

CONFIG_KEYS = {
    "input": str,
    "target": str,
    "features": list,
    "task": str,
    "model": str,
    "model_params": dict,
    "impute": str,
    "scale": bool,
    "poly_degree": int,
    "test_fraction": float,
    "seed": int,
    "reduce": dict,
    "explain": list,
    "explain_params": dict,
    "anova": dict,
    "plots": list,
    "out_dir": str,
}
DEFAULTS: dict[str, Any] = {
    "features": None,
    "task": None,
    "model": "ols",
    "model_params": {},
    "impute": "drop_rows",
    "scale": False,
    "poly_degree": 1,
    "test_fraction": 0.2,
    "seed": 0,
    "reduce": None,
    "explain": [],
    "explain_params": {},
    "anova": None,
    "plots": [],
}


class StageError(CourtsideError):
    """A library error tagged with the pipeline stage it came from."""

    def __init__(self, stage: str, cause: CourtsideError):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
        self.exit_code = cause.exit_code


# --- config --------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    values: dict
    base_dir: Path

    def __getitem__(self, key: str):
        return self.values[key]

    @property
    def input_path(self) -> Path:
        p = Path(self.values["input"])
        return p if p.is_absolute() else self.base_dir / p

    def echo(self) -> dict:
        """Config as recorded in reports: everything except the output directory."""
        return {k: v for k, v in self.values.items() if k != "out_dir"}


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("courtside") / "data" / name))


def resolve_config_path(name: str | Path) -> Path:
    """A filesystem path, or the name of a bundled config such as ``four_factors.cfg``."""
    p = Path(name)
    if p.exists():
        return p
    bundled = bundled_path(p.name if p.suffix else p.name + ".cfg")
    if bundled.exists():
        return bundled
    raise UsageError(f"config {str(name)!r} not found (bundled: four_factors.cfg, salary.cfg, roles.cfg)")


def _check_type(key: str, value, expected) -> None:
    if value is None and key in ("features", "task", "reduce", "anova"):
        return
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return
    if expected is int and isinstance(value, bool):
        raise ConfigError(f"config key {key!r} must be an integer")
    if not isinstance(value, expected):
        raise ConfigError(f"config key {key!r} must be of type {expected.__name__}")


def parse_config(raw: dict, base_dir: Path, seed: int | None = None) -> PipelineConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for key in ("input", "target"):
        if key not in raw:
            raise ConfigError(f"config is missing required key {key!r}")
    values = {**DEFAULTS, **raw}
    if seed is not None:
        values["seed"] = seed
    for key, expected in CONFIG_KEYS.items():
        if key in values:
            _check_type(key, values[key], expected)
    values["test_fraction"] = float(values["test_fraction"])
    if values["seed"] < 0:
        raise ConfigError("seed must be non-negative")
    if not 0.0 < values["test_fraction"] < 1.0:
        raise ConfigError("test_fraction must lie strictly between 0 and 1")
    if values["model"] not in MODELS:
        raise ConfigError(f"unknown model {values['model']!r}; choose from {', '.join(MODELS)}")
    if values["impute"] not in ("drop_rows", "mean", "median"):
        raise ConfigError("impute must be one of drop_rows, mean, median")
    if values["task"] not in (None, "regression", "classification"):
        raise ConfigError("task must be regression or classification")
    if values["poly_degree"] not in (1, 2):
        raise ConfigError("poly_degree must be 1 or 2")
    if values["features"] is not None and values["target"] in values["features"]:
        raise ConfigError("target must not be listed among the features")
    for e in values["explain"]:
        if e not in EXPLAINERS:
            raise ConfigError(f"unknown explainer {e!r}; choose from {', '.join(EXPLAINERS)}")
    for p in values["plots"]:
        kind = p.get("kind") if isinstance(p, dict) else p
        if kind not in PLOTS:
            raise ConfigError(f"unknown plot {kind!r}; choose from {', '.join(PLOTS)}")
    red = values["reduce"]
    if red is not None and red.get("method", "pca") not in REDUCERS:
        raise ConfigError(f"unknown reduce method; choose from {', '.join(REDUCERS)}")
    an = values["anova"]
    if an is not None and not {"value", "group"} <= set(an):
        raise ConfigError("anova needs 'value' and 'group' columns")
    return PipelineConfig(values, base_dir)


def load_config(path: str | Path, seed: int | None = None) -> PipelineConfig:
    path = resolve_config_path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {str(path)!r} is not valid JSON: {exc}") from None
    return parse_config(raw, path.parent, seed)


# --- json helpers ----------------------------------------------------------------


def _plain(obj):
    """Recursively convert numpy values so ``json`` can write them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write(out: Path, name: str, obj) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    p = out / name
    p.write_text(dumps(obj))
    return p


def _read(out: Path, name: str, stage: str) -> dict:
    p = out / name
    if not p.exists():
        raise UsageError(f"{name} not found in {str(out)!r}; run the {stage} stage first")
    return json.loads(p.read_text())


# --- stage: ingest -----------------------------------------------------------------


def _columns_needed(cfg: PipelineConfig, table: Table) -> tuple[list[str], list[str]]:
    target = cfg["target"]
    if target not in table.names:
        raise DataError(f"target column {target!r} not in input")
    features = cfg["features"]
    if features is None:
        features = [c for c in table.numeric_columns() if c != target]
    missing = [c for c in features if c not in table.names]
    if missing:
        raise DataError(f"feature columns not in input: {', '.join(missing)}")
    bad = [c for c in features if table.spec(c).kind != "numeric"]
    if bad:
        raise DataError(f"feature columns must be numeric: {', '.join(bad)}")
    if not features:
        raise DataError("no feature columns")
    keep = list(dict.fromkeys([*features, target]))
    an = cfg["anova"]
    if an is not None:
        for c in (an["value"], an["group"]):
            if c not in table.names:
                raise DataError(f"anova column {c!r} not in input")
            keep.append(c)
    for p in cfg["plots"]:
        if isinstance(p, dict) and p.get("kind") == "scatter":
            for axis in ("x", "y"):
                c = p.get(axis)
                if c not in table.names:
                    raise DataError(f"scatter column {c!r} not in input")
                keep.append(c)
    return features, list(dict.fromkeys(keep))


def ingest(cfg: PipelineConfig, out: Path) -> dict:
    if not cfg.input_path.exists():
        raise DataError(f"input file {str(cfg['input'])!r} not found")
    raw = load_csv(cfg.input_path)
    features, keep = _columns_needed(cfg, raw)
    table = Table(tuple(raw.spec(c) for c in keep), tuple(tuple(r[raw.index(c)] for c in keep) for r in raw.rows))
    table = drop_or_impute(table, cfg["impute"])
    target_kind = table.spec(cfg["target"]).kind
    if target_kind == "categorical" and any(v is None for v in table.column(cfg["target"])):
        table = Table(table.columns, tuple(r for r in table.rows if r[table.index(cfg["target"])] is not None))
    task = cfg["task"] or ("classification" if target_kind == "categorical" else "regression")
    if task == "regression" and target_kind != "numeric":
        raise DataError("regression needs a numeric target")
    train, test = split_indices(table.n_rows, SplitSpec(cfg["test_fraction"], cfg["seed"]))
    scaling = None
    if cfg["scale"]:
        _, params = min_max_scale(table, features)
        scaling = params.to_dict()
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "cleaned.csv")
    doc = {
        "stage": "ingest",
        "n_rows_raw": raw.n_rows,
        "n_rows": table.n_rows,
        "features": features,
        "target": cfg["target"],
        "task": task,
        "impute": cfg["impute"],
        "scaling": scaling,
        "split": {"seed": cfg["seed"], "test_fraction": cfg["test_fraction"], "train": train, "test": test},
        "summary": describe(table).to_dict(),
    }
    _write(out, "ingest.json", doc)
    return doc


@dataclass
class Prepared:
    table: Table
    features: list[str]
    target: str
    task: str
    X: np.ndarray  # scaled features, all rows
    y: np.ndarray  # numeric target or class indices
    classes: list | None
    train: np.ndarray
    test: np.ndarray


def _prepared(out: Path) -> Prepared:
    doc = _read(out, "ingest.json", "ingest")
    table = load_csv(out / "cleaned.csv")
    features = doc["features"]
    if doc["scaling"] is not None:
        table = apply_scaling(table, ScalingParams.from_dict(doc["scaling"]), features)
    X = table.matrix(features)
    col = table.column(doc["target"])
    classes = None
    if doc["task"] == "classification":
        classes = sorted(set(col), key=lambda v: (isinstance(v, str), v))
        index = {c: i for i, c in enumerate(classes)}
        y = np.array([index[v] for v in col], dtype=int)
    else:
        y = np.asarray(col, dtype=float)
    split = doc["split"]
    return Prepared(table, features, doc["target"], doc["task"], X, y, classes,
                    np.asarray(split["train"], dtype=int), np.asarray(split["test"], dtype=int))


# --- stage: reduce -------------------------------------------------------------------


def reduce(cfg: PipelineConfig, out: Path) -> dict | None:
    spec = cfg["reduce"]
    if spec is None:
        return None
    data = _prepared(out)
    method = spec.get("method", "pca")
    k = int(spec.get("k", 2))
    X = data.X
    if method == "pca":
        result = pca_fit(X, k).to_dict()
    elif method == "mds":
        result = mds(pairwise_distances(X), k).to_dict()
    elif method == "isomap":
        result = isomap(X, k, int(spec.get("n_neighbors", 10))).to_dict()
    elif method == "tsne":
        tc = TsneConfig(
            perplexity=spec.get("perplexity"),
            out_dim=k,
            iterations=int(spec.get("iterations", 500)),
            seed=cfg["seed"],
        )
        result = tsne(X, tc).to_dict()
    else:
        if data.task != "classification":
            raise ConfigError("lda needs a categorical target")
        result = lda_fit(X, data.y, k).to_dict()
    doc = {"stage": "reduce", "method": method, "features": data.features, "result": result}
    _write(out, "reduce.json", doc)
    return doc


# --- stage: fit ------------------------------------------------------------------------


class ExpandedModel:
    """A model fitted on polynomial features, seen from the raw features."""

    def __init__(self, inner, degree: int, feature_names: list[str]):
        self.inner = inner
        self.degree = degree
        self.feature_names = tuple(feature_names)
        self.classes = inner.classes

    @property
    def is_classifier(self) -> bool:
        return self.inner.is_classifier

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return self.inner.predict(expand_polynomial(X, self.degree))


def _fit_model(kind: str, params: dict, X, y, names, task: str, seed: int, classes):
    p = dict(params)
    if task == "classification" and kind not in ("tree", "mlp"):
        raise ConfigError(f"model {kind!r} is a regressor; use tree or mlp for a categorical target")
    if kind == "ols":
        return LinearModel(fit_ols(X, y, names))
    if kind == "ridge":
        return LinearModel(fit_ridge(X, y, float(p.get("alpha", 1.0)), names))
    if kind == "lasso":
        return LinearModel(fit_lasso(X, y, float(p.get("alpha", 1.0)), names))
    if kind == "huber":
        return LinearModel(
            fit_huber(X, y, float(p.get("epsilon", 1.35)), float(p.get("alpha", 1e-4)), names)
        )
    if kind == "tweedie":
        glm = GlmSpec(float(p.get("power", 1.5)), float(p.get("dispersion", 1.0)), p.get("link", "log"))
        return LinearModel(fit_tweedie(X, y, glm, float(p.get("alpha", 0.0)), names), glm)
    if kind == "tree":
        return fit_tree(X, y, task, int(p.get("max_depth", 5)), int(p.get("min_leaf", 1)), names)
    hidden = [int(h) for h in p.get("hidden", [16])]
    out_width = len(classes) if task == "classification" else 1
    spec = MlpSpec(
        layer_sizes=(X.shape[1], *hidden, out_width),
        dropout_rates=tuple(p.get("dropout", [0.0] * len(hidden))),
        output="softmax" if task == "classification" else "identity",
        seed=seed,
        epochs=int(p.get("epochs", 50)),
        batch_size=int(p.get("batch_size", 32)),
        learning_rate=float(p.get("learning_rate", 0.05)),
    )
    return mlp_train(X, y, spec, feature_names=names, classes=classes)


def _scores(model, X, y, task) -> float:
    if task == "classification":
        return accuracy(y, model.predict_class(X))
    return r2_score(y, model.predict(X))


def _metrics(model, data: Prepared, X) -> dict:
    tr, te = data.train, data.test
    name = "accuracy" if data.task == "classification" else "r2"
    return {
        name: _scores(model, X[te], data.y[te], data.task),
        f"{name}_train": _scores(model, X[tr], data.y[tr], data.task),
        "n_train": int(tr.size),
        "n_test": int(te.size),
    }


def _design(data: Prepared, degree: int) -> tuple[np.ndarray, list[str]]:
    if degree == 1:
        return data.X, list(data.features)
    return expand_polynomial(data.X, degree), polynomial_names(data.features, degree)


def fit(cfg: PipelineConfig, out: Path) -> dict:
    data = _prepared(out)
    degree = cfg["poly_degree"]
    X, names = _design(data, degree)
    tr = data.train
    if data.task == "classification" and np.unique(data.y[tr]).size != len(data.classes):
        raise DataError("every class must appear in the training split")
    model = _fit_model(cfg["model"], cfg["model_params"], X[tr], data.y[tr], names, data.task, cfg["seed"], data.classes)
    doc = {
        "stage": "fit",
        "model": cfg["model"],
        "task": data.task,
        "poly_degree": degree,
        "base_features": data.features,
        "design_features": names,
        "classes": data.classes,
        "model_summary": model.to_dict(),
        "metrics": _metrics(model, data, X),
    }
    if isinstance(model, LinearModel):
        doc["standardized_coefficients"] = standardized_coefficients(model.fit, X[tr], data.y[tr]).to_dict()
    if degree > 1 and data.task == "regression":
        base = LinearModel(fit_ols(data.X[tr], data.y[tr], data.features))
        doc["degree1_baseline"] = {
            "model": "ols",
            "metrics": _metrics(base, data, data.X),
            "standardized_coefficients": standardized_coefficients(base.fit, data.X[tr], data.y[tr]).to_dict(),
            "model_summary": base.to_dict(),
        }
    _write(out, "fit.json", doc)
    return doc


def _load_model(fit_doc: dict):
    model = model_from_dict(fit_doc["model_summary"])
    if fit_doc["poly_degree"] > 1:
        return ExpandedModel(model, fit_doc["poly_degree"], fit_doc["base_features"])
    return model


# --- stage: explain ------------------------------------------------------------------------


def explain(cfg: PipelineConfig, out: Path) -> dict | None:
    requested = cfg["explain"]
    if not requested:
        return None
    data = _prepared(out)
    fit_doc = _read(out, "fit.json", "fit")
    model = _load_model(fit_doc)
    ep = cfg["explain_params"]
    seed = cfg["seed"]
    X, y = data.X, data.y
    bg = X[data.train[: int(ep.get("background", 100))]]
    rows = data.test[: int(ep.get("rows", 3))]
    Xte, yte = X[data.test], y[data.test]
    classifier = data.task == "classification"
    target_class = None
    if classifier:
        label = ep.get("target_class", data.classes[0])
        if label not in data.classes:
            raise ConfigError(f"target_class {label!r} is not a class of {data.target!r}")
        target_class = data.classes.index(label)
    attributions, curves = [], []
    feats = ep.get("features") or [data.features[0]]
    for f in feats:
        if f not in data.features:
            raise ConfigError(f"explain feature {f!r} is not a model feature")

    for name in requested:
        if name == "standardized_coefficients":
            src = fit_doc.get("degree1_baseline", fit_doc)
            if "standardized_coefficients" not in src:
                raise ConfigError("standardized_coefficients needs a linear model")
            attributions.append(src["standardized_coefficients"])
        elif name == "permutation_importance":
            K = int(ep.get("K", 5))
            for loss in ("squared_prediction_shift", "error_increase"):
                pi = permutation_importance(model, Xte, yte, loss, K, seed)
                attributions.append(pi.to_dict())
        elif name == "shapley":
            d = X.shape[1]
            for r in rows:
                tgt = int(np.argmax(model.predict(X[r][None, :])[0])) if classifier else None
                if d <= MAX_EXACT_FEATURES:
                    a = shapley_exact(model, X[r], bg, tgt)
                else:
                    a = shapley_sample(model, X[r], bg, int(ep.get("n_permutations", 100)), seed, tgt)
                doc = a.to_dict()
                doc["row"] = int(r)
                if classifier:
                    doc["target_class"] = data.classes[tgt]
                attributions.append(doc)
        elif name == "pdp":
            for f in feats:
                curve = pdp(model, X[data.train], data.features.index(f), g=int(ep.get("grid_size", 20)), target=target_class)
                cd = curve.to_dict()
                if classifier:
                    cd["target_class"] = data.classes[target_class]
                curves.append(cd)
        elif name == "feature_effect":
            src = fit_doc.get("degree1_baseline", fit_doc)
            lin = model_from_dict(src["model_summary"])
            if not isinstance(lin, LinearModel):
                raise ConfigError("feature_effect needs a linear model")
            for f in feats:
                curves.append(feature_effect(lin.fit, X[data.train], data.features.index(f)).to_dict())
        elif name == "lime":
            stats = (X[data.train].mean(axis=0), X[data.train].std(axis=0))
            for r in rows:
                tgt = int(np.argmax(model.predict(X[r][None, :])[0])) if classifier else None
                s = lime_local(model, X[r], stats, int(ep.get("lime_samples", 500)), ep.get("kernel_width"), seed, target=tgt)
                doc = s.to_dict()
                doc["row"] = int(r)
                attributions.append(doc)
    doc = {"stage": "explain", "attributions": attributions, "curves": curves}
    _write(out, "explain.json", doc)
    return doc


# --- stage: anova ----------------------------------------------------------------------------


def anova(cfg: PipelineConfig, out: Path) -> dict | None:
    spec = cfg["anova"]
    if spec is None:
        return None
    _read(out, "ingest.json", "ingest")
    table = load_csv(out / "cleaned.csv")
    value, group = spec["value"], spec["group"]
    if table.spec(value).kind != "numeric":
        raise DataError(f"anova value column {value!r} must be numeric")
    by_group: dict[str, list[float]] = {}
    for v, g in zip(table.column(value), table.column(group)):
        if v is None or g is None:
            continue
        by_group.setdefault(str(g) if not isinstance(g, float) else repr(g), []).append(v)
    names = sorted(by_group)
    groups = [by_group[n] for n in names]
    alpha = float(spec.get("alpha", 0.05))
    doc = {
        "stage": "anova",
        "value": value,
        "group": group,
        "group_names": names,
        "group_sizes": [len(g) for g in groups],
        "group_means": [float(np.mean(g)) for g in groups],
        "anova": one_way_anova(groups).to_dict(),
        "tukey": tukey_hsd(groups, alpha, names).to_dict(),
    }
    _write(out, "anova.json", doc)
    return doc


# --- stage: report ----------------------------------------------------------------------------


def _plot_doc(kind: str, req: dict, stages: dict, out: Path) -> tuple[str, dict]:
    fit_doc, explain_doc = stages["fit"], stages["explain"]
    if kind == "weight_plot":
        src = fit_doc.get("degree1_baseline", fit_doc)
        sc = src.get("standardized_coefficients")
        if sc is None:
            raise ConfigError("weight_plot needs a linear model")
        return "weight_plot.svg", {**sc, "title": "standardized coefficients"}
    if kind == "scree":
        red = stages["reduce"]
        if red is None or red["method"] != "pca":
            raise ConfigError("scree plot needs reduce.method = pca")
        ratios = red["result"]["explained_variance_ratio"]
        return "scree.svg", {"values": ratios, "title": "PCA explained variance"}
    if kind == "pdp":
        feature = req.get("feature")
        curves = [c for c in (explain_doc or {}).get("curves", []) if c["method"] == "pdp"]
        if feature is not None:
            curves = [c for c in curves if c["feature_names"][0] == feature]
        if not curves:
            raise ConfigError("pdp plot needs a pdp curve from the explain stage")
        c = curves[0]
        f = c["feature_names"][0]
        return f"pdp_{f}.svg", {**c, "title": f"partial dependence: {f}"}
    if kind == "box_by_group":
        an = stages["anova"]
        if an is None:
            raise ConfigError("box_by_group plot needs the anova stage")
        table = load_csv(out / "cleaned.csv")
        groups: dict[str, list[float]] = {n: [] for n in an["group_names"]}
        for v, g in zip(table.column(an["value"]), table.column(an["group"])):
            key = str(g) if not isinstance(g, float) else repr(g)
            if v is not None and key in groups:
                groups[key].append(v)
        doc = {
            "group_names": an["group_names"],
            "groups": [groups[n] for n in an["group_names"]],
            "y_label": an["value"],
            "title": f"{an['value']} by {an['group']}",
        }
        return "box_by_group.svg", doc
    table = load_csv(out / "cleaned.csv")
    x, y = req.get("x"), req.get("y")
    doc = {"x": table.column(x), "y": table.column(y), "x_label": x, "y_label": y, "title": f"{y} vs {x}"}
    if any(v is None for v in doc["x"] + doc["y"]):
        raise DataError("scatter columns hold missing values")
    return f"scatter_{x}_{y}.svg", doc


def report(cfg: PipelineConfig, out: Path) -> dict:
    ingest_doc = _read(out, "ingest.json", "ingest")
    fit_doc = _read(out, "fit.json", "fit")
    stages = {"ingest": ingest_doc, "fit": fit_doc}
    configured = {"reduce": cfg["reduce"], "explain": cfg["explain"] or None, "anova": cfg["anova"]}
    for name, spec in configured.items():
        stages[name] = None if spec is None else _read(out, f"{name}.json", name)

    plots = []
    for req in cfg["plots"]:
        req = req if isinstance(req, dict) else {"kind": req}
        fname, pdoc = _plot_doc(req["kind"], req, stages, out)
        (out / fname).write_text(render_svg(req["kind"], _plain(pdoc)))
        plots.append(fname)

    summary = ingest_doc["summary"]
    doc = {
        "tool": {"name": "courtside", "version": __version__},
        "seed": cfg["seed"],
        "config": cfg.echo(),
        "data": {
            "n_rows_raw": ingest_doc["n_rows_raw"],
            "n_rows": ingest_doc["n_rows"],
            "features": ingest_doc["features"],
            "target": ingest_doc["target"],
            "task": ingest_doc["task"],
            "scaling": ingest_doc["scaling"],
            "columns": summary["columns"],
            "correlation_names": summary["correlation_names"],
            "correlation": summary["correlation"],
        },
        "model": fit_doc["model"],
        "task": fit_doc["task"],
        "poly_degree": fit_doc["poly_degree"],
        "design_features": fit_doc["design_features"],
        "model_summary": fit_doc["model_summary"],
        "metrics": fit_doc["metrics"],
        "standardized_coefficients": fit_doc.get("standardized_coefficients"),
        "degree1_baseline": fit_doc.get("degree1_baseline"),
        "reduce": stages["reduce"],
        "attributions": (stages["explain"] or {}).get("attributions", []),
        "curves": (stages["explain"] or {}).get("curves", []),
        "inference": stages["anova"],
        "plots": plots,
    }
    _write(out, "report.json", doc)
    return doc


_STAGE_FUNCS = {"ingest": ingest, "reduce": reduce, "fit": fit, "explain": explain, "anova": anova, "report": report}


def run_stage(stage: str, cfg: PipelineConfig, out: str | Path):
    """Run one stage, tagging any library failure with the stage name."""
    out = Path(out)
    try:
        with np.errstate(all="ignore"):
            return _STAGE_FUNCS[stage](cfg, out)
    except StageError:
        raise
    except CourtsideError as exc:
        raise StageError(stage, exc) from exc
    except np.linalg.LinAlgError as exc:
        raise StageError(stage, NumericError(f"linear algebra failure: {exc}")) from exc


def run(cfg: PipelineConfig, out: str | Path) -> dict:
    """All stages in order.  On failure no report.json is left behind."""
    out = Path(out)
    stale = out / "report.json"
    if stale.exists():
        stale.unlink()
    for stage in STAGES:
        result = run_stage(stage, cfg, out)
    return result
