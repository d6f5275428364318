"""End-to-end analysis pipeline and report emission.

One call runs ingest, indicator construction, descriptive statistics,
the train/validation split, the full-model fit, subset selection,
validation scoring and attribution, then assembles everything into an
AnalysisReport.  Emission is deterministic: the JSON serialisation uses
sorted keys and full-precision float repr, so two runs over the same
input and configuration produce byte-identical report files.

Any stage failure is re-raised as PipelineError carrying the stage
name, the machine-readable error code of the underlying failure and a
flag saying whether earlier stages had completed (a partial result
existed).  Nothing is written for a failed run.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .attribution import (
    ImportanceRanking,
    ShapMatrix,
    TrendComparison,
    linear_shap,
    mean_abs_importance,
    trend_compare,
)
from .errors import (
    ConfigError,
    InvariantBreachError,
    PipelineError,
    StratLogitError,
)
from .evaluate import (
    ClassificationMetrics,
    ConfusionMatrix,
    RocCurve,
    Split,
    classify,
    make_split,
    metrics,
    predict_prob,
    roc_auc,
)
from .indicators import CompositeWeights, build_feature_matrix, write_feature_matrix_csv
from .ingest import filter_eligible, parse_dataset
from .logit import (
    DesignMatrix,
    LogitFit,
    fit_logistic,
    inference_table,
    verify_fit_identities,
)
from .model_select import (
    ComparisonTable,
    backward_stepwise,
    comparison_to_dicts,
    enumerate_subsets,
    fit_all,
    write_comparison_csv,
)
from .stats_core import describe, pearson_matrix, vif

SELECTION_MODES = ("enumerate", "stepwise")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs; validated before any file is touched."""

    input_path: str
    out_dir: Optional[str] = None
    coauthor_edges: Optional[str] = None
    alpha: float = 1.0
    beta: float = 1.0
    train_fraction: float = 0.7
    seed: int = 0
    max_iter: int = 1000
    tol: float = 1e-8
    selection: str = "enumerate"
    lowess_frac: float = 2.0 / 3.0
    threads: Optional[int] = None
    delimiter: str = ","

    def validate(self) -> None:
        if not self.input_path:
            raise ConfigError("input_path must be set")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError(
                f"train_fraction must be in (0, 1), got {self.train_fraction}"
            )
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.tol > 0):
            raise ConfigError(f"tol must be > 0, got {self.tol}")
        if self.selection not in SELECTION_MODES:
            raise ConfigError(
                f"selection must be one of {SELECTION_MODES}, got {self.selection!r}"
            )
        if not (0.0 < self.lowess_frac <= 1.0):
            raise ConfigError(f"lowess_frac must be in (0, 1], got {self.lowess_frac}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if len(self.delimiter) != 1:
            raise ConfigError(f"delimiter must be a single character, got {self.delimiter!r}")

    def echo(self) -> dict:
        """Analytic parameters only; output location is not analysis."""
        data = asdict(self)
        data.pop("out_dir")
        return data


@dataclass
class RunArtifacts:
    """In-memory objects behind the report, for file emission and tests."""

    dataset_raw: object
    dataset: object
    feature_matrix: object
    split: Split
    full_fit: LogitFit
    best_fit: LogitFit
    comparison: ComparisonTable
    confusion: ConfusionMatrix
    metrics: ClassificationMetrics
    roc: RocCurve
    full_shap: ShapMatrix
    optimized_shap: ShapMatrix
    full_importance: ImportanceRanking
    optimized_importance: ImportanceRanking
    trends: dict


@dataclass
class AnalysisReport:
    tool: dict
    config: dict
    dataset: dict
    descriptive_stats: list
    correlation: dict
    vif: dict
    split: dict
    full_model: dict
    selection: dict
    evaluation: dict
    attribution: dict
    artifacts: RunArtifacts = field(repr=False, compare=False, default=None)

    def to_json_dict(self) -> dict:
        return _py(
            {
                "tool": self.tool,
                "config": self.config,
                "dataset": self.dataset,
                "descriptive_stats": self.descriptive_stats,
                "correlation": self.correlation,
                "vif": self.vif,
                "split": self.split,
                "full_model": self.full_model,
                "selection": self.selection,
                "evaluation": self.evaluation,
                "attribution": self.attribution,
            }
        )


def _py(obj):
    """Recursively convert numpy scalars/arrays for JSON emission."""
    if isinstance(obj, dict):
        return {str(k): _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _model_summary(fit: LogitFit, model_id: str) -> dict:
    rows = inference_table(fit)
    coefficients = {"intercept": float(fit.coef[0])}
    std_err = {"intercept": float(fit.std_err[0])}
    for i, name in enumerate(fit.feature_names, start=1):
        coefficients[name] = float(fit.coef[i])
        std_err[name] = float(fit.std_err[i])
    return {
        "model_id": model_id,
        "features": list(fit.feature_names),
        "coefficients": coefficients,
        "std_err": std_err,
        "inference": [
            {
                "feature": r.feature,
                "coef": r.coef,
                "std_err": r.std_err,
                "z": r.z,
                "p_two_sided": r.p_two_sided,
                "exp_b": r.exp_b,
                "wald": r.wald,
            }
            for r in rows
        ],
        "log_lik": fit.log_lik,
        "log_lik_null": fit.log_lik_null,
        "pseudo_r2": fit.pseudo_r2,
        "llr_stat": fit.llr_stat,
        "llr_p": fit.llr_p,
        "aic": fit.aic,
        "bic": fit.bic,
        "n_obs": fit.n_obs,
        "k_params": fit.k_params,
        "iterations": fit.iterations,
        "converged": fit.converged,
    }


def _verify_report(artifacts: RunArtifacts) -> None:
    """Cross-quantity identities re-checked before anything is written."""
    verify_fit_identities(artifacts.full_fit)
    verify_fit_identities(artifacts.best_fit)
    fm = artifacts.feature_matrix
    for shap, fit in (
        (artifacts.full_shap, artifacts.full_fit),
        (artifacts.optimized_shap, artifacts.best_fit),
    ):
        cols = [fm.column(name) for name in shap.feature_names]
        X = np.column_stack(cols)
        eta = fit.coef[0] + X @ fit.coef[1:]
        recon = shap.base_value + np.sum(shap.values, axis=1)
        gap = float(np.max(np.abs(recon - eta)))
        if gap > 1e-10:
            raise InvariantBreachError(
                f"shap additivity violated for {shap.model_id}: max gap {gap}"
            )
    cm, mets = artifacts.confusion, artifacts.metrics
    if cm.total != artifacts.split.n_val:
        raise InvariantBreachError("confusion total does not match validation size")
    if mets.accuracy != (cm.tp + cm.tn) / cm.total:
        raise InvariantBreachError("accuracy inconsistent with confusion matrix")
    for row in artifacts.comparison.rows:
        if row.failed or row.aic is None:
            continue
        want = 2.0 * row.k_params - 2.0 * row.log_lik
        if abs(row.aic - want) > 1e-9 * max(1.0, abs(want)):
            raise InvariantBreachError(f"comparison row {row.model_id}: AIC mismatch")
    for v in artifacts.metrics.__dict__.values():
        if v is not None and not (0.0 <= v <= 1.0):
            raise InvariantBreachError(f"classification metric outside [0, 1]: {v}")


def run_pipeline(cfg: RunConfig) -> AnalysisReport:
    """Execute every stage and assemble the report.

    Raises PipelineError on the first failing stage; the exit code of
    the underlying error is preserved for the command line front end.
    """
    cfg.validate()
    state = {}
    completed = []

    def stage(name, fn):
        try:
            result = fn()
        except StratLogitError as exc:
            raise PipelineError(name, exc, partial_report=bool(completed)) from exc
        completed.append(name)
        return result

    def _ingest():
        raw = parse_dataset(cfg.input_path, delimiter=cfg.delimiter)
        return raw, filter_eligible(raw)

    dataset_raw, dataset = stage("ingest", _ingest)
    fm = stage(
        "indicators",
        lambda: build_feature_matrix(dataset, CompositeWeights(cfg.alpha, cfg.beta)),
    )

    def _describe():
        stats = [
            {"variable": name, **describe(fm.column(name)).__dict__}
            for name in fm.column_names
        ]
        corr = pearson_matrix(fm)
        vifs = vif(fm)
        return stats, corr, vifs

    stats, corr, vifs = stage("describe", _describe)
    split = stage("split", lambda: make_split(fm.n_rows, cfg.train_fraction, cfg.seed))
    train_idx = np.asarray(split.train_indices, dtype=int)
    val_idx = np.asarray(split.val_indices, dtype=int)

    full_fit = stage(
        "fit",
        lambda: fit_logistic(
            DesignMatrix.from_features(fm, rows=train_idx),
            max_iter=cfg.max_iter,
            tol=cfg.tol,
        ),
    )

    def _select():
        if cfg.selection == "enumerate":
            specs = enumerate_subsets(fm.column_names)
            table = fit_all(
                fm, specs, split, max_iter=cfg.max_iter, tol=cfg.tol, threads=cfg.threads
            )
            ordered = table.sorted_by_aic()
            best_row = table.best_row()
        else:
            result = backward_stepwise(fm, split, max_iter=cfg.max_iter, tol=cfg.tol)
            ordered = result.path
            best_row = result.path.rows[-1]
        best_fit = fit_logistic(
            DesignMatrix.from_features(fm, best_row.spec.features, rows=train_idx),
            max_iter=cfg.max_iter,
            tol=cfg.tol,
        )
        if abs(best_fit.aic - best_row.aic) > 1e-9 * max(1.0, abs(best_row.aic)):
            raise InvariantBreachError("best-model refit disagrees with its table row")
        return ordered, best_row, best_fit

    comparison, best_row, best_fit = stage("select", _select)

    def _evaluate():
        block = np.column_stack(
            [fm.column(name)[val_idx] for name in best_fit.feature_names]
        )
        probs = predict_prob(best_fit, block)
        y_val = fm.target[val_idx]
        cm = ConfusionMatrix.from_predictions(y_val, classify(probs))
        return cm, metrics(cm), roc_auc(probs, y_val)

    cm, mets, roc = stage("evaluate", _evaluate)

    def _attribute():
        background = np.mean(fm.values[train_idx], axis=0)
        full_shap = linear_shap(full_fit, fm.values, background, model_id="full")
        opt_cols = [fm.column_names.index(name) for name in best_fit.feature_names]
        opt_shap = linear_shap(
            best_fit,
            fm.values[:, opt_cols],
            background[opt_cols],
            model_id="optimized",
        )
        trends = {}
        for name in fm.column_names:
            trends[name] = trend_compare(
                full_shap, opt_shap, name, fm.column(name), frac=cfg.lowess_frac
            )
        return background, full_shap, opt_shap, trends

    background, full_shap, opt_shap, trends = stage("attribute", _attribute)

    def _assemble():
        artifacts = RunArtifacts(
            dataset_raw=dataset_raw,
            dataset=dataset,
            feature_matrix=fm,
            split=split,
            full_fit=full_fit,
            best_fit=best_fit,
            comparison=comparison,
            confusion=cm,
            metrics=mets,
            roc=roc,
            full_shap=full_shap,
            optimized_shap=opt_shap,
            full_importance=mean_abs_importance(full_shap),
            optimized_importance=mean_abs_importance(opt_shap),
            trends=trends,
        )
        _verify_report(artifacts)
        trend_json = {}
        for name, tc in trends.items():
            entry = {
                "x": tc.full_curve.x,
                "full": tc.full_curve.y,
                "optimized": tc.optimized_curve.y if tc.optimized_curve else None,
                "missing_from": list(tc.missing_from),
            }
            trend_json[name] = entry
        report = AnalysisReport(
            tool={"name": "stratlogit", "version": __version__},
            config=cfg.echo(),
            dataset={
                "source": dataset.provenance.source,
                "rows_read": dataset_raw.provenance.rows_read,
                "rows_eligible": len(dataset.records),
            },
            descriptive_stats=stats,
            correlation={"names": list(corr.names), "r": corr.r},
            vif={
                "names": list(fm.column_names),
                "values": vifs,
                "mean": float(np.mean(vifs)),
            },
            split={
                "seed": split.seed,
                "train_fraction": split.train_fraction,
                "n_train": split.n_train,
                "n_val": split.n_val,
            },
            full_model=_model_summary(full_fit, "full"),
            selection={
                "mode": cfg.selection,
                "n_models": len(comparison.rows),
                "best": {
                    "model_id": best_row.model_id,
                    "features": list(best_row.spec.features),
                    "aic": best_row.aic,
                },
                "table": comparison_to_dicts(comparison),
            },
            evaluation={
                "model_id": "optimized",
                "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
                "metrics": {
                    "accuracy": mets.accuracy,
                    "precision": mets.precision,
                    "recall": mets.recall,
                    "f1": mets.f1,
                },
                "roc": {
                    "points": [list(pt) for pt in roc.points],
                    "thresholds": list(roc.thresholds),
                    "auc": roc.auc,
                },
            },
            attribution={
                "background": {
                    name: float(background[j])
                    for j, name in enumerate(fm.column_names)
                },
                "full": {
                    "base_value": full_shap.base_value,
                    "importance": [list(e) for e in artifacts.full_importance.entries],
                },
                "optimized": {
                    "base_value": opt_shap.base_value,
                    "importance": [
                        list(e) for e in artifacts.optimized_importance.entries
                    ],
                },
                "trends": trend_json,
            },
            artifacts=artifacts,
        )
        return report

    return stage("report", _assemble)


def report_to_json(report: AnalysisReport) -> str:
    return json.dumps(report.to_json_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_rows(path, header, rows, delimiter=","):
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_descriptive_csv(stat_rows, path) -> None:
    """``stat_rows``: dicts with variable plus the DescriptiveStats fields."""
    _write_rows(
        path,
        ["variable", "n", "mean", "std_dev", "minimum", "median", "maximum", "skewness"],
        [
            [
                row["variable"],
                row["n"],
                repr(row["mean"]),
                repr(row["std_dev"]),
                repr(row["minimum"]),
                repr(row["median"]),
                repr(row["maximum"]),
                repr(row["skewness"]),
            ]
            for row in stat_rows
        ],
    )


def write_correlation_csv(names, r, path) -> None:
    names = list(names)
    r = np.asarray(r, dtype=float)
    _write_rows(
        path,
        ["variable"] + names,
        [[name] + [repr(float(v)) for v in r[i]] for i, name in enumerate(names)],
    )


def write_vif_csv(names, values, path) -> None:
    _write_rows(
        path,
        ["variable", "vif"],
        [[name, repr(float(v))] for name, v in zip(names, values)],
    )


def write_inference_csv(rows, path) -> None:
    _write_rows(
        path,
        ["feature", "coef", "std_err", "z", "p_two_sided", "exp_b", "wald"],
        [
            [
                r.feature,
                repr(r.coef),
                repr(r.std_err),
                repr(r.z),
                repr(r.p_two_sided),
                repr(r.exp_b),
                repr(r.wald),
            ]
            for r in rows
        ],
    )


def write_confusion_csv(cm: ConfusionMatrix, path) -> None:
    _write_rows(path, ["tp", "fp", "tn", "fn"], [[cm.tp, cm.fp, cm.tn, cm.fn]])


def write_metrics_csv(mets: ClassificationMetrics, path) -> None:
    """Undefined metrics are written as the literal word ``undefined``."""
    _write_rows(
        path,
        ["metric", "value"],
        [
            [name, _fmt(getattr(mets, name))]
            for name in ("accuracy", "precision", "recall", "f1")
        ],
    )


def write_roc_csv(roc: RocCurve, path) -> None:
    _write_rows(
        path,
        ["fpr", "tpr", "threshold"],
        [
            [repr(pt[0]), repr(pt[1]), "" if t is None else repr(t)]
            for pt, t in zip(roc.points, roc.thresholds)
        ],
    )


def write_shap_values_csv(shap: ShapMatrix, row_ids, path) -> None:
    _write_rows(
        path,
        ["scholar_id"] + list(shap.feature_names),
        [
            [row_ids[i]] + [repr(float(v)) for v in shap.values[i]]
            for i in range(shap.values.shape[0])
        ],
    )


def write_importance_csv(ranking: ImportanceRanking, path) -> None:
    _write_rows(
        path,
        ["feature", "mean_abs_shap"],
        [[name, repr(score)] for name, score in ranking.entries],
    )


def write_trend_comparison_csv(tc: TrendComparison, path) -> None:
    """Two-model trend file; the optimized column is empty when the
    optimized model does not use the feature."""
    full = tc.full_curve
    opt = tc.optimized_curve
    rows = []
    for i in range(full.x.size):
        rows.append(
            [
                repr(float(full.x[i])),
                repr(float(full.y[i])),
                repr(float(opt.y[i])) if opt is not None else "",
            ]
        )
    _write_rows(path, ["x", "smoothed_full", "smoothed_optimized"], rows)


def write_trend_csv(curve, path) -> None:
    """Single-model trend file."""
    _write_rows(
        path,
        ["x", "smoothed"],
        [
            [repr(float(curve.x[i])), repr(float(curve.y[i]))]
            for i in range(curve.x.size)
        ],
    )


def write_report_files(report: AnalysisReport, out_dir) -> list:
    """Write report.json and the CSV side files; returns the paths."""
    artifacts = report.artifacts
    if artifacts is None:
        raise ConfigError("report has no artifacts attached; run the pipeline first")
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def target(name):
        path = os.path.join(out_dir, name)
        written.append(path)
        return path

    with open(target("report.json"), "w", encoding="utf-8") as handle:
        handle.write(report_to_json(report))

    fm = artifacts.feature_matrix
    write_feature_matrix_csv(fm, target("features.csv"))
    write_descriptive_csv(report.descriptive_stats, target("descriptive_stats.csv"))
    write_correlation_csv(
        report.correlation["names"], report.correlation["r"], target("correlation.csv")
    )
    write_vif_csv(report.vif["names"], report.vif["values"], target("vif.csv"))
    for key, fit in (("full", artifacts.full_fit), ("optimized", artifacts.best_fit)):
        write_inference_csv(inference_table(fit), target(f"inference_{key}.csv"))
    write_comparison_csv(artifacts.comparison, target("comparison.csv"))
    write_confusion_csv(artifacts.confusion, target("confusion.csv"))
    write_metrics_csv(artifacts.metrics, target("metrics.csv"))
    write_roc_csv(artifacts.roc, target("roc.csv"))
    for key, shap in (
        ("full", artifacts.full_shap),
        ("optimized", artifacts.optimized_shap),
    ):
        write_shap_values_csv(shap, fm.row_ids, target(f"shap_{key}.csv"))
    for key, ranking in (
        ("full", artifacts.full_importance),
        ("optimized", artifacts.optimized_importance),
    ):
        write_importance_csv(ranking, target(f"importance_{key}.csv"))
    for name, tc in artifacts.trends.items():
        write_trend_comparison_csv(tc, target(f"trend_{name}.csv"))
    return written
