"""Command line front end.

Subcommands mirror the pipeline stages so partial runs compose:

    ingest       validate + normalize the scholar CSV
    describe     indicator table, descriptive stats, correlations, VIF
    fit          logistic fit of one feature subset on the train split
    select       subset search (exhaustive or backward stepwise)
    evaluate     confusion matrix, metrics and ROC on the validation split
    attribute    per-row attributions, importance ranking, trend curves
    communities  co-authorship graph communities by divisive clustering
    report       full pipeline, one JSON report plus CSV side files

Exit codes: 0 success, 2 configuration, 3 data, 4 numerical,
5 internal invariant breach.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .attribution import linear_shap, lowess, mean_abs_importance
from .errors import ConfigError, PipelineError, StratLogitError
from .evaluate import (
    ConfusionMatrix,
    classify,
    make_split,
    metrics,
    predict_prob,
    roc_auc,
)
from .indicators import FEATURE_COLUMNS, CompositeWeights, build_feature_matrix
from .ingest import filter_eligible, parse_dataset, write_dataset_csv
from .logit import DesignMatrix, fit_logistic, inference_table, verify_fit_identities
from .model_select import (
    backward_stepwise,
    comparison_to_dicts,
    enumerate_subsets,
    fit_all,
    write_comparison_csv,
)
from .network import (
    build_graph,
    girvan_newman,
    read_edge_list,
    write_dendrogram_json,
    write_partition_csv,
)
from .pipeline import (
    RunConfig,
    _model_summary,
    run_pipeline,
    write_confusion_csv,
    write_correlation_csv,
    write_descriptive_csv,
    write_importance_csv,
    write_inference_csv,
    write_metrics_csv,
    write_report_files,
    write_roc_csv,
    write_shap_values_csv,
    write_trend_csv,
    write_vif_csv,
)
from .stats_core import describe, pearson_matrix, vif
from .indicators import write_feature_matrix_csv


def _add_input_args(p):
    p.add_argument("--input", required=True, help="scholar activity CSV")
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default ,)")


def _add_weight_args(p):
    p.add_argument("--alpha", type=float, default=1.0, help="composite weight of post density")
    p.add_argument("--beta", type=float, default=1.0, help="composite weight of followers/followed")


def _add_model_args(p):
    _add_weight_args(p)
    p.add_argument("--train-frac", type=float, default=0.7, help="training fraction (default 0.7)")
    p.add_argument("--seed", type=int, default=0, help="split seed (default 0)")
    p.add_argument("--max-iter", type=int, default=1000, help="solver iteration cap")
    p.add_argument("--tol", type=float, default=1e-8, help="gradient convergence tolerance")


def _add_out_arg(p):
    p.add_argument("--out", required=True, help="output directory")


def _add_features_arg(p):
    p.add_argument(
        "--features",
        default=None,
        help=f"comma separated subset of {','.join(FEATURE_COLUMNS)} (default: all)",
    )


def _parse_features(raw):
    if raw is None:
        return tuple(FEATURE_COLUMNS)
    names = tuple(s.strip() for s in raw.split(",") if s.strip())
    if not names:
        raise ConfigError("--features must name at least one feature")
    unknown = [n for n in names if n not in FEATURE_COLUMNS]
    if unknown:
        raise ConfigError(
            f"unknown features {unknown}; valid names: {', '.join(FEATURE_COLUMNS)}"
        )
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate features in {names}")
    return names


def _prepare(args):
    """Shared front half: parse, screen, derive features, split."""
    raw = parse_dataset(args.input, delimiter=args.delimiter)
    ds = filter_eligible(raw)
    fm = build_feature_matrix(ds, CompositeWeights(args.alpha, args.beta))
    split = make_split(fm.n_rows, args.train_frac, args.seed)
    return raw, ds, fm, split


def _fit_subset(fm, split, features, args):
    design = DesignMatrix.from_features(
        fm, features, rows=np.asarray(split.train_indices, dtype=int)
    )
    return fit_logistic(design, max_iter=args.max_iter, tol=args.tol)


def _out(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _dump_json(payload, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2, allow_nan=False)
        handle.write("\n")


def cmd_ingest(args) -> int:
    raw = parse_dataset(args.input, delimiter=args.delimiter)
    kept = raw if args.keep_ineligible else filter_eligible(raw)
    path = _out(args, "normalized.csv")
    write_dataset_csv(kept, path)
    print(f"read {raw.provenance.rows_read} rows, kept {len(kept.records)}, wrote {path}")
    return 0


def cmd_describe(args) -> int:
    raw = parse_dataset(args.input, delimiter=args.delimiter)
    ds = filter_eligible(raw)
    fm = build_feature_matrix(ds, CompositeWeights(args.alpha, args.beta))
    stats = [
        {"variable": name, **describe(fm.column(name)).__dict__}
        for name in fm.column_names
    ]
    corr = pearson_matrix(fm)
    vifs = vif(fm)
    write_feature_matrix_csv(fm, _out(args, "features.csv"))
    write_descriptive_csv(stats, _out(args, "descriptive_stats.csv"))
    write_correlation_csv(corr.names, corr.r, _out(args, "correlation.csv"))
    write_vif_csv(fm.column_names, vifs, _out(args, "vif.csv"))
    print(
        f"described {len(fm.column_names)} variables over {fm.n_rows} rows "
        f"(mean VIF {float(np.mean(vifs))!r})"
    )
    return 0


def cmd_fit(args) -> int:
    features = _parse_features(args.features)
    _, _, fm, split = _prepare(args)
    fit = _fit_subset(fm, split, features, args)
    verify_fit_identities(fit)
    write_inference_csv(inference_table(fit), _out(args, "inference.csv"))
    _dump_json(_model_summary(fit, "fit"), _out(args, "fit.json"))
    print(
        f"fit {'+'.join(features)} on {fit.n_obs} rows: converged={fit.converged} "
        f"iterations={fit.iterations} loglik={fit.log_lik!r} aic={fit.aic!r}"
    )
    return 0


def cmd_select(args) -> int:
    _, _, fm, split = _prepare(args)
    if args.select == "enumerate":
        specs = enumerate_subsets(fm.column_names)
        table = fit_all(fm, specs, split, max_iter=args.max_iter, tol=args.tol)
        ordered = table.sorted_by_aic()
        best = table.best_row()
    else:
        result = backward_stepwise(fm, split, max_iter=args.max_iter, tol=args.tol)
        ordered = result.path
        best = result.path.rows[-1]
    write_comparison_csv(ordered, _out(args, "comparison.csv"))
    _dump_json(
        {
            "mode": args.select,
            "n_models": len(ordered.rows),
            "best": {
                "model_id": best.model_id,
                "features": list(best.spec.features),
                "aic": best.aic,
                "bic": best.bic,
            },
            "table": comparison_to_dicts(ordered),
        },
        _out(args, "selection.json"),
    )
    print(
        f"searched {len(ordered.rows)} models ({args.select}); "
        f"best {'+'.join(best.spec.features)} aic={best.aic!r}"
    )
    return 0


def cmd_evaluate(args) -> int:
    features = _parse_features(args.features)
    _, _, fm, split = _prepare(args)
    fit = _fit_subset(fm, split, features, args)
    val_idx = np.asarray(split.val_indices, dtype=int)
    block = np.column_stack([fm.column(name)[val_idx] for name in features])
    probs = predict_prob(fit, block)
    y_val = fm.target[val_idx]
    cm = ConfusionMatrix.from_predictions(y_val, classify(probs))
    mets = metrics(cm)
    curve = roc_auc(probs, y_val)
    write_confusion_csv(cm, _out(args, "confusion.csv"))
    write_metrics_csv(mets, _out(args, "metrics.csv"))
    write_roc_csv(curve, _out(args, "roc.csv"))
    print(
        f"evaluated {'+'.join(features)} on {split.n_val} held-out rows: "
        f"accuracy={mets.accuracy!r} auc={curve.auc!r}"
    )
    return 0


def cmd_attribute(args) -> int:
    features = _parse_features(args.features)
    _, _, fm, split = _prepare(args)
    fit = _fit_subset(fm, split, features, args)
    train_idx = np.asarray(split.train_indices, dtype=int)
    cols = [fm.column_names.index(name) for name in features]
    background = np.mean(fm.values[np.ix_(train_idx, cols)], axis=0)
    shap = linear_shap(fit, fm.values[:, cols], background, model_id="attributed")
    ranking = mean_abs_importance(shap)
    write_shap_values_csv(shap, fm.row_ids, _out(args, "shap_values.csv"))
    write_importance_csv(ranking, _out(args, "importance.csv"))
    for name in features:
        curve = lowess(
            fm.column(name),
            shap.column(name),
            frac=args.lowess_frac,
            feature=name,
            model_id="attributed",
        )
        write_trend_csv(curve, _out(args, f"trend_{name}.csv"))
    top = ranking.entries[0]
    print(
        f"attributed {len(features)} features over {fm.n_rows} rows; "
        f"top importance {top[0]}={top[1]!r}"
    )
    return 0


def cmd_communities(args) -> int:
    edges = read_edge_list(args.coauthor_edges, delimiter=args.delimiter)
    graph = build_graph(edges)
    dendrogram, best = girvan_newman(graph, target_communities=args.target_communities)
    write_partition_csv(best, _out(args, "partition.csv"))
    write_dendrogram_json(dendrogram, _out(args, "dendrogram.json"))
    print(
        f"graph: {graph.n_nodes} nodes, {graph.n_edges} edges "
        f"({graph.self_loops_dropped} self-loops dropped); "
        f"best partition: {best.n_communities} communities, "
        f"modularity={best.modularity!r}"
    )
    return 0


def cmd_report(args) -> int:
    cfg = RunConfig(
        input_path=args.input,
        out_dir=args.out,
        coauthor_edges=None,
        alpha=args.alpha,
        beta=args.beta,
        train_fraction=args.train_frac,
        seed=args.seed,
        max_iter=args.max_iter,
        tol=args.tol,
        selection=args.select,
        lowess_frac=args.lowess_frac,
        delimiter=args.delimiter,
    )
    report = run_pipeline(cfg)
    written = write_report_files(report, args.out)
    best = report.selection["best"]
    print(
        f"wrote {len(written)} files to {args.out}; best model "
        f"{'+'.join(best['features'])} aic={best['aic']!r}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stratlogit",
        description=__doc__.split("\n\n")[0],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize the scholar CSV")
    _add_input_args(p)
    _add_out_arg(p)
    p.add_argument(
        "--keep-ineligible",
        action="store_true",
        help="keep records failing the eligibility screens",
    )
    p.set_defaults(handler=cmd_ingest)

    p = sub.add_parser("describe", help="indicator stats, correlations and VIF")
    _add_input_args(p)
    _add_weight_args(p)
    _add_out_arg(p)
    p.set_defaults(handler=cmd_describe)

    p = sub.add_parser("fit", help="fit one logistic model on the training split")
    _add_input_args(p)
    _add_model_args(p)
    _add_features_arg(p)
    _add_out_arg(p)
    p.set_defaults(handler=cmd_fit)

    p = sub.add_parser("select", help="search feature subsets by AIC")
    _add_input_args(p)
    _add_model_args(p)
    p.add_argument(
        "--select",
        choices=["enumerate", "stepwise"],
        default="enumerate",
        help="search strategy (default enumerate)",
    )
    _add_out_arg(p)
    p.set_defaults(handler=cmd_select)

    p = sub.add_parser("evaluate", help="validation metrics and ROC for one model")
    _add_input_args(p)
    _add_model_args(p)
    _add_features_arg(p)
    _add_out_arg(p)
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("attribute", help="additive attributions and trend curves")
    _add_input_args(p)
    _add_model_args(p)
    _add_features_arg(p)
    p.add_argument(
        "--lowess-frac",
        type=float,
        default=2.0 / 3.0,
        help="LOWESS neighbourhood fraction (default 2/3)",
    )
    _add_out_arg(p)
    p.set_defaults(handler=cmd_attribute)

    p = sub.add_parser("communities", help="divisive communities of the co-author graph")
    p.add_argument("--coauthor-edges", required=True, help="edge list CSV")
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default ,)")
    p.add_argument(
        "--target-communities",
        type=int,
        default=None,
        help="stop once this many components exist (default: run to exhaustion)",
    )
    _add_out_arg(p)
    p.set_defaults(handler=cmd_communities)

    p = sub.add_parser("report", help="full pipeline with JSON + CSV emission")
    _add_input_args(p)
    _add_model_args(p)
    p.add_argument(
        "--select",
        choices=["enumerate", "stepwise"],
        default="enumerate",
        help="search strategy (default enumerate)",
    )
    p.add_argument(
        "--lowess-frac",
        type=float,
        default=2.0 / 3.0,
        help="LOWESS neighbourhood fraction (default 2/3)",
    )
    _add_out_arg(p)
    p.set_defaults(handler=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except PipelineError as exc:
        print(
            f"error[{exc.code}] stage={exc.stage} "
            f"partial_report={str(exc.partial_report).lower()}: {exc.cause}",
            file=sys.stderr,
        )
        return exc.exit_code
    except StratLogitError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
