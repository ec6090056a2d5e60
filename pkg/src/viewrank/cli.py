"""Command-line entry point.

Every command reads and writes files under ``--dir`` (default: the current
directory) using fixed default names, so the commands chain without extra
arguments::

    viewrank synth --seed 42
    viewrank ingest
    viewrank features
    viewrank train --kind forest
    viewrank rank
    viewrank eval
    viewrank pagerank

Options may also come from a ``key = value`` file given with ``--config``;
command-line flags win.  CSV and JSONL outputs get a ``<name>.meta.json``
sidecar recording the command, arguments, seed and version; JSON outputs
embed the same block under ``"metadata"``.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dataset import load_dataset
from .errors import ViewrankError
from .evaluation import (
    pagerank,
    pagerank_rank_correlation,
    read_edges_csv,
    run_benchmark,
)
from .features import FEATURE_NAMES, FeatureTable, read_feature_csv, write_feature_csv
from .models import EstimatorSpec, ForestConfig
from .pipeline import InfluenceModel, ModelConfig
from .synth import SynthConfig, generate, read_influence_csv

log = logging.getLogger("viewrank")

DEFAULTS = {
    "posts": "posts.jsonl",
    "users": "users.csv",
    "edges": "edges.csv",
    "ground_truth": "ground_truth.csv",
    "aggregates": "aggregates.csv",
    "features": "features.csv",
    "model": "model.json",
    "ranking": "ranking.csv",
    "report": "report.json",
    "report_text": "report.txt",
    "scores": "pagerank.csv",
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _path(args, key, must_exist=False):
    value = getattr(args, key, None) or DEFAULTS[key]
    p = Path(value)
    if not p.is_absolute():
        p = Path(args.dir) / p
    if must_exist and not p.is_file():
        raise UsageError(f"input file not found: {p}")
    return p


def _metadata(args):
    skip = {"func", "config", "dir", "verbose", "threads", "command"}
    options = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"command": args.command, "seed": args.seed, "version": __version__, "options": options}


def _write_sidecar(path, args, **extra):
    meta = {**_metadata(args), **extra}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")


def _write_json(path, payload):
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def _dataset(args):
    posts = _path(args, "posts", must_exist=True)
    users = _path(args, "users", must_exist=True)
    return load_dataset(posts, users, min_posts=args.min_posts, z_threshold=args.z_threshold)


def _forest_config(args):
    return ForestConfig(
        n_trees=args.n_trees,
        min_samples_leaf=args.min_samples_leaf,
        max_features_per_split=args.max_features,
        bootstrap=not args.no_bootstrap,
        seed=args.seed,
    )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(args):
    cfg = SynthConfig(n_users=args.n_users, seed=args.seed)
    data = generate(cfg)
    paths = data.write(args.dir, names={k: getattr(args, k) or DEFAULTS[k]
                                        for k in ("posts", "users", "edges", "ground_truth")})
    for p in paths.values():
        _write_sidecar(p, args)
    log.info("wrote %d posts for %d users to %s", len(data.posts), cfg.n_users, args.dir)


def cmd_ingest(args):
    ds = _dataset(args)
    out = _path(args, "aggregates")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "followers", "post_count_total", "post_count_retained", "influence"])
        for u in ds.users:
            w.writerow([u.user_id, u.followers, u.post_count_total, len(u.posts), repr(u.influence)])
    _write_sidecar(out, args, n_users=len(ds))
    log.info("%d users retained", len(ds))


def cmd_features(args):
    ds = _dataset(args)
    table = FeatureTable.from_dataset(ds)
    out = _path(args, "features")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        write_feature_csv(table, fh)
    _write_sidecar(out, args, n_users=len(table))


def _model_config(args):
    spec = EstimatorSpec(args.kind, alpha=args.alpha, forest=_forest_config(args))
    features = None
    if args.feature_set:
        features = tuple(f.strip() for f in args.feature_set.split(",") if f.strip())
    return ModelConfig(
        name=args.name or f"{args.kind}",
        estimator=spec,
        features=features,
        rfe_target=args.rfe,
        multi=args.multi,
        k_clusters=args.k_clusters,
        transform_scales=not args.no_transform,
        log_target=args.log_target,
        seed=args.seed,
    )


def cmd_train(args):
    with open(_path(args, "features", must_exist=True), encoding="utf-8", newline="") as fh:
        table = read_feature_csv(fh)
    model = _model_config(args).fit(table, threads=args.threads)
    out = _path(args, "model")
    _write_json(out, {"metadata": _metadata(args), "model": model.to_dict()})
    log.info("trained %s on %d users using %s", args.kind, len(table),
             ",".join(FEATURE_NAMES[c] for c in model.columns))


def cmd_rank(args):
    with open(_path(args, "model", must_exist=True), encoding="utf-8") as fh:
        model = InfluenceModel.from_dict(json.load(fh)["model"])
    with open(_path(args, "features", must_exist=True), encoding="utf-8", newline="") as fh:
        table = read_feature_csv(fh)
    pred = model.predict(table)
    order = sorted(range(len(table)), key=lambda i: (-pred[i], table.user_ids[i]))
    out = _path(args, "ranking")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "user_id", "predicted_influence"])
        for rank, i in enumerate(order, start=1):
            w.writerow([rank, table.user_ids[i], repr(float(pred[i]))])
    _write_sidecar(out, args)


def cmd_eval(args):
    edges_path = _path(args, "edges", must_exist=True) if args.edges else None
    ds = _dataset(args)
    report = run_benchmark(
        ds, seed=args.seed, k_folds=args.folds, k_clusters=args.k_clusters, alpha=args.alpha,
        forest=_forest_config(args), threads=args.threads, log=log.info,
    )
    if edges_path is not None:
        with open(edges_path, encoding="utf-8", newline="") as fh:
            scores = pagerank(read_edges_csv(fh))
        influence = {u.user_id: u.influence for u in ds.users}
        report.comparators.append({
            "name": "PageRank",
            "rs": pagerank_rank_correlation(scores, influence),
            "note": "standard weighted PageRank on the commenter graph",
        })
    report.metadata.update({"command": args.command, "options": _metadata(args)["options"]})
    out = _path(args, "report")
    Path(out).write_text(report.to_json())
    text_out = _path(args, "report_text")
    Path(text_out).write_text(report.to_text())
    sys.stdout.write(report.to_text())


def cmd_pagerank(args):
    with open(_path(args, "edges", must_exist=True), encoding="utf-8", newline="") as fh:
        edges = read_edges_csv(fh)
    scores = pagerank(edges, damping=args.damping)
    out = _path(args, "scores")
    with open(out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["user_id", "score"])
        for uid in sorted(scores):
            w.writerow([uid, repr(scores[uid])])
    extra = {}
    gt = _path(args, "ground_truth")
    if args.ground_truth or gt.is_file():
        with open(_path(args, "ground_truth", must_exist=True), encoding="utf-8", newline="") as fh:
            influence = read_influence_csv(fh)
        rs = pagerank_rank_correlation(scores, influence)
        extra["spearman"] = rs
        sys.stdout.write(f"r_s = {rs:.6f}\n")
    _write_sidecar(out, args, **extra)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_filter_opts(p):
    p.add_argument("--min-posts", type=int, default=10, help="minimum posts per user")
    p.add_argument("--z-threshold", type=float, default=2.0, help="outlier z-score threshold")


def _add_model_opts(p, with_kind=True):
    if with_kind:
        p.add_argument("--kind", choices=("ridge", "forest"), default="ridge")
        p.add_argument("--name", default=None, help="label stored with the model")
        p.add_argument("--feature-set", default=None,
                       help="comma-separated feature names (default: all eight)")
        p.add_argument("--rfe", type=int, default=None, help="keep this many features via RFE")
        p.add_argument("--multi", action="store_true", help="segment users by followers first")
        p.add_argument("--no-transform", action="store_true", help="skip the x/ln x transform")
        p.add_argument("--log-target", action="store_true", help="regress on log-scaled influence")
    p.add_argument("--alpha", type=float, default=1.0, help="ridge l2 strength")
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--min-samples-leaf", type=int, default=5)
    p.add_argument("--max-features", type=int, default=None, help="features tried per split")
    p.add_argument("--no-bootstrap", action="store_true")
    p.add_argument("--k-clusters", type=int, default=3)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dir", default=".", help="working directory for default file names")
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--config", default=None, help="key = value option file")
    common.add_argument("--threads", type=int, default=1, help="worker threads for forest fitting")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="viewrank", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--n-users", type=int, default=5000)
    for key in ("posts", "users", "edges", "ground_truth"):
        p.add_argument(f"--{key.replace('_', '-')}", default=None)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="filter posts and compute influence")
    p.add_argument("--posts")
    p.add_argument("--users")
    p.add_argument("--aggregates")
    _add_filter_opts(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("features", parents=[common], help="write the per-user feature matrix")
    p.add_argument("--posts")
    p.add_argument("--users")
    p.add_argument("--features")
    _add_filter_opts(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", parents=[common], help="fit one model")
    p.add_argument("--features")
    p.add_argument("--model")
    _add_model_opts(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("rank", parents=[common], help="rank users with a trained model")
    p.add_argument("--model")
    p.add_argument("--features")
    p.add_argument("--ranking")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("eval", parents=[common], help="cross-validated benchmark table")
    p.add_argument("--posts")
    p.add_argument("--users")
    p.add_argument("--edges", default=None, help="commenter edges CSV for the PageRank comparator")
    p.add_argument("--report")
    p.add_argument("--report-text")
    p.add_argument("--folds", type=int, default=5)
    _add_filter_opts(p)
    _add_model_opts(p, with_kind=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pagerank", parents=[common], help="PageRank over the commenter graph")
    p.add_argument("--edges")
    p.add_argument("--ground-truth", default=None, help="user_id,influence CSV to correlate against")
    p.add_argument("--scores")
    p.add_argument("--damping", type=float, default=0.85)
    p.set_defaults(func=cmd_pagerank)
    return parser


def _read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _apply_config_file(parser, argv):
    """Re-parse with file values as defaults so explicit flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = _read_config_file(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"unknown option in {args.config}: {key}")
        if action.nargs == 0:  # store_true flags
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(raw) if action.type else raw
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
    except UsageError as exc:
        print(f"viewrank: usage error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"viewrank: usage error: {exc}", file=sys.stderr)
        return 2
    except (ViewrankError, OSError, KeyError) as exc:
        msg = " ".join(str(exc).split())
        print(f"viewrank: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
