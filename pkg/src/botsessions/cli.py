"""Single command-line entry point wiring all modules into reproducible
pipelines. Every output file gets a sibling ``<name>.manifest.json`` written
atomically, recording the subcommand, arguments, config hash, seed, paths,
and wall-clock duration.

Exit codes: 0 success, 1 validation/configuration error, 2 I/O error.
Diagnostics go to stderr; data goes to files only.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import tempfile
import time

from . import __version__
from .errors import BotSessionsError
from .features import (
    FeatureSet,
    build_matrix,
    project_matrix,
    read_matrix_csv,
    write_matrix_csv,
)
from .ingest import (
    label_counts,
    label_users,
    quantile_threshold,
    read_labels_csv,
    read_scores,
    read_tweets,
    write_labels_csv,
)
from .models import (
    KIND_ALIASES,
    load_model,
    make_config,
    predict_proba_batch,
    save_model,
    train_model,
)
from .evaluation import ablation, cross_validate, threshold_sweep_tpr
from .sessionize import (
    SessionizerConfig,
    group_by_user,
    read_sessionized,
    sessionize_user,
    sessionized_to_json,
)
from .trends import Measure, filter_sessions, per_position_series
from .synth import GeneratorConfig, generate_corpus, load_config, write_corpus


class _UsageError(BotSessionsError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _ManifestWriter:
    def __init__(self, subcommand: str, args: argparse.Namespace):
        self.subcommand = subcommand
        self.argv = sys.argv[1:]
        self.args = {
            key: value
            for key, value in sorted(vars(args).items())
            if key != "func" and not key.startswith("_")
        }
        self.t0 = time.monotonic()

    def write(self, output_path: str, inputs: list[str], outputs: list[str], seed) -> None:
        canon = json.dumps(self.args, sort_keys=True, default=str)
        manifest = {
            "artifact_version": __version__,
            "subcommand": self.subcommand,
            "argv": self.argv,
            "arguments": json.loads(canon),
            "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
            "seed": seed,
            "inputs": inputs,
            "outputs": outputs,
            "duration_seconds": round(time.monotonic() - self.t0, 6),
        }
        _atomic_write_text(
            output_path + ".manifest.json",
            json.dumps(manifest, indent=2, sort_keys=True) + "\n",
        )


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message, file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    manifest = _ManifestWriter("synth", args)
    cfg = load_config(args.config) if args.config else GeneratorConfig()
    seed = args.seed if args.seed is not None else cfg.seed
    corpus = generate_corpus(cfg, seed=seed)
    import io

    tweets_buf = io.StringIO()
    scores_buf = io.StringIO()
    write_corpus(corpus, tweets_buf, scores_buf)
    _atomic_write_text(args.out, tweets_buf.getvalue())
    _atomic_write_text(args.scores, scores_buf.getvalue())
    inputs = [args.config] if args.config else []
    manifest.write(args.out, inputs, [args.out, args.scores], seed)
    manifest.write(args.scores, inputs, [args.out, args.scores], seed)
    _say(args, f"synth: {len(corpus.tweets)} tweets, {len(corpus.labels)} users -> {args.out}")
    return 0


def cmd_sessionize(args) -> int:
    manifest = _ManifestWriter("sessionize", args)
    config = SessionizerConfig(gap_threshold_seconds=args.gap_minutes * 60)
    groups = group_by_user(read_tweets(args.infile))
    lines = []
    n_sessions = 0
    for user_tweets in groups.values():
        sessionized = sessionize_user(user_tweets, config)
        n_sessions += sessionized[-1].session_ordinal if sessionized else 0
        lines.extend(sessionized_to_json(st) for st in sessionized)
    _atomic_write_text(args.out, "".join(line + "\n" for line in lines))
    manifest.write(args.out, [args.infile], [args.out], None)
    _say(args, f"sessionize: {len(lines)} tweets, {n_sessions} sessions -> {args.out}")
    return 0


def cmd_label(args) -> int:
    manifest = _ManifestWriter("label", args)
    scores = read_scores(args.scores)
    bot_threshold = args.bot_threshold
    if args.top_fraction is not None:
        bot_threshold = quantile_threshold([s.bot_score for s in scores], args.top_fraction)
        _say(args, f"label: top-{args.top_fraction} bot threshold = {bot_threshold}")
    labels = label_users(scores, bot_threshold, args.human_threshold)
    import io

    buf = io.StringIO()
    write_labels_csv(labels, buf)
    _atomic_write_text(args.out, buf.getvalue())
    manifest.write(args.out, [args.scores], [args.out], None)
    _say(args, f"label: {label_counts(labels)} -> {args.out}")
    return 0


def cmd_features(args) -> int:
    manifest = _ManifestWriter("features", args)
    labels = read_labels_csv(args.labels)
    X, y, _ = build_matrix(read_sessionized(args.infile), labels)
    fs = FeatureSet(args.set)
    import io

    buf = io.StringIO()
    write_matrix_csv(X, y, fs, buf)
    _atomic_write_text(args.out, buf.getvalue())
    manifest.write(args.out, [args.infile, args.labels], [args.out], None)
    _say(args, f"features: {len(y)} rows ({fs.value}) -> {args.out}")
    return 0


def cmd_trends(args) -> int:
    manifest = _ManifestWriter("trends", args)
    tweets = list(read_sessionized(args.infile))
    kept = filter_sessions(tweets, args.min_len, args.max_len)
    if args.by_class:
        if not args.labels:
            raise _UsageError("--by-class requires --labels")
        labels = read_labels_csv(args.labels)
        classes = {
            "bot": [st for st in kept if labels.get(st.user_id) and labels[st.user_id].value == "bot"],
            "human": [st for st in kept if labels.get(st.user_id) and labels[st.user_id].value == "human"],
        }
    else:
        classes = {"all": kept}
    os.makedirs(args.out_dir, exist_ok=True)
    outputs = []
    for class_name, class_tweets in classes.items():
        for measure in Measure:
            series = per_position_series(
                class_tweets, measure, max_position=args.max_pos, class_name=class_name
            )
            path = os.path.join(args.out_dir, f"trend_{measure.value}_{class_name}.csv")
            rows = ["position,mean,sem,n"]
            rows += [f"{p.position},{p.mean!r},{p.sem!r},{p.n}" for p in series.points]
            _atomic_write_text(path, "\n".join(rows) + "\n")
            outputs.append(path)
            if series.omitted_positions:
                _say(args, f"trends: omitted positions {series.omitted_positions} in {path}")
    for path in outputs:
        manifest.write(path, [args.infile] + ([args.labels] if args.labels else []), outputs, None)
    _say(args, f"trends: wrote {len(outputs)} series under {args.out_dir}")
    return 0


def _model_overrides(args) -> dict:
    overrides = {"seed": args.seed}
    if args.n_estimators is not None:
        overrides["n_estimators"] = args.n_estimators
    if args.max_depth is not None:
        overrides["max_depth"] = args.max_depth
    if args.min_samples_split is not None:
        overrides["min_samples_split"] = args.min_samples_split
    if args.learning_rate is not None:
        overrides["learning_rate"] = args.learning_rate
    if args.k_neighbors is not None:
        overrides["k_neighbors"] = args.k_neighbors
    return overrides


def _load_projected(path: str, fs: FeatureSet):
    X, y, file_fs = read_matrix_csv(path)
    if file_fs is fs:
        return X, y
    if file_fs is FeatureSet.FULL:
        return project_matrix(X, fs), y
    raise _UsageError(
        f"feature file {path} holds the baseline set; cannot evaluate '{fs.value}'"
    )


def cmd_train(args) -> int:
    manifest = _ManifestWriter("train", args)
    fs = FeatureSet(args.features)
    X, y = _load_projected(args.infile, fs)
    config = make_config(args.model, **_model_overrides(args))
    model = train_model(X, y, config)
    save_model(model, args.out)
    manifest.write(args.out, [args.infile], [args.out], args.seed)
    _say(args, f"train: {config.kind} on {len(y)} rows ({fs.value}) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    manifest = _ManifestWriter("evaluate", args)
    fs = FeatureSet(args.features)
    X, y = _load_projected(args.infile, fs)
    config = make_config(args.model, **_model_overrides(args))
    report = cross_validate(X, y, config, fs, k=args.folds, seed=args.seed)
    _atomic_write_text(args.report, json.dumps(report.to_dict(), indent=2) + "\n")
    manifest.write(args.report, [args.infile], [args.report], args.seed)
    _say(args, f"evaluate: {config.kind}/{fs.value} mean AUC {report.mean_auc:.4f}")
    return 0


def cmd_compare(args) -> int:
    manifest = _ManifestWriter("compare", args)
    X, y = _load_projected(args.infile, FeatureSet.FULL)
    kinds = [k.strip() for k in args.models.split(",") if k.strip()]
    configs = [make_config(kind, **_model_overrides(args)) for kind in kinds]
    results = ablation(X, y, configs, k=args.folds, seed=args.seed)
    rows = ["model,full_auc,baseline_auc,delta"]
    for res in results:
        rows.append(
            f"{res.model_kind},{res.full.mean_auc!r},{res.baseline.mean_auc!r},{res.delta!r}"
        )
    _atomic_write_text(args.out, "\n".join(rows) + "\n")
    manifest.write(args.out, [args.infile], [args.out], args.seed)
    _say(args, f"compare: wrote {len(results)} paired results -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    manifest = _ManifestWriter("sweep", args)
    model = load_model(args.model)
    scores = {s.user_id: s.bot_score for s in read_scores(args.scores)}
    tweets = list(read_sessionized(args.infile))
    from .features import FeatureVector, featurize, project

    rows = []
    acct = []
    for st in tweets:
        if st.user_id not in scores:
            continue
        fv = featurize(st, 0)  # label is irrelevant for scoring
        rows.append(project(fv, FeatureSet.FULL))
        acct.append(scores[st.user_id])
    import numpy as np

    X = np.asarray(rows, dtype=np.float64)
    if model.n_features == len(FeatureSet.BASELINE.names):
        X = project_matrix(X, FeatureSet.BASELINE)
    grid = np.arange(args.theta_min, args.theta_max + 1e-9, args.theta_step)
    points = threshold_sweep_tpr(
        model, X, acct, grid.tolist(), decision_threshold=args.decision_threshold
    )
    out_rows = ["theta,n_pos,tpr"]
    for p in points:
        tpr = "NA" if p.tpr is None else repr(p.tpr)
        out_rows.append(f"{p.theta!r},{p.n_positive_tweets},{tpr}")
    _atomic_write_text(args.out, "\n".join(out_rows) + "\n")
    manifest.write(args.out, [args.model, args.infile, args.scores], [args.out], None)
    _say(args, f"sweep: {len(points)} grid points -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="accepted for interface stability; execution is deterministic "
                        "and independent of this value")
    p.add_argument("--quiet", action="store_true")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--n-estimators", type=int, default=None)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--min-samples-split", type=int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--k-neighbors", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="botsessions", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--config", default=None, help="generator config JSON")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="tweets JSONL output")
    p.add_argument("--scores", required=True, help="account scores JSONL output")
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sessionize", help="split each user's timeline into sessions")
    p.add_argument("--gap-minutes", type=int, default=60)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sessionize)

    p = sub.add_parser("label", help="threshold account scores into bot/human labels")
    p.add_argument("--scores", required=True)
    p.add_argument("--bot-threshold", type=float, default=0.53)
    p.add_argument("--human-threshold", type=float, default=0.4)
    p.add_argument("--top-fraction", type=float, default=None,
                   help="derive the bot threshold from the top fraction of scores")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("features", help="emit the per-tweet feature matrix CSV")
    p.add_argument("--set", choices=["full", "baseline"], default="full")
    p.add_argument("--in", dest="infile", required=True, help="sessionized JSONL")
    p.add_argument("--labels", required=True, help="labels CSV")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("trends", help="per-position trend CSVs with SEM bands")
    p.add_argument("--in", dest="infile", required=True, help="sessionized JSONL")
    p.add_argument("--labels", default=None)
    p.add_argument("--min-len", type=int, default=20)
    p.add_argument("--max-len", type=int, default=25)
    p.add_argument("--max-pos", type=int, default=20)
    p.add_argument("--by-class", action="store_true")
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_trends)

    p = sub.add_parser("train", help="train one classifier and serialize it")
    p.add_argument("--model", choices=sorted(KIND_ALIASES), required=True)
    p.add_argument("--features", choices=["full", "baseline"], default="full")
    p.add_argument("--in", dest="infile", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="model JSON")
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="stratified k-fold cross-validation report")
    p.add_argument("--model", choices=sorted(KIND_ALIASES), required=True)
    p.add_argument("--features", choices=["full", "baseline"], default="full")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--in", dest="infile", required=True, help="feature CSV")
    p.add_argument("--report", required=True, help="report JSON output")
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="paired full-vs-baseline ablation CSV")
    p.add_argument("--models", default="dt,et,rf,ab",
                   help="comma-separated kinds (dt,et,rf,ab,knn)")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--in", dest="infile", required=True, help="full feature CSV")
    p.add_argument("--out", required=True)
    _add_model_flags(p)
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="TPR vs account-score threshold CSV")
    p.add_argument("--model", required=True, help="trained model JSON")
    p.add_argument("--in", dest="infile", required=True, help="sessionized JSONL")
    p.add_argument("--scores", required=True, help="account scores JSONL")
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=1.0)
    p.add_argument("--theta-step", type=float, default=0.05)
    p.add_argument("--decision-threshold", type=float, default=0.5)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except BotSessionsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
