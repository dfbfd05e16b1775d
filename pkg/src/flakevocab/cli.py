"""Command-line interface.

Subcommands: ``label``, ``evaluate``, ``train``, ``predict``, ``explain``.
Exit status is 0 on success, 1 for usage errors and 2 for data errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .evaluate import (
    EvalConfig,
    EvaluationError,
    derive_seed,
    prepare_corpus,
    render_results_table,
    render_vocabulary_report,
    single_token_analysis,
    vocabulary_report,
)
from .features import FeatureError, Vocabulary, build_features, fit_vocabulary, normalize_scheme
from .ingest import (
    FLAKY,
    IngestError,
    RERUN,
    LabeledTest,
    assemble_dataset,
    build_stats,
    filter_global_issues,
    label_records,
    parse_executions,
    read_dataset,
    read_source_map,
    undersample,
    write_dataset,
)
from .lexer import PROFILES, LexError, Lexer, load_keywords
from .models import ModelError, predict_proba, train_model
from .models.io import ModelBundle, ModelFileError
from .models.io import load as load_model
from .models.io import save as save_model

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DATA_ERRORS = (IngestError, EvaluationError, FeatureError, ModelError, ModelFileError, LexError, OSError)

SCHEME_CHOICES = ("bow", "tfidf", "tfidfc-rf")
MODEL_CHOICES = ("forest", "gbt", "randomized", "only-true", "only-false")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def _lexer(args) -> Lexer:
    keywords = load_keywords(args.keywords) if args.keywords else None
    return Lexer(PROFILES[args.language](keywords))


def _common_config(args) -> dict:
    return {
        "seed": args.seed,
        "language": args.language,
        "keywords": args.keywords,
    }


def cmd_label(args) -> int:
    with open(args.executions, "rb") as fh:
        records = parse_executions(fh)
    mode = "mass" if args.mode == "mass" else RERUN
    outcomes = label_records(records, mode)
    texts, paths = read_source_map(args.sources)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    rel = {t: os.path.relpath(p, out.parent.resolve()) for t, p in paths.items()}
    dataset = assemble_dataset(outcomes, texts, rel)
    write_dataset(dataset, out)

    meta = {
        "command": "label",
        "config": {"mode": args.mode, "executions": args.executions, "sources": args.sources, **_common_config(args)},
        "n_records": len(records),
        "n_tests": len(dataset),
        "n_flaky": sum(t.is_flaky for t in dataset),
        "n_always_failing": sum(t.always_failing for t in dataset),
    }
    if mode == RERUN:
        stats = build_stats(records)
        kept = filter_global_issues(stats)
        meta["dropped_builds"] = sorted(s.build_id for s in stats if s.build_id not in kept)
    _dump_json(meta, out.with_name(out.name + ".meta.json"))
    print(f"labeled {meta['n_tests']} tests ({meta['n_flaky']} flaky) -> {out}")
    return EXIT_OK


def _load_labeled(args) -> tuple[list[LabeledTest], Lexer, list]:
    dataset = read_dataset(args.dataset)
    lexer = _lexer(args)
    docs = prepare_corpus(dataset, lexer)
    return dataset, lexer, docs


def cmd_evaluate(args) -> int:
    from .evaluate import cross_validate

    dataset, lexer, docs = _load_labeled(args)
    name = Path(args.dataset).stem
    reports = []
    for model in args.model:
        for scheme in args.scheme:
            config = EvalConfig(
                k=args.k, seed=args.seed, scheme=scheme, model=model,
                undersample=args.undersample, threads=args.threads,
            )
            reports.append(cross_validate(dataset, config, docs, lexer, name))
    table = render_results_table(reports)
    doc = {
        "command": "evaluate",
        "config": {
            "dataset": args.dataset, "k": args.k, "undersample": args.undersample,
            "schemes": args.scheme, "models": args.model, **_common_config(args),
        },
        "runs": [r.to_dict() for r in reports],
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(doc, out / "report.json")
        (out / "report.txt").write_text(table, encoding="utf-8")
    sys.stdout.write(table)
    return EXIT_OK


def cmd_train(args) -> int:
    dataset, lexer, docs = _load_labeled(args)
    if args.undersample != "off":
        kept = {id(t) for t in undersample(dataset, derive_seed(args.seed, 0))}
        pairs = [(t, d) for t, d in zip(dataset, docs) if id(t) in kept]
        dataset, docs = [t for t, _ in pairs], [d for _, d in pairs]
    scheme = normalize_scheme(args.scheme)
    labels = [t.is_flaky for t in dataset]
    vocab = fit_vocabulary(list(zip(docs, labels)), scheme=scheme)
    keywords = list(lexer.profile.keywords)
    X = build_features(docs, vocab, scheme, keywords)
    model = train_model(args.model, X, labels, args.seed, args.threads)
    config = {
        "dataset": args.dataset, "scheme": scheme, "model": args.model,
        "undersample": args.undersample, "n_train": len(dataset), **_common_config(args),
    }
    bundle = ModelBundle(model, scheme, vocab.dumps(), keywords, args.language, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(bundle, out)
    print(f"trained {args.model} on {len(dataset)} tests ({len(vocab)} terms) -> {out}")
    return EXIT_OK


def _predict_inputs(paths: list[str]) -> tuple[list[str], list[str]]:
    ids, texts = [], []
    for p in paths:
        if p.endswith(".csv"):
            t, _ = read_source_map(p)
            for test_id in sorted(t):
                ids.append(test_id)
                texts.append(t[test_id])
        else:
            ids.append(p)
            texts.append(Path(p).read_text(encoding="utf-8"))
    return ids, texts


def cmd_predict(args) -> int:
    from .features import prepare_document

    bundle = load_model(args.model_file)
    lexer = Lexer(PROFILES[bundle.language](bundle.keywords))
    vocab = Vocabulary.loads(bundle.vocabulary)
    ids, texts = _predict_inputs(args.inputs)
    docs = []
    for test_id, text in zip(ids, texts):
        try:
            docs.append(prepare_document(text, lexer))
        except LexError as exc:
            raise EvaluationError(f"cannot tokenize {test_id!r}: {exc}") from None
    X = build_features(docs, vocab, bundle.scheme, bundle.keywords)
    proba = predict_proba(bundle.model, X)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["test_id", "probability", "label"])
    for test_id, p in zip(ids, proba):
        writer.writerow([test_id, repr(float(p)), FLAKY if p >= 0.5 else "non-flaky"])
    if args.out:
        Path(args.out).write_text(buf.getvalue(), encoding="utf-8")
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_explain(args) -> int:
    dataset, lexer, docs = _load_labeled(args)
    balance = args.undersample != "off"
    report = vocabulary_report(dataset, args.top_k, args.seed, balance, docs, lexer)
    doc = {
        "command": "explain",
        "config": {
            "dataset": args.dataset, "top_k": args.top_k, "token": args.token,
            "undersample": args.undersample, **_common_config(args),
        },
        "vocabulary": report.to_dict(),
    }
    text = render_vocabulary_report(report)
    if args.token is not None:
        analysis = single_token_analysis(args.token, dataset, args.seed, balance, docs, lexer)
        doc["token"] = analysis.to_dict()
        if analysis.absent:
            text += f"\ntoken {args.token!r}: absent\n"
        else:
            text += (
                f"\ntoken {args.token!r}: flaky {analysis.flaky_containing}/{analysis.n_flaky}"
                f" ({analysis.flaky_fraction:.1%}), non-flaky {analysis.nonflaky_containing}/{analysis.n_nonflaky}"
                f" ({analysis.nonflaky_fraction:.1%}), rule precision {analysis.precision:.3f}\n"
            )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _dump_json(doc, out / "vocabulary.json")
        (out / "vocabulary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def _positive_int(value: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="root seed for every random choice (default 0)")
    common.add_argument("--threads", type=_positive_int, default=1, help="worker threads for forest training")
    common.add_argument("--keywords", help="keyword list file, one keyword per line")
    common.add_argument("--language", choices=sorted(PROFILES), default="python", help="lexical conventions")

    parser = _Parser(prog="flakevocab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("label", parents=[common], help="label tests from execution histories")
    p.add_argument("executions", help="JSON Lines execution records")
    p.add_argument("--mode", choices=("mass", "rerun"), required=True)
    p.add_argument("--sources", required=True, help="CSV with test_id,source_path")
    p.add_argument("--out", required=True, help="dataset table to write")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("evaluate", parents=[common], help="k-fold cross-validation")
    p.add_argument("dataset")
    p.add_argument("--scheme", nargs="+", choices=SCHEME_CHOICES, default=["bow"])
    p.add_argument("--model", nargs="+", choices=MODEL_CHOICES, default=["forest"])
    p.add_argument("--k", type=_positive_int, default=5)
    p.add_argument("--undersample", choices=("train-only", "pipeline", "off"), default="train-only")
    p.add_argument("--out", help="directory for report.json and report.txt")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("train", parents=[common], help="train a model on a whole dataset")
    p.add_argument("dataset")
    p.add_argument("--scheme", choices=SCHEME_CHOICES, default="bow")
    p.add_argument("--model", choices=MODEL_CHOICES, default="forest")
    p.add_argument("--undersample", choices=("train-only", "pipeline", "off"), default="pipeline")
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", parents=[common], help="score tests with a trained model")
    p.add_argument("inputs", nargs="+", help="source files or CSV tables with test_id,source_path")
    p.add_argument("--model-file", required=True)
    p.add_argument("--out", help="CSV to write (default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("explain", parents=[common], help="rank tokens by information gain")
    p.add_argument("dataset")
    p.add_argument("--top-k", type=_positive_int, default=10)
    p.add_argument("--token", help="also report occurrences of this token")
    p.add_argument("--undersample", choices=("pipeline", "off"), default="pipeline")
    p.add_argument("--out", help="directory for vocabulary.json and vocabulary.txt")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help and --version exit 0, parse errors exit 1
        return exc.code
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"flakevocab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
