"""Cross-validation, metrics and information-gain vocabulary analysis."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .features import Document, build_features, doc_terms, fit_vocabulary, normalize_scheme, prepare_document
from .ingest import FLAKY, IngestError, LabeledTest, undersample
from .lexer import LexError, Lexer
from .models import ForestParams, GBTParams, predict, train_model

UNDERSAMPLE_MODES = ("train-only", "pipeline", "off")
CLASSES = ("flaky", "non_flaky")
METRICS = ("precision", "recall", "f1")


class EvaluationError(ValueError):
    pass


def derive_seed(seed: int, *keys: int) -> int:
    """Child seed for a sub-task, e.g. ``derive_seed(root, fold, 1)``."""
    return int(np.random.SeedSequence(seed, spawn_key=tuple(keys)).generate_state(1, np.uint64)[0] >> 1)


def kfold_split(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``range(n)`` with PCG64(seed) and cut it into ``k`` folds.

    The first ``n % k`` folds get one extra index. Indices inside a fold are
    sorted.
    """
    if k < 2:
        raise EvaluationError("k must be at least 2")
    if n < k:
        raise EvaluationError(f"cannot make {k} folds from {n} samples")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    sizes = [n // k + (1 if i < n % k else 0) for i in range(k)]
    folds, start = [], 0
    for size in sizes:
        folds.append(np.sort(perm[start:start + size]))
        start += size
    return folds


def _binary(values, name: str) -> np.ndarray:
    out = []
    for v in values:
        if v in (FLAKY, True, 1):
            out.append(True)
        elif v in ("non-flaky", False, 0):
            out.append(False)
        else:
            raise EvaluationError(f"{name} must be binary, got {v!r}")
    return np.asarray(out, dtype=bool)


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r else 0.0


def compute_metrics(predictions, truths) -> dict:
    """Per-class and macro precision, recall and F1; 0 wherever a ratio is 0/0."""
    pred = _binary(predictions, "predictions")
    true = _binary(truths, "truths")
    if pred.shape != true.shape:
        raise EvaluationError("predictions and truths differ in length")
    if pred.size == 0:
        raise EvaluationError("cannot score an empty prediction set")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    tn = int(np.sum(~pred & ~true))
    per_class = {}
    for name, (t_p, f_p, f_n) in (("flaky", (tp, fp, fn)), ("non_flaky", (tn, fn, fp))):
        p = _ratio(t_p, t_p + f_p)
        r = _ratio(t_p, t_p + f_n)
        per_class[name] = {"precision": p, "recall": r, "f1": _f1(p, r), "support": t_p + f_n}
    macro = {m: (per_class["flaky"][m] + per_class["non_flaky"][m]) / 2 for m in METRICS}
    return {
        "per_class": per_class,
        "macro": macro,
        "confusion": {"tp": tp, "fp": fp, "fn": fn, "tn": tn},
    }


@dataclass
class EvalConfig:
    k: int = 5
    seed: int = 0
    scheme: str = "bow"
    model: str = "forest"
    undersample: str = "train-only"
    threads: int = 1
    forest: ForestParams = field(default_factory=ForestParams)
    gbt: GBTParams = field(default_factory=GBTParams)
    lowercase: bool = True

    def __post_init__(self) -> None:
        self.scheme = normalize_scheme(self.scheme)
        self.model = self.model.replace("-", "_")
        if self.k < 2:
            raise EvaluationError("k must be at least 2")
        if self.undersample not in UNDERSAMPLE_MODES:
            raise EvaluationError(f"undersample must be one of {UNDERSAMPLE_MODES}")

    def model_params(self):
        return {"forest": self.forest, "gbt": self.gbt}.get(self.model)

    def to_dict(self) -> dict:
        # threads never changes results, so it stays out of reports
        d = asdict(self)
        del d["threads"]
        return d


@dataclass
class EvalReport:
    dataset: str
    scheme: str
    model: str
    config: dict
    per_fold: list[dict]

    def _mean_rounded(self, path: Sequence[str]) -> float:
        vals = []
        for fold in self.per_fold:
            v = fold
            for key in path:
                v = v[key]
            vals.append(round(v, 2))
        return round(sum(vals) / len(vals), 6)

    @property
    def macro(self) -> dict:
        return {m: self._mean_rounded(("macro", m)) for m in METRICS}

    @property
    def flaky(self) -> dict:
        return {m: self._mean_rounded(("per_class", "flaky", m)) for m in METRICS}

    @property
    def non_flaky(self) -> dict:
        return {m: self._mean_rounded(("per_class", "non_flaky", m)) for m in METRICS}

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "scheme": self.scheme,
            "model": self.model,
            "config": self.config,
            "per_fold": self.per_fold,
            "macro": self.macro,
            "per_class": {"flaky": self.flaky, "non_flaky": self.non_flaky},
        }


def prepare_corpus(dataset: Sequence[LabeledTest], lexer: Lexer | None = None) -> list[Document]:
    lexer = lexer or Lexer()
    docs = []
    for test in dataset:
        try:
            docs.append(prepare_document(test.source_text, lexer))
        except LexError as exc:
            raise EvaluationError(f"cannot tokenize test {test.test_id!r}: {exc}") from None
    return docs


def cross_validate(
    dataset: Sequence[LabeledTest],
    config: EvalConfig,
    docs: Sequence[Document] | None = None,
    lexer: Lexer | None = None,
    name: str = "dataset",
) -> EvalReport:
    """k-fold evaluation with all term statistics fitted on training folds only."""
    lexer = lexer or Lexer()
    dataset = list(dataset)
    docs = list(docs) if docs is not None else prepare_corpus(dataset, lexer)
    if len(docs) != len(dataset):
        raise EvaluationError("docs and dataset differ in length")
    if config.undersample == "pipeline":
        kept = undersample(dataset, derive_seed(config.seed, 0))
        keep_ids = {id(t) for t in kept}
        pairs = [(t, d) for t, d in zip(dataset, docs) if id(t) in keep_ids]
        dataset = [t for t, _ in pairs]
        docs = [d for _, d in pairs]

    keywords = list(lexer.profile.keywords)
    labels = np.asarray([t.is_flaky for t in dataset])
    minority = int(min(labels.sum(), labels.size - labels.sum()))
    if config.k > minority:
        raise EvaluationError(f"k={config.k} exceeds the minority class size {minority}")
    folds = kfold_split(len(dataset), config.k, derive_seed(config.seed, 1))
    per_fold = []
    for i, test_idx in enumerate(folds):
        mask = np.ones(len(dataset), dtype=bool)
        mask[test_idx] = False
        train_idx = np.flatnonzero(mask)
        if config.undersample == "train-only":
            try:
                kept = undersample([dataset[j] for j in train_idx], derive_seed(config.seed, 2, i))
            except IngestError:
                raise EvaluationError(f"degenerate fold {i}: training split has a single class") from None
            keep_ids = {id(t) for t in kept}
            train_idx = np.asarray([j for j in train_idx if id(dataset[j]) in keep_ids], dtype=np.int64)
        train_labels = labels[train_idx]
        if train_labels.all() or not train_labels.any():
            raise EvaluationError(f"degenerate fold {i}: training split has a single class")

        train_docs = [docs[j] for j in train_idx]
        vocab = fit_vocabulary(list(zip(train_docs, train_labels.tolist())), config.lowercase, config.scheme)
        X_train = build_features(train_docs, vocab, config.scheme, keywords)
        X_test = build_features([docs[j] for j in test_idx], vocab, config.scheme, keywords)
        model = train_model(
            config.model, X_train, train_labels, derive_seed(config.seed, 3, i),
            config.threads, config.model_params(),
        )
        pred = predict(model, X_test)
        metrics = compute_metrics(pred, labels[test_idx])
        metrics.update({"fold": i, "n_train": int(train_idx.size), "n_test": int(test_idx.size), "vocabulary_size": len(vocab)})
        per_fold.append(metrics)
    return EvalReport(name, config.scheme, config.model, config.to_dict(), per_fold)


def _entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -(p * math.log2(p) + (1 - p) * math.log2(1 - p))


def gain_from_counts(n: int, n_flaky: int, present: int, present_flaky: int) -> float:
    """Information gain (bits) of a binary feature, from a 2x2 contingency table."""
    if n <= 0:
        raise EvaluationError("information gain of an empty sample")
    absent = n - present
    cond = 0.0
    if present:
        cond += present / n * _entropy(present_flaky / present)
    if absent:
        cond += absent / n * _entropy((n_flaky - present_flaky) / absent)
    return max(0.0, _entropy(n_flaky / n) - cond)


def information_gain(presence, labels) -> float:
    """H(label) - H(label | presence), base 2."""
    x = _binary(presence, "presence")
    y = _binary(labels, "labels")
    if x.shape != y.shape:
        raise EvaluationError("presence and labels differ in length")
    if x.size == 0:
        raise EvaluationError("information gain of an empty sample")
    return gain_from_counts(int(x.size), int(y.sum()), int(x.sum()), int((x & y).sum()))


@dataclass
class VocabularyReport:
    entries: list[tuple[str, float]]
    top_k: int
    n_docs: int
    n_flaky: int

    def to_dict(self) -> dict:
        return {
            "top_k": self.top_k,
            "n_docs": self.n_docs,
            "n_flaky": self.n_flaky,
            "features": [{"feature": t, "information_gain": g} for t, g in self.entries],
        }


def rank_vocabulary(docs: Sequence[Document], flaky: Sequence[bool], lowercase: bool = True) -> list[tuple[str, float]]:
    """Every term ranked by presence-based information gain, ties by term."""
    vocab = fit_vocabulary(list(zip(docs, flaky)), lowercase)
    n, n_flaky = vocab.n_docs, vocab.n_flaky
    gains = [
        (term, gain_from_counts(n, n_flaky, int(vocab.df[i]), int(vocab.flaky_df[i])))
        for i, term in enumerate(vocab.terms)
    ]
    gains.sort(key=lambda tg: (-tg[1], tg[0]))
    return gains


def vocabulary_report(
    dataset: Sequence[LabeledTest],
    top_k: int = 10,
    seed: int = 0,
    balance: bool = True,
    docs: Sequence[Document] | None = None,
    lexer: Lexer | None = None,
) -> VocabularyReport:
    dataset, docs = _balanced(dataset, docs, seed, balance, lexer)
    ranked = rank_vocabulary(docs, [t.is_flaky for t in dataset])
    return VocabularyReport(ranked[:top_k], top_k, len(dataset), sum(t.is_flaky for t in dataset))


def _balanced(dataset, docs, seed, balance, lexer):
    dataset = list(dataset)
    docs = list(docs) if docs is not None else prepare_corpus(dataset, lexer)
    if balance:
        kept = {id(t) for t in undersample(dataset, derive_seed(seed, 0))}
        pairs = [(t, d) for t, d in zip(dataset, docs) if id(t) in kept]
        dataset, docs = [t for t, _ in pairs], [d for _, d in pairs]
    return dataset, docs


@dataclass
class TokenAnalysis:
    token: str
    flaky_containing: int
    nonflaky_containing: int
    n_flaky: int
    n_nonflaky: int

    @property
    def flaky_fraction(self) -> float:
        return _ratio(self.flaky_containing, self.n_flaky)

    @property
    def nonflaky_fraction(self) -> float:
        return _ratio(self.nonflaky_containing, self.n_nonflaky)

    @property
    def precision(self) -> float | None:
        """Precision of the rule 'flaky iff the token occurs'; None if it never occurs."""
        hits = self.flaky_containing + self.nonflaky_containing
        return self.flaky_containing / hits if hits else None

    @property
    def absent(self) -> bool:
        return self.precision is None

    def to_dict(self) -> dict:
        return {
            "token": self.token,
            "flaky_containing": self.flaky_containing,
            "nonflaky_containing": self.nonflaky_containing,
            "n_flaky": self.n_flaky,
            "n_nonflaky": self.n_nonflaky,
            "flaky_fraction": self.flaky_fraction,
            "nonflaky_fraction": self.nonflaky_fraction,
            "rule_precision": self.precision,
            "absent": self.absent,
        }


def single_token_analysis(
    token: str,
    dataset: Sequence[LabeledTest],
    seed: int = 0,
    balance: bool = True,
    docs: Sequence[Document] | None = None,
    lexer: Lexer | None = None,
    lowercase: bool = True,
) -> TokenAnalysis:
    """How often ``token`` occurs in flaky vs non-flaky tests."""
    dataset, docs = _balanced(dataset, docs, seed, balance, lexer)
    needle = token.lower() if lowercase else token
    fc = nc = 0
    for test, doc in zip(dataset, docs):
        if needle in set(doc_terms(doc.tokens, lowercase)):
            if test.is_flaky:
                fc += 1
            else:
                nc += 1
    n_flaky = sum(t.is_flaky for t in dataset)
    return TokenAnalysis(token, fc, nc, n_flaky, len(dataset) - n_flaky)


def render_results_table(reports: Sequence[EvalReport]) -> str:
    """Precision/recall/F1 per run, plus an F1 grid of model by scheme."""
    lines = [f"{'Data Set':<16} {'Scheme':<10} {'Model':<11} {'Precision':>9} {'Recall':>7} {'F1-Score':>8}"]
    for r in reports:
        m = r.macro
        lines.append(
            f"{r.dataset:<16} {r.scheme:<10} {r.model:<11} {m['precision']:>9.2f} {m['recall']:>7.2f} {m['f1']:>8.2f}"
        )
    schemes = list(dict.fromkeys(r.scheme for r in reports))
    models = list(dict.fromkeys(r.model for r in reports))
    if len(reports) > 1:
        lines.append("")
        lines.append(f"{'Model':<14}" + "".join(f"{s:>11}" for s in schemes))
        grid = {(r.model, r.scheme): r.macro["f1"] for r in reports}
        for mdl in models:
            cells = "".join(
                f"{grid[(mdl, s)]:>11.2f}" if (mdl, s) in grid else f"{'-':>11}" for s in schemes
            )
            lines.append(f"{mdl:<14}" + cells)
    return "\n".join(lines) + "\n"


def render_vocabulary_report(report: VocabularyReport) -> str:
    lines = [f"{'Feature':<32} {'Information Gain':>16}"]
    for term, gain in report.entries:
        lines.append(f"{term:<32} {gain:>16.3f}")
    return "\n".join(lines) + "\n"
