import itertools
import math

import numpy as np
import pytest

from flakevocab.features import (
    BOW,
    TFIDF,
    TFIDFC_RF,
    Document,
    FeatureError,
    Vocabulary,
    append_aux,
    build_features,
    doc_terms,
    embed,
    embed_bow,
    embed_corpus,
    embed_tfidf,
    embed_tfidfc_rf,
    fit_vocabulary,
    normalize_scheme,
    prepare_document,
    relevance_factor,
)
from flakevocab.lexer import KEYWORD, NAME, NUM_MASK, NUMBER_MASK, AuxFeatures, Token


def doc(*words):
    return [Token(NAME, w) for w in words]


def oracle_tfidf(corpus, target):
    n = len(corpus)
    vec = {}
    for t in set(target):
        df = sum(t in d for d in corpus)
        if df == 0:
            continue
        vec[t] = target.count(t) * (math.log((1 + n) / (1 + df)) + 1)
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return {t: v / norm for t, v in vec.items()} if norm else vec


def oracle_tfidfc_rf(corpus, labels, target):
    n = len(corpus)
    vec = {}
    for t in set(target):
        a = sum(t in d for d, y in zip(corpus, labels) if y)
        b = sum(t in d for d, y in zip(corpus, labels) if not y)
        if a + b == 0:
            continue
        idfc = math.log((1 + n) / (1 + a + b)) + 1
        rf = math.log2(2 + a / max(1, b))
        vec[t] = target.count(t) * idfc * rf
    norm = math.sqrt(sum(v * v for v in vec.values()))
    return {t: v / norm for t, v in vec.items()} if norm else vec


def test_single_doc_weight_is_one():
    vocab = fit_vocabulary([(doc("a"), True)])
    assert embed_tfidf(doc("a"), vocab) == {0: 1.0}


def test_two_doc_hand_example():
    vocab = fit_vocabulary([(doc("a", "b"), True), (doc("a"), False)])
    w = vocab.decode(embed_tfidf(doc("a", "b"), vocab))
    assert w["a"] == pytest.approx(0.580, abs=5e-4)
    assert w["b"] == pytest.approx(0.815, abs=5e-4)
    assert vocab.idf()[vocab.index["a"]] == 1.0


def test_tfidf_matches_oracle_on_pairs_of_docs():
    alphabet = "abcdef"
    subsets = [s for r in range(1, 4) for s in itertools.combinations(alphabet, r)]
    for d1, d2 in itertools.product(subsets, repeat=2):
        corpus = [list(d1) + [d1[0]], list(d2)]
        vocab = fit_vocabulary([(doc(*c), i == 0) for i, c in enumerate(corpus)])
        for target in corpus + [list("abcdef")]:
            got = vocab.decode(embed_tfidf(doc(*target), vocab))
            want = oracle_tfidf(corpus, target)
            assert got.keys() == want.keys()
            for t in want:
                assert abs(got[t] - want[t]) <= 1e-12


def test_tfidfc_rf_matches_oracle_random_corpora():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(1, 6))
        corpus = [list(rng.choice(list("abcdef"), size=int(rng.integers(1, 8)))) for _ in range(n)]
        labels = [bool(x) for x in rng.integers(0, 2, n)]
        vocab = fit_vocabulary([(doc(*c), y) for c, y in zip(corpus, labels)])
        for target in corpus:
            got = vocab.decode(embed_tfidfc_rf(doc(*target), vocab))
            want = oracle_tfidfc_rf(corpus, labels, target)
            assert got.keys() == want.keys()
            for t in want:
                assert abs(got[t] - want[t]) <= 1e-12
            assert math.isclose(math.sqrt(sum(v * v for v in got.values())), 1.0, abs_tol=1e-9)


def test_rf_examples():
    assert relevance_factor(0, 0) == 1.0
    assert relevance_factor(5, 5) == pytest.approx(math.log2(3))
    assert relevance_factor(4, 0) == pytest.approx(math.log2(6))


def test_rf_monotone_grid():
    for a in range(0, 30):
        for b in range(0, 30):
            assert relevance_factor(a + 1, b) > relevance_factor(a, b)
            if a >= 1 and b >= 1:
                assert relevance_factor(a, b + 1) < relevance_factor(a, b)


def test_rf_flat_between_zero_and_one_nonflaky():
    # max(1, b) makes b = 0 and b = 1 equivalent
    assert relevance_factor(3, 0) == relevance_factor(3, 1)


def test_schemes_share_sparsity():
    corpus = [(doc("a", "b", "b"), True), (doc("b", "c"), False), (doc("c"), False)]
    vocab = fit_vocabulary(corpus)
    target = doc("a", "c", "zzz")
    patterns = {tuple(embed(target, vocab, s)) for s in (BOW, TFIDF, TFIDFC_RF)}
    assert len(patterns) == 1
    assert embed_bow(doc("b", "b", "q"), vocab) == {vocab.index["b"]: 2}


def test_keywords_excluded_and_case_folded():
    toks = [Token(KEYWORD, "def"), Token(NAME, "Virtual"), Token(NUMBER_MASK, NUM_MASK)]
    assert doc_terms(toks) == ["virtual", NUM_MASK]
    assert doc_terms(toks, lowercase=False) == ["Virtual", NUM_MASK]


def test_prepare_document_counts_raw_keywords():
    d = prepare_document("def testBow(self):\n    return self.x\n")
    assert d.aux.keyword_counts["self"] == 2 and d.aux.loc == 2
    assert [t.text for t in d.tokens if t.kind == NAME][:3] == ["test", "Bow", "testBow"]


def test_append_aux_layout():
    vocab = fit_vocabulary([(doc("a"), True), (doc("b"), False)])
    docs = [
        Document(tuple(doc("a")), AuxFeatures({"def": 2}, 10)),
        Document(tuple(doc("b")), AuxFeatures({}, 3)),
    ]
    X = build_features(docs, vocab, BOW, ["class", "def"])
    assert X.to_dense().tolist() == [[1, 0, 0, 2, 10], [0, 1, 0, 0, 3]]
    with pytest.raises(FeatureError):
        append_aux(embed_corpus(docs, vocab, BOW), [None, None], ["def"])
    with pytest.raises(FeatureError):
        append_aux(embed_corpus(docs, vocab, BOW), [docs[0].aux], ["def"])


def test_vocabulary_roundtrip():
    vocab = fit_vocabulary(
        [(doc("b", "a"), True), (doc("a") + [Token(NUMBER_MASK, NUM_MASK)], False)], scheme="tfidfc-rf"
    )
    text = vocab.dumps()
    again = Vocabulary.loads(text)
    assert again.dumps() == text and again.digest() == vocab.digest()
    assert again.terms == ["#NUM#", "a", "b"] and again.scheme == TFIDFC_RF
    assert text.splitlines()[3] == "a\t1\t2\t1\t1"
    with pytest.raises(FeatureError):
        Vocabulary.loads("garbage")


def test_leakage_vocabulary_depends_on_training_only():
    train = [(doc("a", "b"), True), (doc("b", "c"), False)]
    vocab = fit_vocabulary(train)
    before = vocab.dumps()
    X = embed_corpus([d for d, _ in train], vocab, TFIDF)
    X_test = embed_corpus([doc("novelToken", "a")], vocab, TFIDF)
    assert vocab.dumps() == before and "noveltoken" not in vocab
    assert X_test.terms.nnz == 1
    assert (embed_corpus([d for d, _ in train], vocab, TFIDF).terms != X.terms).nnz == 0


def test_fit_errors():
    with pytest.raises(FeatureError):
        fit_vocabulary([])
    with pytest.raises(FeatureError):
        fit_vocabulary([(doc("a"), "maybe")])
    with pytest.raises(FeatureError):
        normalize_scheme("word2vec")
    assert normalize_scheme("TFIDFC-RF") == TFIDFC_RF
