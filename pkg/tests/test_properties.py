import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from flakevocab.evaluate import information_gain, kfold_split
from flakevocab.features import TFIDF, TFIDFC_RF, embed, fit_vocabulary, relevance_factor
from flakevocab.ingest import RERUN, BuildStats, RunHistory, filter_global_issues, label_rerun_rule, undersample
from flakevocab.lexer import NAME, Token, tokenize
from flakevocab.splitter import split_identifier

from conftest import labeled

identifiers = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,15}", fullmatch=True)
words = st.lists(st.sampled_from("abcdefgh"), min_size=1, max_size=8)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=4), st.randoms())
def test_rerun_rule_order_insensitive(results, rnd):
    shuffled = list(results)
    rnd.shuffle(shuffled)
    assert label_rerun_rule(RunHistory("t", tuple(results), RERUN)) == label_rerun_rule(
        RunHistory("t", tuple(shuffled), RERUN)
    )


@given(st.integers(1, 5000), st.data())
def test_global_filter_monotone_in_passed(n, data):
    s = data.draw(st.integers(0, n - 1))
    if filter_global_issues([BuildStats("b", n, s)]):
        assert filter_global_issues([BuildStats("b", n, s + 1)])


@given(st.lists(st.booleans(), min_size=2, max_size=60), st.integers(0, 2**32))
def test_undersample_balanced_submultiset(flags, seed):
    if all(flags) or not any(flags):
        return
    ds = [labeled(f"t{i}", "x", f) for i, f in enumerate(flags)]
    out = undersample(ds, seed)
    assert sum(t.is_flaky for t in out) * 2 == len(out)
    ids = [t.test_id for t in out]
    assert len(set(ids)) == len(ids) and set(ids) <= {t.test_id for t in ds}
    assert ids == [t.test_id for t in undersample(ds, seed)]


@given(identifiers)
def test_split_fragments_cover_alphanumerics(name):
    r = split_identifier(name)
    assert "".join(r.fragments) == "".join(c for c in name if c.isalnum())
    assert all(f for f in r.fragments)


@given(identifiers)
def test_identifier_lexes_as_single_name(name):
    toks = tokenize(name)
    assert len(toks) == 1 and toks[0].text == name


@given(st.lists(st.tuples(words, st.booleans()), min_size=1, max_size=6), words)
@settings(max_examples=200)
def test_weighted_vectors_unit_norm_and_shared_sparsity(corpus, target):
    pairs = [([Token(NAME, w) for w in d], y) for d, y in corpus]
    vocab = fit_vocabulary(pairs)
    doc = [Token(NAME, w) for w in target]
    a, b = embed(doc, vocab, TFIDF), embed(doc, vocab, TFIDFC_RF)
    assert list(a) == list(b) == list(embed(doc, vocab, "bow"))
    for vec in (a, b):
        if vec:
            assert math.isclose(math.sqrt(sum(v * v for v in vec.values())), 1.0, abs_tol=1e-9)


@given(st.integers(0, 500), st.integers(0, 500))
def test_rf_monotone(a, b):
    assert relevance_factor(a + 1, b) > relevance_factor(a, b)
    if a >= 1 and b >= 1:
        assert relevance_factor(a, b + 1) < relevance_factor(a, b)


@given(st.lists(st.tuples(st.booleans(), st.booleans()), min_size=1, max_size=40))
def test_information_gain_bounds_and_symmetry(rows):
    x = [p for p, _ in rows]
    y = [l for _, l in rows]
    g = information_gain(x, y)
    assert 0.0 <= g <= 1.0
    assert math.isclose(g, information_gain(x, [not v for v in y]), abs_tol=1e-12)
    assert math.isclose(g, information_gain([not v for v in x], y), abs_tol=1e-12)


@given(st.integers(2, 10), st.integers(0, 200), st.integers(0, 2**32))
def test_kfold_partition(k, extra, seed):
    n = k + extra
    folds = kfold_split(n, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))
