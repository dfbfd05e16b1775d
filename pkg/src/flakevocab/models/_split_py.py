"""Pure-numpy split search, the reference for the compiled kernel.

Both backends must return bit-identical results: samples are ordered by
(value, position in ``samples``), sums accumulate sequentially in that order
and scores use the same arithmetic.
"""

from __future__ import annotations

import numpy as np

NO_SPLIT = (-1, 0.0, -np.inf)


def _sorted_column(XT, f, samples):
    values = XT[f, samples]
    order = np.argsort(values, kind="stable")
    return values[order], order


def _midpoints(lo, hi):
    mid = (lo + hi) * 0.5
    return np.where(mid >= hi, lo, mid)


def best_split_gini(XT, y, w, samples, features, max_features, min_samples_leaf):
    """Best Gini split of a node.

    Maximizes ``(lp^2 + ln^2) / wl + (rp^2 + rn^2) / wr`` where ``lp``/``ln``
    are weighted flaky/non-flaky counts left of the threshold. Features are
    visited in the given order until ``max_features`` have been seen and at
    least one was non-constant. Ties go to the lower feature index, then the
    lower threshold. Returns ``(feature, threshold, score)``; feature is -1
    when no valid split exists.
    """
    m = samples.shape[0]
    best_f, best_t, best_s = NO_SPLIT
    visited = nonconstant = 0
    yw_all = w[samples] * y[samples]
    w_all = w[samples]
    for f in features:
        if visited >= max_features and nonconstant > 0:
            break
        visited += 1
        vals, order = _sorted_column(XT, f, samples)
        if vals[0] == vals[-1]:
            continue
        nonconstant += 1
        cw = np.cumsum(w_all[order])
        cp = np.cumsum(yw_all[order])
        total_w, total_p = cw[-1], cp[-1]
        total_n = total_w - total_p
        pos = np.arange(1, m)
        valid = (vals[:-1] < vals[1:]) & (pos >= min_samples_leaf) & (m - pos >= min_samples_leaf)
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        wl = cw[idx]
        lp = cp[idx]
        ln = wl - lp
        wr = total_w - wl
        rp = total_p - lp
        rn = total_n - ln
        score = (lp * lp + ln * ln) / wl + (rp * rp + rn * rn) / wr
        k = int(np.argmax(score))
        s = float(score[k])
        if s > best_s or (s == best_s and f < best_f):
            best_f = int(f)
            best_t = float(_midpoints(vals[idx[k]], vals[idx[k] + 1]))
            best_s = s
    return best_f, best_t, best_s


def best_split_grad(XT, g, h, samples, features, min_child_weight, l2_lambda):
    """Best second-order split: maximizes ``GL^2/(HL+l) + GR^2/(HR+l)``.

    Every feature in ``features`` is examined. Children must carry at least
    ``min_child_weight`` hessian mass.
    """
    best_f, best_t, best_s = NO_SPLIT
    g_all = g[samples]
    h_all = h[samples]
    for f in features:
        vals, order = _sorted_column(XT, f, samples)
        if vals[0] == vals[-1]:
            continue
        cg = np.cumsum(g_all[order])
        ch = np.cumsum(h_all[order])
        total_g, total_h = cg[-1], ch[-1]
        gl = cg[:-1]
        hl = ch[:-1]
        gr = total_g - gl
        hr = total_h - hl
        valid = (vals[:-1] < vals[1:]) & (hl >= min_child_weight) & (hr >= min_child_weight)
        if not valid.any():
            continue
        idx = np.flatnonzero(valid)
        score = gl[idx] * gl[idx] / (hl[idx] + l2_lambda) + gr[idx] * gr[idx] / (hr[idx] + l2_lambda)
        k = int(np.argmax(score))
        s = float(score[k])
        if s > best_s or (s == best_s and f < best_f):
            best_f = int(f)
            best_t = float(_midpoints(vals[idx[k]], vals[idx[k] + 1]))
            best_s = s
    return best_f, best_t, best_s
