# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled split search; mirrors ``_split_py`` operation for operation."""

from libc.stdlib cimport malloc, free, qsort
from libc.math cimport INFINITY

import numpy as np


cdef struct Entry:
    double value
    Py_ssize_t pos


cdef int _cmp_entry(const void* a, const void* b) noexcept nogil:
    cdef const Entry* ea = <const Entry*> a
    cdef const Entry* eb = <const Entry*> b
    if ea.value < eb.value:
        return -1
    if ea.value > eb.value:
        return 1
    if ea.pos < eb.pos:
        return -1
    if ea.pos > eb.pos:
        return 1
    return 0


cdef inline double _midpoint(double lo, double hi) noexcept nogil:
    cdef double mid = (lo + hi) * 0.5
    if mid >= hi:
        return lo
    return mid


cdef inline void _fill(const double[:, ::1] XT, Py_ssize_t f, const Py_ssize_t[::1] samples,
                       Entry* buf, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(m):
        buf[i].value = XT[f, samples[i]]
        buf[i].pos = i
    qsort(buf, m, sizeof(Entry), _cmp_entry)


def best_split_gini(const double[:, ::1] XT, const double[::1] y, const double[::1] w,
                    const Py_ssize_t[::1] samples, const Py_ssize_t[::1] features,
                    Py_ssize_t max_features, Py_ssize_t min_samples_leaf):
    cdef Py_ssize_t m = samples.shape[0]
    cdef Py_ssize_t n_feat = features.shape[0]
    cdef Py_ssize_t best_f = -1
    cdef double best_t = 0.0
    cdef double best_s = -INFINITY
    cdef Py_ssize_t visited = 0, nonconstant = 0
    cdef Py_ssize_t fi, f, i, s_id
    cdef double cw, cp, total_w, total_p, total_n, wl, lp, ln, wr, rp, rn, score
    cdef double feat_s, feat_t
    cdef bint feat_found
    if m == 0:
        return -1, 0.0, -np.inf
    cdef Entry* buf = <Entry*> malloc(m * sizeof(Entry))
    cdef double* ws = <double*> malloc(m * sizeof(double))
    cdef double* yws = <double*> malloc(m * sizeof(double))
    if buf == NULL or ws == NULL or yws == NULL:
        free(buf); free(ws); free(yws)
        raise MemoryError()
    with nogil:
        for i in range(m):
            s_id = samples[i]
            ws[i] = w[s_id]
            yws[i] = w[s_id] * y[s_id]
        for fi in range(n_feat):
            if visited >= max_features and nonconstant > 0:
                break
            visited += 1
            f = features[fi]
            _fill(XT, f, samples, buf, m)
            if buf[0].value == buf[m - 1].value:
                continue
            nonconstant += 1
            total_w = 0.0
            total_p = 0.0
            for i in range(m):
                total_w = total_w + ws[buf[i].pos]
                total_p = total_p + yws[buf[i].pos]
            total_n = total_w - total_p
            cw = 0.0
            cp = 0.0
            feat_found = False
            feat_s = -INFINITY
            feat_t = 0.0
            for i in range(m - 1):
                cw = cw + ws[buf[i].pos]
                cp = cp + yws[buf[i].pos]
                if not (buf[i].value < buf[i + 1].value):
                    continue
                if i + 1 < min_samples_leaf or m - (i + 1) < min_samples_leaf:
                    continue
                wl = cw
                lp = cp
                ln = wl - lp
                wr = total_w - wl
                rp = total_p - lp
                rn = total_n - ln
                score = (lp * lp + ln * ln) / wl + (rp * rp + rn * rn) / wr
                if not feat_found or score > feat_s:
                    feat_found = True
                    feat_s = score
                    feat_t = _midpoint(buf[i].value, buf[i + 1].value)
            if feat_found and (feat_s > best_s or (feat_s == best_s and f < best_f)):
                best_f = f
                best_t = feat_t
                best_s = feat_s
    free(buf); free(ws); free(yws)
    return best_f, best_t, best_s


def best_split_grad(const double[:, ::1] XT, const double[::1] g, const double[::1] h,
                    const Py_ssize_t[::1] samples, const Py_ssize_t[::1] features,
                    double min_child_weight, double l2_lambda):
    cdef Py_ssize_t m = samples.shape[0]
    cdef Py_ssize_t n_feat = features.shape[0]
    cdef Py_ssize_t best_f = -1
    cdef double best_t = 0.0
    cdef double best_s = -INFINITY
    cdef Py_ssize_t fi, f, i, s_id
    cdef double cg, ch, total_g, total_h, gr, hr, score, feat_s, feat_t
    cdef bint feat_found
    if m == 0:
        return -1, 0.0, -np.inf
    cdef Entry* buf = <Entry*> malloc(m * sizeof(Entry))
    cdef double* gs = <double*> malloc(m * sizeof(double))
    cdef double* hs = <double*> malloc(m * sizeof(double))
    if buf == NULL or gs == NULL or hs == NULL:
        free(buf); free(gs); free(hs)
        raise MemoryError()
    with nogil:
        for i in range(m):
            s_id = samples[i]
            gs[i] = g[s_id]
            hs[i] = h[s_id]
        for fi in range(n_feat):
            f = features[fi]
            _fill(XT, f, samples, buf, m)
            if buf[0].value == buf[m - 1].value:
                continue
            total_g = 0.0
            total_h = 0.0
            for i in range(m):
                total_g = total_g + gs[buf[i].pos]
                total_h = total_h + hs[buf[i].pos]
            cg = 0.0
            ch = 0.0
            feat_found = False
            feat_s = -INFINITY
            feat_t = 0.0
            for i in range(m - 1):
                cg = cg + gs[buf[i].pos]
                ch = ch + hs[buf[i].pos]
                if not (buf[i].value < buf[i + 1].value):
                    continue
                gr = total_g - cg
                hr = total_h - ch
                if not (ch >= min_child_weight and hr >= min_child_weight):
                    continue
                score = cg * cg / (ch + l2_lambda) + gr * gr / (hr + l2_lambda)
                if not feat_found or score > feat_s:
                    feat_found = True
                    feat_s = score
                    feat_t = _midpoint(buf[i].value, buf[i + 1].value)
            if feat_found and (feat_s > best_s or (feat_s == best_s and f < best_f)):
                best_f = f
                best_t = feat_t
                best_s = feat_s
    free(buf); free(gs); free(hs)
    return best_f, best_t, best_s
