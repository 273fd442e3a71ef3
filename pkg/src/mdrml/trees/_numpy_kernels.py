"""Vectorised numpy split search and prediction.

Mirrors ``_numba_kernels`` operation for operation: per-bin sums via
``bincount`` (sequential in sample order) and prefix sums via ``cumsum``, so
both backends produce bit-identical gains and therefore identical trees.
"""
import numpy as np


def _prefix(cnt, a, b, present):
    return (np.cumsum(cnt[present])[:-1], np.cumsum(a[present])[:-1],
            np.cumsum(b[present])[:-1])


def best_split_gini(codes, n_bins, lo, hi, y, w, idx, features, min_leaf):
    wi = w[idx]
    pi = wi * y[idx]
    n = idx.shape[0]
    W = np.cumsum(wi)[-1]
    P = np.cumsum(pi)[-1]
    parent = 2.0 * P * (W - P) / W
    best_f, best_c, best_thr, best_gain = -1, -1, np.nan, 0.0
    for f in features:
        nb = n_bins[f]
        c = codes[idx, f]
        cnt = np.bincount(c, minlength=nb)
        sw = np.bincount(c, weights=wi, minlength=nb)
        sp = np.bincount(c, weights=pi, minlength=nb)
        present = np.flatnonzero(cnt)
        if present.shape[0] < 2:
            continue
        nl, wl, pl = _prefix(cnt, sw, sp, present)
        nr = n - nl
        wr = W - wl
        pr = P - pl
        with np.errstate(divide="ignore", invalid="ignore"):
            child = 2.0 * pl * (wl - pl) / wl + 2.0 * pr * (wr - pr) / wr
            gain = parent - child
        gain = np.where((nl >= min_leaf) & (nr >= min_leaf), gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = gain[k]
            best_f = f
            best_c = present[k]
            best_thr = 0.5 * (hi[f, present[k]] + lo[f, present[k + 1]])
    return best_f, best_c, best_thr, best_gain


def best_split_newton(codes, n_bins, lo, hi, g, h, idx, features, lam, gamma,
                      min_leaf, min_child_weight):
    gi = g[idx]
    hi_ = h[idx]
    n = idx.shape[0]
    G = np.cumsum(gi)[-1]
    H = np.cumsum(hi_)[-1]
    if H + lam <= 0.0:
        return -1, -1, np.nan, 0.0
    parent = G * G / (H + lam)
    best_f, best_c, best_thr, best_gain = -1, -1, np.nan, 0.0
    for f in features:
        nb = n_bins[f]
        c = codes[idx, f]
        cnt = np.bincount(c, minlength=nb)
        sg = np.bincount(c, weights=gi, minlength=nb)
        sh = np.bincount(c, weights=hi_, minlength=nb)
        present = np.flatnonzero(cnt)
        if present.shape[0] < 2:
            continue
        nl, gl, hl = _prefix(cnt, sg, sh, present)
        nr = n - nl
        gr = G - gl
        hr = H - hl
        ok = ((nl >= min_leaf) & (nr >= min_leaf) & (hl >= min_child_weight)
              & (hr >= min_child_weight) & (hl + lam > 0.0) & (hr + lam > 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma
        gain = np.where(ok, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] > best_gain:
            best_gain = gain[k]
            best_f = f
            best_c = present[k]
            best_thr = 0.5 * (hi[f, present[k]] + lo[f, present[k + 1]])
    return best_f, best_c, best_thr, best_gain


def predict_flat(X, feature, threshold, left, right, value):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        fi = np.where(internal, f, 0)
        go_left = X[rows, fi] < threshold[node]
        nxt = np.where(go_left, left[node], right[node])
        node = np.where(internal, nxt, node)
    return value[node]
