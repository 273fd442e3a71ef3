"""Loop-form split search and prediction, compiled with numba."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True, error_model="numpy")
def best_split_gini(codes, n_bins, lo, hi, y, w, idx, features, min_leaf):
    n = idx.shape[0]
    max_nb = lo.shape[1]
    cnt = np.zeros(max_nb, dtype=np.int64)
    sw = np.zeros(max_nb)
    sp = np.zeros(max_nb)
    W = 0.0
    P = 0.0
    for t in range(n):
        i = idx[t]
        W += w[i]
        P += w[i] * y[i]
    parent = 2.0 * P * (W - P) / W
    best_f = -1
    best_c = -1
    best_thr = np.nan
    best_gain = 0.0
    for f in features:
        nb = n_bins[f]
        for b in range(nb):
            cnt[b] = 0
            sw[b] = 0.0
            sp[b] = 0.0
        for t in range(n):
            i = idx[t]
            b = codes[i, f]
            cnt[b] += 1
            sw[b] += w[i]
            sp[b] += w[i] * y[i]
        nl = 0
        wl = 0.0
        pl = 0.0
        prev = -1
        for b in range(nb):
            if cnt[b] == 0:
                continue
            if prev >= 0:
                nr = n - nl
                if nl >= min_leaf and nr >= min_leaf:
                    wr = W - wl
                    pr = P - pl
                    child = 2.0 * pl * (wl - pl) / wl + 2.0 * pr * (wr - pr) / wr
                    gain = parent - child
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_c = prev
                        best_thr = 0.5 * (hi[f, prev] + lo[f, b])
            nl += cnt[b]
            wl += sw[b]
            pl += sp[b]
            prev = b
    return best_f, best_c, best_thr, best_gain


@njit(cache=True, nogil=True, error_model="numpy")
def best_split_newton(codes, n_bins, lo, hi, g, h, idx, features, lam, gamma,
                      min_leaf, min_child_weight):
    n = idx.shape[0]
    max_nb = lo.shape[1]
    cnt = np.zeros(max_nb, dtype=np.int64)
    sg = np.zeros(max_nb)
    sh = np.zeros(max_nb)
    G = 0.0
    H = 0.0
    for t in range(n):
        i = idx[t]
        G += g[i]
        H += h[i]
    best_f = -1
    best_c = -1
    best_thr = np.nan
    best_gain = 0.0
    if H + lam <= 0.0:
        return best_f, best_c, best_thr, best_gain
    parent = G * G / (H + lam)
    for f in features:
        nb = n_bins[f]
        for b in range(nb):
            cnt[b] = 0
            sg[b] = 0.0
            sh[b] = 0.0
        for t in range(n):
            i = idx[t]
            b = codes[i, f]
            cnt[b] += 1
            sg[b] += g[i]
            sh[b] += h[i]
        nl = 0
        gl = 0.0
        hl = 0.0
        prev = -1
        for b in range(nb):
            if cnt[b] == 0:
                continue
            if prev >= 0:
                nr = n - nl
                gr = G - gl
                hr = H - hl
                if (nl >= min_leaf and nr >= min_leaf and hl >= min_child_weight
                        and hr >= min_child_weight and hl + lam > 0.0 and hr + lam > 0.0):
                    gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent) - gamma
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_c = prev
                        best_thr = 0.5 * (hi[f, prev] + lo[f, b])
            nl += cnt[b]
            gl += sg[b]
            hl += sh[b]
            prev = b
    return best_f, best_c, best_thr, best_gain


@njit(cache=True, nogil=True, error_model="numpy")
def predict_flat(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[r, feature[node]] < threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out
