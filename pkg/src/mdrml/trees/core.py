"""Decision-tree engine shared by the forest and boosting classifiers.

Two tree types are grown with the same machinery:

* weighted-Gini classification trees, whose leaves hold the weighted
  positive-class fraction;
* second-order (Newton) regression trees for gradient boosting, whose leaves
  hold ``-G / (H + lambda)``.

Features are pre-binned once per fit. In exact mode every distinct value is
its own bin, so candidate thresholds are midpoints between consecutive
distinct values present in the node. Histogram mode caps the bin count at
``max_bins`` using equal-frequency bins.

A sample goes left iff ``x[feature] < threshold``. Equal-gain candidates are
resolved toward the lowest feature index, then the lowest threshold.
"""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, DataError, EmptyDatasetError, NumericError
from . import kernels

LEVEL_WISE = "level_wise"
LEAF_WISE = "leaf_wise"
HISTOGRAM_BINS = 256


class InvalidHessianError(NumericError):
    pass


class DimensionError(DataError):
    pass


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = None
    min_samples_leaf: int = 1
    min_child_weight: float = 0.0
    reg_lambda: float = 0.0
    gamma: float = 0.0
    growth_policy: str = LEVEL_WISE
    max_leaves: int = None
    feature_subsample: float = 1.0
    histogram: bool = False

    def __post_init__(self):
        if self.growth_policy not in (LEVEL_WISE, LEAF_WISE):
            raise ConfigError(f"unknown growth policy {self.growth_policy!r}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1 or None")
        if self.growth_policy == LEAF_WISE:
            if self.max_leaves is None or self.max_leaves < 2:
                raise ConfigError("leaf_wise growth needs max_leaves >= 2")
        if self.reg_lambda < 0 or self.gamma < 0:
            raise ConfigError("reg_lambda and gamma must be non-negative")
        if not 0.0 < self.feature_subsample <= 1.0:
            raise ConfigError("feature_subsample must lie in (0, 1]")
        if self.min_samples_leaf < 1:
            raise ConfigError("min_samples_leaf must be >= 1")


@dataclass
class BinnedMatrix:
    codes: np.ndarray  # (n, d) int32 bin index per cell
    n_bins: np.ndarray  # (d,) int64
    lo: np.ndarray  # (d, max_bins) smallest training value in each bin
    hi: np.ndarray  # (d, max_bins) largest training value in each bin

    @property
    def n_features(self):
        return self.codes.shape[1]


def bin_features(X, max_bins=None):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyDatasetError("feature matrix must be 2-D and non-empty")
    if not np.all(np.isfinite(X)):
        raise NumericError("feature matrix contains non-finite values")
    n, d = X.shape
    codes = np.empty((n, d), dtype=np.int32)
    los, his = [], []
    for f in range(d):
        uniq, inverse = np.unique(X[:, f], return_inverse=True)
        if max_bins is None or len(uniq) <= max_bins:
            codes[:, f] = inverse
            los.append(uniq)
            his.append(uniq)
            continue
        qs = np.quantile(X[:, f], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
        group = np.searchsorted(qs, uniq, side="left")
        _, group = np.unique(group, return_inverse=True)
        n_groups = group.max() + 1
        lo = np.full(n_groups, np.inf)
        hi = np.full(n_groups, -np.inf)
        np.minimum.at(lo, group, uniq)
        np.maximum.at(hi, group, uniq)
        codes[:, f] = group[inverse]
        los.append(lo)
        his.append(hi)
    n_bins = np.array([len(v) for v in los], dtype=np.int64)
    width = int(n_bins.max())
    lo = np.full((d, width), np.nan)
    hi = np.full((d, width), np.nan)
    for f in range(d):
        lo[f, : n_bins[f]] = los[f]
        hi[f, : n_bins[f]] = his[f]
    return BinnedMatrix(codes=np.ascontiguousarray(codes), n_bins=n_bins, lo=lo, hi=hi)


@dataclass
class Tree:
    """Flat-array tree. ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    sum_grad: np.ndarray = field(default=None)
    sum_hess: np.ndarray = field(default=None)

    @property
    def n_nodes(self):
        return len(self.feature)

    @property
    def n_leaves(self):
        return int(np.sum(self.feature < 0))

    def depth(self):
        def walk(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(walk(self.left[i]), walk(self.right[i]))
        return walk(0)

    def leaves(self):
        return np.flatnonzero(self.feature < 0)

    def predict(self, X, backend=None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        used = self.feature[self.feature >= 0]
        if used.size and used.max() >= X.shape[1]:
            raise DimensionError(
                f"tree uses feature {int(used.max())} but input has {X.shape[1]} columns"
            )
        kb = kernels.get_backend(backend) if backend else kernels.BACKEND
        return kb.predict_flat(X, self.feature, self.threshold, self.left, self.right, self.value)

    def to_dict(self):
        boosting = self.sum_grad is not None

        def node(i):
            if self.feature[i] < 0:
                out = {"leaf": float(self.value[i]), "n": int(self.n_samples[i])}
                if boosting:
                    out["G"] = float(self.sum_grad[i])
                    out["H"] = float(self.sum_hess[i])
                return out
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "n": int(self.n_samples[i]),
                "left": node(self.left[i]),
                "right": node(self.right[i]),
            }

        return node(0)

    @classmethod
    def from_dict(cls, doc):
        feature, threshold, left, right, value, n, sg, sh = ([] for _ in range(8))
        boosting = "G" in _first_leaf(doc)

        def add(d):
            i = len(feature)
            feature.append(-1)
            threshold.append(np.nan)
            left.append(-1)
            right.append(-1)
            value.append(np.nan)
            n.append(int(d.get("n", 0)))
            sg.append(np.nan)
            sh.append(np.nan)
            if "leaf" in d:
                value[i] = float(d["leaf"])
                if boosting:
                    sg[i] = float(d["G"])
                    sh[i] = float(d["H"])
            else:
                feature[i] = int(d["feature"])
                threshold[i] = float(d["threshold"])
                left[i] = add(d["left"])
                right[i] = add(d["right"])
            return i

        add(doc)
        return cls(
            feature=np.array(feature, dtype=np.int64),
            threshold=np.array(threshold, dtype=np.float64),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            value=np.array(value, dtype=np.float64),
            n_samples=np.array(n, dtype=np.int64),
            sum_grad=np.array(sg) if boosting else None,
            sum_hess=np.array(sh) if boosting else None,
        )


def _first_leaf(doc):
    while "leaf" not in doc:
        doc = doc["left"]
    return doc


def tree_predict(tree, x):
    """Prediction for one feature vector."""
    return float(tree.predict(np.asarray(x, dtype=np.float64)[None, :])[0])


class _Builder:
    """Grows one tree; ``split_fn(idx, features)`` and ``leaf_fn(idx)`` plug in the criterion."""

    def __init__(self, binned, params, split_fn, leaf_fn, rng=None):
        self.binned = binned
        self.params = params
        self.split_fn = split_fn
        self.leaf_fn = leaf_fn
        self.rng = rng
        d = binned.n_features
        self.all_features = np.arange(d, dtype=np.int64)
        if params.feature_subsample < 1.0:
            self.k_features = max(1, int(math.ceil(params.feature_subsample * d - 1e-12)))
        else:
            self.k_features = d
        self.nodes = []  # [feature, threshold, left, right, value, n, G, H]
        self.pending = {}  # node id -> (idx, depth, split)

    def _features(self):
        if self.k_features == self.binned.n_features:
            return self.all_features
        chosen = self.rng.choice(self.binned.n_features, size=self.k_features, replace=False)
        return np.sort(chosen).astype(np.int64)

    def _make_node(self, idx, depth):
        value, G, H = self.leaf_fn(idx)
        node_id = len(self.nodes)
        self.nodes.append([-1, np.nan, -1, -1, value, len(idx), G, H])
        max_depth = self.params.max_depth
        if max_depth is not None and depth >= max_depth:
            split = None
        else:
            subset = self._features()
            f, c, thr, gain = self.split_fn(idx, subset)
            if f < 0 and subset.shape[0] < self.binned.n_features:
                # nothing useful among the sampled features: search the rest
                rest = np.setdiff1d(self.all_features, subset, assume_unique=True)
                f, c, thr, gain = self.split_fn(idx, rest)
            split = (int(f), int(c), float(thr), float(gain)) if f >= 0 else None
        self.pending[node_id] = (idx, depth, split)
        return node_id

    def _expand(self, node_id):
        idx, depth, (f, c, thr, _) = self.pending.pop(node_id)
        mask = self.binned.codes[idx, f] <= c
        left = self._make_node(idx[mask], depth + 1)
        right = self._make_node(idx[~mask], depth + 1)
        node = self.nodes[node_id]
        node[0], node[1], node[2], node[3] = f, thr, left, right
        return left, right

    def grow(self, idx):
        root = self._make_node(idx, 0)
        if self.params.growth_policy == LEVEL_WISE:
            queue = [root]
            while queue:
                nxt = []
                for node_id in queue:
                    if self.pending[node_id][2] is not None:
                        nxt.extend(self._expand(node_id))
                    else:
                        self.pending.pop(node_id)
                queue = nxt
        else:
            n_leaves = 1
            while n_leaves < self.params.max_leaves:
                best_id, best_gain = -1, -np.inf
                for node_id in sorted(self.pending):
                    split = self.pending[node_id][2]
                    if split is not None and split[3] > best_gain:
                        best_id, best_gain = node_id, split[3]
                if best_id < 0:
                    break
                self._expand(best_id)
                n_leaves += 1
        return self._finish()

    def _finish(self):
        cols = list(zip(*self.nodes))
        boosting = cols[6][0] is not None
        return Tree(
            feature=np.array(cols[0], dtype=np.int64),
            threshold=np.array(cols[1], dtype=np.float64),
            left=np.array(cols[2], dtype=np.int64),
            right=np.array(cols[3], dtype=np.int64),
            value=np.array(cols[4], dtype=np.float64),
            n_samples=np.array(cols[5], dtype=np.int64),
            sum_grad=np.array(cols[6], dtype=np.float64) if boosting else None,
            sum_hess=np.array(cols[7], dtype=np.float64) if boosting else None,
        )


def _prepare(X, n_rows, binned, params):
    if binned is None:
        if X is None:
            raise EmptyDatasetError("no feature matrix supplied")
        binned = bin_features(X, HISTOGRAM_BINS if params.histogram else None)
    if binned.codes.shape[0] != n_rows:
        raise DataError("feature matrix and targets differ in length")
    return binned


def fit_gini_tree(X, y, w, params, seed=0, binned=None, sample_idx=None, rng=None,
                  backend=None):
    """Fit a weighted-Gini classification tree.

    ``sample_idx`` may repeat rows (bootstrap resamples); repeated rows count
    once per occurrence. ``rng`` drives per-split feature subsampling and
    defaults to a generator seeded from ``seed``.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if y.shape[0] == 0:
        raise EmptyDatasetError("cannot fit a tree on zero samples")
    if w.shape != y.shape:
        raise DataError("labels and weights differ in length")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise NumericError("sample weights must be positive and finite")
    binned = _prepare(X, y.shape[0], binned, params)
    idx = np.arange(y.shape[0], dtype=np.int64) if sample_idx is None else np.asarray(sample_idx, dtype=np.int64)
    if idx.shape[0] == 0:
        raise EmptyDatasetError("cannot fit a tree on zero samples")
    if rng is None:
        from ..rng import make_rng
        rng = make_rng(seed)
    kb = kernels.get_backend(backend) if backend else kernels.BACKEND

    def split_fn(node_idx, features):
        return kb.best_split_gini(binned.codes, binned.n_bins, binned.lo, binned.hi, y, w,
                                  node_idx, features, params.min_samples_leaf)

    def leaf_fn(node_idx):
        wi = w[node_idx]
        W = np.cumsum(wi)[-1]
        P = np.cumsum(wi * y[node_idx])[-1]
        return P / W, None, None

    return _Builder(binned, params, split_fn, leaf_fn, rng).grow(idx)


def fit_newton_tree(X, grad, hess, params, binned=None, backend=None, rng=None):
    """Fit a second-order boosting tree from per-sample gradients and Hessians."""
    g = np.ascontiguousarray(grad, dtype=np.float64)
    h = np.ascontiguousarray(hess, dtype=np.float64)
    if g.shape[0] == 0:
        raise EmptyDatasetError("cannot fit a tree on zero samples")
    if g.shape != h.shape:
        raise DataError("gradient and Hessian arrays differ in length")
    if np.any(h < 0):
        raise InvalidHessianError("Hessians must be non-negative")
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
        raise NumericError("non-finite gradient or Hessian")
    binned = _prepare(X, g.shape[0], binned, params)
    lam = float(params.reg_lambda)
    kb = kernels.get_backend(backend) if backend else kernels.BACKEND

    def split_fn(node_idx, features):
        return kb.best_split_newton(binned.codes, binned.n_bins, binned.lo, binned.hi, g, h,
                                    node_idx, features, lam, float(params.gamma),
                                    params.min_samples_leaf, float(params.min_child_weight))

    def leaf_fn(node_idx):
        G = np.cumsum(g[node_idx])[-1]
        H = np.cumsum(h[node_idx])[-1]
        value = -G / (H + lam) if H + lam > 0 else 0.0
        return value, G, H

    idx = np.arange(g.shape[0], dtype=np.int64)
    return _Builder(binned, params, split_fn, leaf_fn, rng).grow(idx)


def with_params(params, **changes):
    return replace(params, **changes)
