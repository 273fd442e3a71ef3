"""Stratified splitting, balanced class weights and F1-driven grid search."""
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import classifiers
from .errors import ConfigError, DataError, StratificationError
from .metrics import f1_score, roc_auc
from .rng import make_rng


@dataclass(frozen=True)
class SplitIndices:
    train: np.ndarray
    test: np.ndarray
    seed: int

    def to_dict(self):
        return {"seed": int(self.seed), "train": self.train.tolist(), "test": self.test.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(train=np.array(doc["train"], dtype=np.int64),
                   test=np.array(doc["test"], dtype=np.int64), seed=int(doc["seed"]))


def _classes(labels):
    y = np.asarray(labels).astype(np.int64).ravel()
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if pos.size + neg.size != y.size:
        raise DataError("labels must be 0 or 1")
    return y, neg, pos


def _largest_remainder(quotas, seats):
    base = [math.floor(q) for q in quotas]
    rest = seats - sum(base)
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:rest]:
        base[i] += 1
    return base


def stratified_split(labels, test_fraction=0.2, seed=0):
    """Per-class shuffled hold-out split.

    The test size is ``round(N * test_fraction)``; it is apportioned to the
    classes by largest remainder, so each class keeps its global share to
    within one sample.
    """
    y, neg, pos = _classes(labels)
    if pos.size == 0 or neg.size == 0:
        raise StratificationError("stratified split needs both classes")
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("test_fraction must lie in (0, 1)")
    n = y.size
    n_test = int(math.floor(n * test_fraction + 0.5))
    quotas = [neg.size * n_test / n, pos.size * n_test / n]
    counts = _largest_remainder(quotas, n_test)
    rng = make_rng(seed, "split")
    test, train = [], []
    for members, k in zip((neg, pos), counts):
        perm = rng.permutation(members)
        test.append(perm[:k])
        train.append(perm[k:])
    return SplitIndices(train=np.sort(np.concatenate(train)), test=np.sort(np.concatenate(test)),
                        seed=seed)


def stratified_kfold(labels, k=5, seed=0):
    """Validation index arrays for ``k`` stratified folds (positions into ``labels``).

    Each class is shuffled and the classes are dealt round-robin in one
    continuous sequence, so per-class and total fold sizes each differ by at
    most one.
    """
    y, neg, pos = _classes(labels)
    if k < 2:
        raise ConfigError("k must be >= 2")
    if min(neg.size, pos.size) < k:
        raise StratificationError(f"each class needs at least {k} members for {k}-fold CV")
    rng = make_rng(seed, "kfold", k)
    order = np.concatenate([rng.permutation(neg), rng.permutation(pos)])
    assignment = np.arange(order.size) % k
    return [np.sort(order[assignment == f]) for f in range(k)]


def balanced_class_weights(labels):
    """``w_c = N / (2 N_c)`` for c in {0, 1}."""
    y, neg, pos = _classes(labels)
    if pos.size == 0 or neg.size == 0:
        raise DataError("class weights need both classes present")
    n = y.size
    return {0: n / (2.0 * neg.size), 1: n / (2.0 * pos.size)}


def sample_weights(labels, class_weights=None):
    y = np.asarray(labels).astype(np.int64)
    if class_weights is None:
        class_weights = balanced_class_weights(y)
    return np.where(y == 1, class_weights[1], class_weights[0]).astype(np.float64)


@dataclass(frozen=True)
class Grid:
    params: dict  # name -> list of candidate values

    def __post_init__(self):
        if not self.params:
            raise ConfigError("grid must name at least one hyperparameter")
        for name, values in self.params.items():
            if not isinstance(values, (list, tuple)) or len(values) == 0:
                raise ConfigError(f"grid entry {name!r} needs a non-empty list of values")

    def cells(self):
        names = sorted(self.params)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.params[n] for n in names))]

    def to_dict(self):
        return {k: list(v) for k, v in sorted(self.params.items())}


DEFAULT_GRIDS = {
    classifiers.LOGISTIC: {"l2_lambda": [0.01, 0.1, 1.0]},
    classifiers.RANDOM_FOREST: {"n_trees": [100, 300], "max_depth": [8, None]},
    classifiers.ADABOOST: {"n_stages": [50, 200], "max_depth": [1, 2]},
    classifiers.GBDT_LEVEL: {"n_rounds": [100, 300], "learning_rate": [0.1, 0.3], "max_depth": [3, 6]},
    classifiers.GBDT_LEAF: {"n_rounds": [100, 300], "learning_rate": [0.1, 0.3], "max_leaves": [15, 31]},
}


def default_grid(kind):
    return Grid(DEFAULT_GRIDS[kind])


@dataclass
class CellResult:
    params: dict
    fold_f1: list
    fold_auc: list

    @property
    def mean_f1(self):
        return float(np.mean(self.fold_f1))

    @property
    def std_f1(self):
        return float(np.std(self.fold_f1))

    def to_dict(self):
        return {"params": self.params, "mean_f1": self.mean_f1, "std_f1": self.std_f1,
                "fold_f1": list(self.fold_f1), "fold_auc": list(self.fold_auc)}


@dataclass
class TuneResult:
    kind: str
    cells: list
    best_index: int
    best_spec: classifiers.ClassifierSpec
    model: classifiers.TrainedModel = field(default=None, repr=False)
    class_weights: dict = None

    @property
    def best(self):
        return self.cells[self.best_index]

    def to_dict(self):
        return {
            "kind": self.kind,
            "best_index": self.best_index,
            "best_spec": self.best_spec.to_dict(),
            "class_weights": {str(k): v for k, v in (self.class_weights or {}).items()},
            "cells": [c.to_dict() for c in self.cells],
        }


def select_best(cells):
    """Highest mean F1; ties go to the smaller std, then the earlier cell."""
    return min(range(len(cells)), key=lambda i: (-cells[i].mean_f1, cells[i].std_f1, i))


def _fold_auc(y, proba):
    if 0 < y.sum() < y.size:
        return roc_auc(y, proba).auc
    return float("nan")


def cross_validate(X, y, spec, folds, feature_names=None):
    """Per-fold (F1, ROC-AUC) with class weights recomputed from each fold's training labels."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    f1s, aucs = [], []
    all_idx = np.arange(y.size)
    for val in folds:
        tr = np.setdiff1d(all_idx, val, assume_unique=True)
        w = sample_weights(y[tr])
        model = classifiers.fit(spec, X[tr], y[tr], w, feature_names)
        proba = classifiers.predict_proba(model, X[val])
        f1s.append(f1_score(y[val], (proba >= classifiers.THRESHOLD).astype(np.int64)))
        aucs.append(_fold_auc(y[val], proba))
    return f1s, aucs


def grid_search(X, y, kind, grid=None, k=5, seed=0, train_idx=None, feature_names=None,
                n_jobs=1, refit=True):
    """Exhaustive k-fold search maximising mean positive-class F1.

    Only rows in ``train_idx`` (default: all rows) take part. Cells and folds
    are independent tasks; results are reduced in grid order, so the outcome
    does not depend on ``n_jobs``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if train_idx is not None:
        X, y = X[train_idx], y[train_idx]
    grid = grid if grid is not None else default_grid(kind)
    if not isinstance(grid, Grid):
        grid = Grid(dict(grid))
    cells = grid.cells()
    specs = [classifiers.ClassifierSpec(kind, cell, seed) for cell in cells]
    folds = stratified_kfold(y, k, seed)
    all_idx = np.arange(y.size)

    def task(args):
        ci, fi = args
        val = folds[fi]
        tr = np.setdiff1d(all_idx, val, assume_unique=True)
        w = sample_weights(y[tr])
        model = classifiers.fit(specs[ci], X[tr], y[tr], w, feature_names)
        proba = classifiers.predict_proba(model, X[val])
        f1 = f1_score(y[val], (proba >= classifiers.THRESHOLD).astype(np.int64))
        return f1, _fold_auc(y[val], proba)

    jobs = [(ci, fi) for ci in range(len(cells)) for fi in range(k)]
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            outcomes = list(pool.map(task, jobs))
    else:
        outcomes = [task(j) for j in jobs]

    results = []
    for ci, cell in enumerate(cells):
        chunk = outcomes[ci * k:(ci + 1) * k]
        results.append(CellResult(params=cell, fold_f1=[o[0] for o in chunk],
                                  fold_auc=[o[1] for o in chunk]))
    best = select_best(results)
    out = TuneResult(kind=kind, cells=results, best_index=best, best_spec=specs[best])
    if refit:
        out.class_weights = balanced_class_weights(y)
        out.model = classifiers.fit(specs[best], X, y, sample_weights(y, out.class_weights),
                                    feature_names, n_jobs=n_jobs)
    return out
