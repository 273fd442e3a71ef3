"""The five classifier families behind a single fit / predict_proba contract.

Every model returns P(MDR) clipped to ``[EPS, 1 - EPS]``; hard labels come
from thresholding at 0.5.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError, NumericError, SchemaError
from .rng import make_rng
from .trees import LEAF_WISE, LEVEL_WISE, Tree, TreeParams, bin_features, fit_gini_tree, fit_newton_tree
from .trees.core import HISTOGRAM_BINS

EPS = 1e-6
THRESHOLD = 0.5
_WEIGHT_FLOOR = 1e-300

LOGISTIC = "logistic_regression"
RANDOM_FOREST = "random_forest"
ADABOOST = "adaboost"
GBDT_LEVEL = "gbdt_level_wise"
GBDT_LEAF = "gbdt_leaf_wise"
KINDS = (LOGISTIC, RANDOM_FOREST, ADABOOST, GBDT_LEVEL, GBDT_LEAF)

# kind -> hyperparameter name -> default
DEFAULTS = {
    LOGISTIC: {"l2_lambda": 0.1, "max_iters": 1000, "step_size": 1.0, "tol": 1e-6},
    RANDOM_FOREST: {"n_trees": 100, "max_depth": None, "min_samples_leaf": 1, "bootstrap": True},
    ADABOOST: {"n_stages": 50, "max_depth": 1},
    GBDT_LEVEL: {"n_rounds": 100, "learning_rate": 0.1, "max_depth": 3, "reg_lambda": 1.0,
                 "gamma": 0.0, "min_child_weight": 1.0, "min_samples_leaf": 1},
    GBDT_LEAF: {"n_rounds": 100, "learning_rate": 0.1, "max_leaves": 31, "max_depth": None,
                "reg_lambda": 1.0, "gamma": 0.0, "min_child_weight": 1e-3,
                "min_samples_leaf": 20, "histogram": False},
}


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.clip(0.5 * (1.0 + np.tanh(0.5 * z)), EPS, 1.0 - EPS)


def logit(p):
    p = min(max(p, EPS), 1.0 - EPS)
    return math.log(p / (1.0 - p))


def weighted_log_loss(y, margin, w):
    """Weighted binary cross-entropy of a logit margin, computed without overflow."""
    return float(np.sum(w * (np.logaddexp(0.0, margin) - y * margin)))


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ConfigError(f"unknown classifier kind {self.kind!r}")
        unknown = sorted(set(self.hyperparams) - set(DEFAULTS[self.kind]))
        if unknown:
            raise ConfigError(f"unknown hyperparameters for {self.kind}: {unknown}")

    def resolved(self):
        params = dict(DEFAULTS[self.kind])
        params.update(self.hyperparams)
        return params

    def to_dict(self):
        return {"kind": self.kind, "hyperparams": dict(sorted(self.hyperparams.items())),
                "seed": int(self.seed)}

    @classmethod
    def from_dict(cls, doc):
        return cls(kind=doc["kind"], hyperparams=dict(doc.get("hyperparams", {})),
                   seed=int(doc.get("seed", 0)))


@dataclass(frozen=True)
class TrainedModel:
    spec: ClassifierSpec
    payload: dict
    feature_names: tuple
    info: dict = field(default_factory=dict, compare=False)


# -- logistic regression ------------------------------------------------------

def _lr_objective(theta, Z, y, w, l2):
    margin = theta[0] + Z @ theta[1:]
    beta = theta[1:]
    return weighted_log_loss(y, margin, w) + 0.5 * l2 * float(beta @ beta)


def _lr_gradient(theta, Z, y, w, l2):
    margin = theta[0] + Z @ theta[1:]
    r = w * (0.5 * (1.0 + np.tanh(0.5 * margin)) - y)
    grad = np.empty_like(theta)
    grad[0] = r.sum()
    grad[1:] = Z.T @ r + l2 * theta[1:]
    return grad


def lr_loss_and_grad(theta, Z, y, w, l2):
    """Objective and analytic gradient on already-standardised features."""
    return _lr_objective(theta, Z, y, w, l2), _lr_gradient(theta, Z, y, w, l2)


def fit_logistic(X, y, w, params, seed=0, feature_names=None):
    """L2-regularised weighted logistic regression by backtracking gradient descent.

    Features are z-scored with training statistics kept in the model. The
    intercept is not penalised. Stops when the gradient norm divided by the
    total sample weight drops below ``tol`` or after ``max_iters`` steps.
    """
    X, y, w = _check_xyw(X, y, w)
    p = dict(DEFAULTS[LOGISTIC], **params)
    l2 = float(p["l2_lambda"])
    if l2 < 0:
        raise ConfigError("l2_lambda must be >= 0")
    max_iters = int(p["max_iters"])
    if max_iters < 0:
        raise ConfigError("max_iters must be >= 0")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    total_w = float(w.sum())

    theta = np.zeros(X.shape[1] + 1)
    step = float(p["step_size"])
    f, grad = lr_loss_and_grad(theta, Z, y, w, l2)
    history = [f]
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        gnorm2 = float(grad @ grad)
        if math.sqrt(gnorm2) / total_w <= p["tol"]:
            n_iter -= 1
            break
        t = step
        while True:
            cand = theta - t * grad
            fc = _lr_objective(cand, Z, y, w, l2)
            if fc <= f - 0.5 * t * gnorm2:
                break
            t *= 0.5
            if t < 1e-30:
                raise NumericError("line search failed to decrease the logistic loss")
        theta = cand
        f = fc
        grad = _lr_gradient(theta, Z, y, w, l2)
        history.append(f)
        step = 2.0 * t
    payload = {"coef": theta[1:].copy(), "intercept": float(theta[0]), "mean": mean, "scale": scale}
    spec = ClassifierSpec(LOGISTIC, dict(params), seed)
    return TrainedModel(spec, payload, _names(feature_names, X),
                        info={"loss_history": history, "n_iter": n_iter})


def _predict_logistic(payload, X):
    Z = (X - payload["mean"]) / payload["scale"]
    return sigmoid(payload["intercept"] + Z @ payload["coef"])


# -- random forest ------------------------------------------------------------

def fit_random_forest(X, y, w, params, seed=0, feature_names=None, n_jobs=1):
    """Bagged Gini trees with sqrt(d) candidate features per split."""
    X, y, w = _check_xyw(X, y, w)
    p = dict(DEFAULTS[RANDOM_FOREST], **params)
    n_trees = int(p["n_trees"])
    if n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    n, d = X.shape
    tp = TreeParams(
        max_depth=p["max_depth"],
        min_samples_leaf=int(p["min_samples_leaf"]),
        feature_subsample=math.ceil(math.sqrt(d)) / d,
    )
    binned = bin_features(X)

    def one(t):
        rng = make_rng(seed, "forest-tree", t)
        idx = rng.integers(0, n, size=n) if p["bootstrap"] else None
        return fit_gini_tree(None, y, w, tp, binned=binned, sample_idx=idx, rng=rng)

    trees = _map(one, range(n_trees), n_jobs)
    spec = ClassifierSpec(RANDOM_FOREST, dict(params), seed)
    return TrainedModel(spec, {"trees": trees}, _names(feature_names, X))


def _predict_forest(payload, X):
    total = np.zeros(X.shape[0])
    for tree in payload["trees"]:
        total += tree.predict(X)
    return np.clip(total / len(payload["trees"]), EPS, 1.0 - EPS)


# -- AdaBoost (binary SAMME) --------------------------------------------------

def samme_reweight(log_w, alpha, miss):
    """Multiply misclassified weights by ``exp(alpha)`` and renormalise.

    Works in the log domain with a floor: long runs of near-zero error would
    otherwise underflow weights to 0. Returns ``(log_w, weights)``.
    """
    log_w = log_w + alpha * miss
    log_w = log_w - log_w.max()
    weights = np.maximum(np.exp(log_w), _WEIGHT_FLOOR)
    return log_w, weights / weights.sum()


def fit_adaboost(X, y, w, params, seed=0, feature_names=None):
    X, y, w = _check_xyw(X, y, w)
    p = dict(DEFAULTS[ADABOOST], **params)
    n_stages = int(p["n_stages"])
    if n_stages < 1:
        raise ConfigError("n_stages must be >= 1")
    tp = TreeParams(max_depth=int(p["max_depth"]))
    binned = bin_features(X)
    log_w = np.log(w / w.sum())
    weights = w / w.sum()
    stages = []
    errors = []
    for m in range(n_stages):
        tree = fit_gini_tree(None, y, weights, tp, binned=binned, rng=make_rng(seed, "stage", m))
        miss = (tree.predict(X) >= THRESHOLD) != (y == 1)
        err = float(weights[miss].sum() / weights.sum())
        errors.append(err)
        if err >= 0.5:
            break
        if err <= 0.0:
            stages.append((tree, math.log((1.0 - EPS) / EPS)))
            break
        clipped = min(max(err, EPS), 1.0 - EPS)
        alpha = math.log((1.0 - clipped) / clipped)
        stages.append((tree, alpha))
        log_w, weights = samme_reweight(log_w, alpha, miss)
    spec = ClassifierSpec(ADABOOST, dict(params), seed)
    return TrainedModel(spec, {"stages": stages}, _names(feature_names, X),
                        info={"stage_errors": errors})


def adaboost_score(payload, X):
    """Normalised signed stage vote in [-1, 1]."""
    stages = payload["stages"]
    if not stages:
        return np.zeros(X.shape[0])
    total = np.zeros(X.shape[0])
    alpha_sum = 0.0
    for tree, alpha in stages:
        total += alpha * np.where(tree.predict(X) >= THRESHOLD, 1.0, -1.0)
        alpha_sum += alpha
    return total / alpha_sum


def _predict_adaboost(payload, X):
    return sigmoid(2.0 * adaboost_score(payload, X))


# -- gradient-boosted trees ---------------------------------------------------

def _gbdt_tree_params(kind, p):
    common = dict(
        min_samples_leaf=int(p["min_samples_leaf"]),
        min_child_weight=float(p["min_child_weight"]),
        reg_lambda=float(p["reg_lambda"]),
        gamma=float(p["gamma"]),
    )
    if kind == GBDT_LEVEL:
        return TreeParams(max_depth=p["max_depth"], growth_policy=LEVEL_WISE, **common)
    return TreeParams(max_depth=p["max_depth"], growth_policy=LEAF_WISE,
                      max_leaves=int(p["max_leaves"]), histogram=bool(p["histogram"]), **common)


def fit_gbdt(X, y, w, params, seed=0, feature_names=None, kind=GBDT_LEVEL):
    """Newton boosting of the weighted logistic loss.

    Round r fits a tree to ``g = w (p - y)``, ``h = w p (1 - p)`` and adds
    ``learning_rate * tree`` to the margin, starting from the logit of the
    weighted positive rate.
    """
    X, y, w = _check_xyw(X, y, w)
    if kind not in (GBDT_LEVEL, GBDT_LEAF):
        raise ConfigError(f"{kind} is not a GBDT kind")
    p = dict(DEFAULTS[kind], **params)
    n_rounds = int(p["n_rounds"])
    eta = float(p["learning_rate"])
    if n_rounds < 1:
        raise ConfigError("n_rounds must be >= 1")
    if not 0.0 < eta <= 1.0:
        raise ConfigError("learning_rate must lie in (0, 1]")
    tp = _gbdt_tree_params(kind, p)
    binned = bin_features(X, HISTOGRAM_BINS if tp.histogram else None)

    base = logit(float((w * y).sum() / w.sum()))
    margin = np.full(X.shape[0], base)
    losses = [weighted_log_loss(y, margin, w)]
    trees = []
    for r in range(n_rounds):
        prob = sigmoid(margin)
        grad = w * (prob - y)
        hess = w * prob * (1.0 - prob)
        tree = fit_newton_tree(None, grad, hess, tp, binned=binned)
        margin = margin + eta * tree.predict(X)
        trees.append(tree)
        losses.append(weighted_log_loss(y, margin, w))
    payload = {"base_score": base, "learning_rate": eta, "trees": trees}
    spec = ClassifierSpec(kind, dict(params), seed)
    return TrainedModel(spec, payload, _names(feature_names, X), info={"loss_history": losses})


def gbdt_margin(payload, X):
    margin = np.full(X.shape[0], payload["base_score"])
    eta = payload["learning_rate"]
    for tree in payload["trees"]:
        margin = margin + eta * tree.predict(X)
    return margin


def _predict_gbdt(payload, X):
    return sigmoid(gbdt_margin(payload, X))


# -- dispatch -----------------------------------------------------------------

_PREDICT = {
    LOGISTIC: _predict_logistic,
    RANDOM_FOREST: _predict_forest,
    ADABOOST: _predict_adaboost,
    GBDT_LEVEL: _predict_gbdt,
    GBDT_LEAF: _predict_gbdt,
}


def fit(spec, X, y, w=None, feature_names=None, n_jobs=1):
    """Fit the classifier described by ``spec``. ``w`` defaults to unit weights."""
    if w is None:
        w = np.ones(len(y))
    kw = dict(seed=spec.seed, feature_names=feature_names)
    if spec.kind == LOGISTIC:
        return fit_logistic(X, y, w, spec.hyperparams, **kw)
    if spec.kind == RANDOM_FOREST:
        return fit_random_forest(X, y, w, spec.hyperparams, n_jobs=n_jobs, **kw)
    if spec.kind == ADABOOST:
        return fit_adaboost(X, y, w, spec.hyperparams, **kw)
    return fit_gbdt(X, y, w, spec.hyperparams, kind=spec.kind, **kw)


def predict_proba(model, X, feature_names=None):
    """P(MDR) for each row of ``X``.

    When ``feature_names`` is given it must equal the names the model was
    trained on.
    """
    if feature_names is not None and tuple(feature_names) != tuple(model.feature_names):
        raise SchemaError("feature names do not match the model's training features")
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != len(model.feature_names):
        raise SchemaError(f"expected {len(model.feature_names)} features, got {X.shape[1]}")
    return _PREDICT[model.spec.kind](model.payload, X)


def predict(model, X, feature_names=None):
    return (predict_proba(model, X, feature_names) >= THRESHOLD).astype(np.int64)


# -- serialisation of payloads ------------------------------------------------

def payload_to_dict(model):
    kind, pl = model.spec.kind, model.payload
    if kind == LOGISTIC:
        return {"coef": pl["coef"].tolist(), "intercept": pl["intercept"],
                "mean": pl["mean"].tolist(), "scale": pl["scale"].tolist()}
    if kind == RANDOM_FOREST:
        return {"trees": [t.to_dict() for t in pl["trees"]]}
    if kind == ADABOOST:
        return {"stages": [{"alpha": a, "tree": t.to_dict()} for t, a in pl["stages"]]}
    return {"base_score": pl["base_score"], "learning_rate": pl["learning_rate"],
            "trees": [t.to_dict() for t in pl["trees"]]}


def payload_from_dict(kind, doc):
    if kind == LOGISTIC:
        return {"coef": np.array(doc["coef"], dtype=np.float64), "intercept": float(doc["intercept"]),
                "mean": np.array(doc["mean"], dtype=np.float64),
                "scale": np.array(doc["scale"], dtype=np.float64)}
    if kind == RANDOM_FOREST:
        return {"trees": [Tree.from_dict(t) for t in doc["trees"]]}
    if kind == ADABOOST:
        return {"stages": [(Tree.from_dict(s["tree"]), float(s["alpha"])) for s in doc["stages"]]}
    return {"base_score": float(doc["base_score"]), "learning_rate": float(doc["learning_rate"]),
            "trees": [Tree.from_dict(t) for t in doc["trees"]]}


# -- helpers ------------------------------------------------------------------

def _check_xyw(X, y, w):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("feature matrix must be 2-D and non-empty")
    if not (X.shape[0] == y.shape[0] == w.shape[0]):
        raise DataError("X, y and w differ in length")
    if not np.all(np.isfinite(X)):
        raise NumericError("feature matrix contains non-finite values")
    if not np.all(np.isin(y, (0.0, 1.0))):
        raise DataError("labels must be 0 or 1")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise NumericError("sample weights must be positive and finite")
    return X, y, w


def _names(feature_names, X):
    if feature_names is None:
        return tuple(f"x{i}" for i in range(X.shape[1]))
    if len(feature_names) != X.shape[1]:
        raise SchemaError("feature_names length differs from the number of columns")
    return tuple(feature_names)


def _map(fn, items, n_jobs):
    items = list(items)
    if n_jobs is None or n_jobs <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, items))
