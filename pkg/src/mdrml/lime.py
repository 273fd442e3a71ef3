"""Local surrogate explanations for tabular predictions.

Around one instance we draw perturbed rows from training marginals, map each
row to a binary "same as the instance" representation, weight rows by an
exponential kernel on the normalised Hamming distance, and fit a weighted
ridge model of the black-box probability on that representation. A positive
weight means the instance's value of that feature pushes toward MDR.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NotFittedError
from .rng import make_rng

MAX_CATEGORIES = 10


@dataclass(frozen=True)
class PerturbationConfig:
    n_samples: int = 5000
    kernel_width: float = None  # None -> 0.75 * sqrt(d)
    top_k: int = None  # None -> min(10, d)
    seed: int = 0
    ridge_alpha: float = 1.0

    def width(self, d):
        return 0.75 * math.sqrt(d) if self.kernel_width is None else float(self.kernel_width)

    def k(self, d):
        return min(10, d) if self.top_k is None else int(self.top_k)

    def validate(self, d):
        if self.n_samples < 100:
            raise ConfigError("n_samples must be >= 100")
        if self.width(d) <= 0:
            raise ConfigError("kernel width must be positive")
        if not 1 <= self.k(d) <= d:
            raise ConfigError(f"top_k must lie in [1, {d}]")


@dataclass
class TrainingStats:
    feature_names: list
    categorical: np.ndarray  # bool per feature
    values: list  # categorical: observed values; numeric: None
    freqs: list  # categorical: empirical frequencies
    quartiles: np.ndarray  # (d, 3), NaN for categorical features
    mean: np.ndarray
    std: np.ndarray
    value_labels: dict = field(default_factory=dict)

    @property
    def n_features(self):
        return len(self.feature_names)


def training_stats(X, feature_names, categorical=None, value_labels=None):
    """Per-feature marginals from the training split.

    Features with at most ``MAX_CATEGORIES`` distinct values are treated as
    categorical unless ``categorical`` says otherwise.
    """
    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    if categorical is None:
        categorical = np.array([len(np.unique(X[:, j])) <= MAX_CATEGORIES for j in range(d)])
    categorical = np.asarray(categorical, dtype=bool)
    values, freqs = [], []
    quartiles = np.full((d, 3), np.nan)
    for j in range(d):
        if categorical[j]:
            v, counts = np.unique(X[:, j], return_counts=True)
            values.append(v)
            freqs.append(counts / counts.sum())
        else:
            values.append(None)
            freqs.append(None)
            quartiles[j] = np.quantile(X[:, j], [0.25, 0.5, 0.75])
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return TrainingStats(list(feature_names), categorical, values, freqs, quartiles,
                         X.mean(axis=0), std, dict(value_labels or {}))


def _quartile_bin(q, v):
    return np.searchsorted(q, v, side="left")


def perturb(instance, stats, config, rng):
    """Return ``(samples, z, weights)``; row 0 is the instance itself with weight 1."""
    if stats is None:
        raise NotFittedError("training statistics are required for perturbation")
    x = np.asarray(instance, dtype=np.float64).ravel()
    d = stats.n_features
    if x.size != d:
        raise ConfigError(f"instance has {x.size} features, training stats have {d}")
    config.validate(d)
    n = config.n_samples
    samples = np.empty((n, d))
    z = np.empty((n, d), dtype=np.float64)
    for j in range(d):
        if stats.categorical[j]:
            col = rng.choice(stats.values[j], size=n, p=stats.freqs[j])
            same = col == x[j]
        else:
            col = rng.normal(stats.mean[j], stats.std[j], size=n)
            q = stats.quartiles[j]
            same = _quartile_bin(q, col) == _quartile_bin(q, x[j])
        samples[:, j] = col
        z[:, j] = same
    samples[0] = x
    z[0] = 1.0
    dist = (d - z.sum(axis=1)) / d
    weights = np.exp(-(dist ** 2) / config.width(d) ** 2)
    return samples, z, weights


def weighted_ridge(Z, y, w, alpha):
    """Ridge regression with sample weights and an unpenalised intercept."""
    sw = w.sum()
    zm = (w @ Z) / sw
    ym = float(w @ y) / sw
    Zc = Z - zm
    yc = y - ym
    A = (Zc * w[:, None]).T @ Zc + alpha * np.eye(Z.shape[1])
    coef = np.linalg.solve(A, (Zc * w[:, None]).T @ yc)
    return coef, ym - float(zm @ coef)


def weighted_r2(y, pred, w):
    ym = float(w @ y) / w.sum()
    ss_tot = float(w @ (y - ym) ** 2)
    if ss_tot == 0.0:
        return 1.0 if float(w @ (y - pred) ** 2) == 0.0 else 0.0
    return 1.0 - float(w @ (y - pred) ** 2) / ss_tot


@dataclass
class Explanation:
    instance_id: object
    predicted_proba: float
    entries: list  # (feature name, condition text, weight), |weight| descending
    intercept: float
    score: float  # weighted R^2 of the surrogate on the perturbation set
    local_prediction: float

    def weights(self):
        return {name: w for name, _, w in self.entries}

    def to_dict(self):
        return {
            "instance_id": self.instance_id,
            "predicted_proba": self.predicted_proba,
            "intercept": self.intercept,
            "score": self.score,
            "local_prediction": self.local_prediction,
            "entries": [{"feature": f, "condition": c, "weight": w} for f, c, w in self.entries],
        }


def _fmt(v):
    return f"{v:g}"


def condition_text(stats, j, value):
    name = stats.feature_names[j]
    if stats.categorical[j]:
        label = stats.value_labels.get(name, {}).get(float(value))
        return f"{name} = {label if label is not None else _fmt(value)}"
    q = stats.quartiles[j]
    b = int(_quartile_bin(q, value))
    if b == 0:
        return f"{name} <= {_fmt(q[0])}"
    if b == 3:
        return f"{name} > {_fmt(q[2])}"
    return f"{_fmt(q[b - 1])} < {name} <= {_fmt(q[b])}"


def _predictor(model):
    if callable(model):
        return model
    from .classifiers import predict_proba

    return lambda X: predict_proba(model, X)


def explain_instance(model, instance, stats, config=None, instance_id=0):
    """Explain one prediction of ``model`` (a trained model or a probability callable)."""
    config = config or PerturbationConfig()
    rng = make_rng(config.seed, "lime", instance_id)
    samples, z, w = perturb(instance, stats, config, rng)
    predict = _predictor(model)
    y = np.asarray(predict(samples), dtype=np.float64).ravel()

    coef_all, _ = weighted_ridge(z, y, w, config.ridge_alpha)
    chosen = np.argsort(-np.abs(coef_all), kind="mergesort")[: config.k(z.shape[1])]
    chosen = np.sort(chosen)
    coef, intercept = weighted_ridge(z[:, chosen], y, w, config.ridge_alpha)
    fitted = intercept + z[:, chosen] @ coef
    score = weighted_r2(y, fitted, w)

    order = np.argsort(-np.abs(coef), kind="mergesort")
    x = np.asarray(instance, dtype=np.float64).ravel()
    entries = [
        (stats.feature_names[chosen[i]], condition_text(stats, chosen[i], x[chosen[i]]), float(coef[i]))
        for i in order
    ]
    return Explanation(
        instance_id=instance_id,
        predicted_proba=float(y[0]),
        entries=entries,
        intercept=float(intercept),
        score=float(score),
        local_prediction=float(intercept + coef.sum()),
    )
