"""Pairwise significance tests between classifiers.

McNemar compares two models' hard predictions on the same held-out rows;
the paired t-test compares fold-wise CV scores obtained on shared folds.
"""
import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import DataError
from .specfun import chi2_sf, t_two_sided_p

ALPHA = 0.05
CHI2_MIN_DISCORDANT = 25

MCNEMAR_CHI2 = "mcnemar_chi2"
MCNEMAR_EXACT = "mcnemar_exact"
PAIRED_T = "paired_t"
DEGENERATE = "degenerate"


class InsufficientFoldsError(DataError):
    pass


@dataclass(frozen=True)
class DiscordantPairs:
    b: int  # A right, B wrong
    c: int  # A wrong, B right
    n_concordant: int


@dataclass(frozen=True)
class TestResult:
    __test__ = False

    statistic: float
    p_value: float
    method: str
    significant_at_05: bool
    note: str = ""

    def to_dict(self):
        return asdict(self)


def _result(statistic, p, method, note=""):
    p = min(max(float(p), 0.0), 1.0)
    return TestResult(statistic, p, method, p < ALPHA, note)


def discordant_pairs(y_true, pred_a, pred_b):
    y = np.asarray(y_true).astype(np.int64).ravel()
    a = np.asarray(pred_a).astype(np.int64).ravel()
    b = np.asarray(pred_b).astype(np.int64).ravel()
    if not (y.shape == a.shape == b.shape):
        raise DataError("label and prediction vectors differ in length")
    ok_a = a == y
    ok_b = b == y
    n_b = int(np.sum(ok_a & ~ok_b))
    n_c = int(np.sum(~ok_a & ok_b))
    return DiscordantPairs(n_b, n_c, int(y.size - n_b - n_c))


def binomial_two_sided_p(k, n):
    """Exact two-sided binomial p-value for ``k`` successes out of ``n`` at p0 = 1/2."""
    k = min(k, n - k)
    tail = Fraction(sum(math.comb(n, i) for i in range(k + 1)), 2 ** n)
    return float(min(Fraction(1), 2 * tail))


def mcnemar(y_true, pred_a, pred_b):
    """McNemar's test on discordant pairs.

    Uses the continuity-corrected chi-square statistic when ``b + c >= 25``
    and the exact binomial test below that; ``b + c == 0`` is reported as
    degenerate with p = 1.
    """
    pairs = discordant_pairs(y_true, pred_a, pred_b)
    return mcnemar_from_counts(pairs.b, pairs.c)


def mcnemar_from_counts(b, c):
    n = b + c
    if n == 0:
        return _result(None, 1.0, DEGENERATE, "no discordant pairs")
    if n >= CHI2_MIN_DISCORDANT:
        stat = (abs(b - c) - 1.0) ** 2 / n
        return _result(stat, chi2_sf(stat, 1), MCNEMAR_CHI2)
    return _result(float(min(b, c)), binomial_two_sided_p(min(b, c), n), MCNEMAR_EXACT)


def paired_t(scores_a, scores_b):
    """Two-sided paired t-test over matched fold scores."""
    a = np.asarray(scores_a, dtype=np.float64).ravel()
    b = np.asarray(scores_b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise DataError("score vectors differ in length")
    k = a.size
    if k < 2:
        raise InsufficientFoldsError("paired t-test needs at least two folds")
    d = a - b
    mean = float(d.mean())
    sd = float(d.std(ddof=1))
    # differences equal up to rounding count as constant
    if sd <= 1e-12 * max(1.0, abs(mean)):
        if mean == 0.0:
            return _result(0.0, 1.0, PAIRED_T, "identical scores")
        return _result(None, 0.0, DEGENERATE, "zero-variance nonzero differences; p not computable")
    t = mean / (sd / math.sqrt(k))
    return _result(t, t_two_sided_p(t, k - 1), PAIRED_T)


def significance_matrix(y_true, predictions, fold_f1=None, fold_auc=None):
    """All pairwise comparisons among the named models.

    ``predictions`` maps model name to hard test-set predictions; the optional
    fold dictionaries map model name to per-fold CV scores on shared folds.
    """
    names = list(predictions)
    rows = []
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            pairs = discordant_pairs(y_true, predictions[a], predictions[b])
            row = {"model_a": a, "model_b": b, "b": pairs.b, "c": pairs.c,
                   "mcnemar": mcnemar_from_counts(pairs.b, pairs.c).to_dict()}
            if fold_f1 and a in fold_f1 and b in fold_f1:
                row["paired_t_f1"] = paired_t(fold_f1[a], fold_f1[b]).to_dict()
            if fold_auc and a in fold_auc and b in fold_auc:
                fa, fb = np.asarray(fold_auc[a]), np.asarray(fold_auc[b])
                keep = np.isfinite(fa) & np.isfinite(fb)
                if keep.sum() >= 2:
                    row["paired_t_auc"] = paired_t(fa[keep], fb[keep]).to_dict()
            rows.append(row)
    return {"models": names, "pairs": rows}


def matrix_csv(matrix):
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model_a", "model_b", "b", "c", "mcnemar_method", "mcnemar_statistic",
                "mcnemar_p", "paired_t_f1_p", "paired_t_auc_p"])
    for r in matrix["pairs"]:
        m = r["mcnemar"]
        w.writerow([r["model_a"], r["model_b"], r["b"], r["c"], m["method"],
                    "" if m["statistic"] is None else m["statistic"], m["p_value"],
                    r.get("paired_t_f1", {}).get("p_value", ""),
                    r.get("paired_t_auc", {}).get("p_value", "")])
    return buf.getvalue()
