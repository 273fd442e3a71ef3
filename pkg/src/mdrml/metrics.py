"""Confusion-matrix and ranking metrics for the binary MDR task (positive class = 1)."""
import csv
import io
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DataError


class UndefinedCurveError(DataError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.tn, self.fp, self.fn) < 0:
            raise DataError("confusion counts must be non-negative")
        if self.total == 0:
            raise DataError("confusion matrix is empty")

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true).astype(np.int64).ravel()
    y_pred = np.asarray(y_pred).astype(np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise DataError("y_true and y_pred differ in length")
    if y_true.size == 0:
        raise DataError("empty label vectors")
    return ConfusionMatrix(
        tp=int(np.sum((y_true == 1) & (y_pred == 1))),
        tn=int(np.sum((y_true == 0) & (y_pred == 0))),
        fp=int(np.sum((y_true == 0) & (y_pred == 1))),
        fn=int(np.sum((y_true == 1) & (y_pred == 0))),
    )


# (row label, MetricsReport attribute), in report table order
TABLE_ROWS = (
    ("Accuracy", "accuracy"),
    ("Precision", "precision"),
    ("Recall (Sensitivity)", "recall"),
    ("Specificity", "specificity"),
    ("F1-Score", "f1"),
    ("NormMCC", "mcc"),
    ("Precision (Macro Avg)", "precision_macro"),
    ("Recall (Macro Avg)", "recall_macro"),
    ("F1-Score (Macro Avg)", "f1_macro"),
    ("Precision (Weighted Avg)", "precision_weighted"),
    ("Recall (Weighted Avg)", "recall_weighted"),
    ("F1-Score (Weighted Avg)", "f1_weighted"),
    ("AuROC", "roc_auc"),
    ("PRC-AUC", "prc_auc"),
    ("True Positive", "tp"),
    ("True Negative", "tn"),
    ("False Positive", "fp"),
    ("False Negative", "fn"),
)


@dataclass
class MetricsReport:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    specificity: float
    f1: float
    mcc: float
    precision_macro: float
    recall_macro: float
    f1_macro: float
    precision_weighted: float
    recall_weighted: float
    f1_weighted: float
    roc_auc: float = None
    prc_auc: float = None
    zero_division: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def table_column(self):
        return [getattr(self, attr) for _, attr in TABLE_ROWS]


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def _f1(p, r, name, flags):
    return _ratio(2.0 * p * r, p + r, name, flags)


def scalar_metrics(cm):
    """Every threshold-based metric derivable from one confusion matrix.

    0/0 ratios are reported as 0.0 and their names listed in ``zero_division``.
    """
    tp, tn, fp, fn = cm.tp, cm.tn, cm.fp, cm.fn
    flags = []
    precision = _ratio(tp, tp + fp, "precision", flags)
    recall = _ratio(tp, tp + fn, "recall", flags)
    specificity = _ratio(tn, tn + fp, "specificity", flags)
    npv = _ratio(tn, tn + fn, "negative_predictive_value", flags)
    f1_pos = _f1(precision, recall, "f1", flags)
    f1_neg = _f1(npv, specificity, "f1_negative", flags)
    denom = float(tp + fp) * float(tp + fn) * float(tn + fp) * float(tn + fn)
    mcc = _ratio(tp * tn - fp * fn, np.sqrt(denom), "mcc", flags)
    s_pos, s_neg = tp + fn, tn + fp
    n = cm.total
    return MetricsReport(
        tp=tp, tn=tn, fp=fp, fn=fn,
        accuracy=(tp + tn) / n,
        precision=precision,
        recall=recall,
        specificity=specificity,
        f1=f1_pos,
        mcc=float(mcc),
        precision_macro=(precision + npv) / 2.0,
        recall_macro=(recall + specificity) / 2.0,
        f1_macro=(f1_pos + f1_neg) / 2.0,
        precision_weighted=(precision * s_pos + npv * s_neg) / n,
        recall_weighted=(recall * s_pos + specificity * s_neg) / n,
        f1_weighted=(f1_pos * s_pos + f1_neg * s_neg) / n,
        zero_division=flags,
    )


def f1_score(y_true, y_pred):
    cm = confusion(y_true, y_pred)
    den = 2 * cm.tp + cm.fp + cm.fn
    return 0.0 if den == 0 else 2 * cm.tp / den


@dataclass
class RankingCurve:
    kind: str  # "ROC" or "PR"
    points: list
    auc: float


def _ranked_counts(y_true, scores):
    """Cumulative (tp, fp) at each distinct score threshold, highest first."""
    y = np.asarray(y_true).astype(np.int64).ravel()
    s = np.asarray(scores, dtype=np.float64).ravel()
    if y.shape != s.shape:
        raise DataError("labels and scores differ in length")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), y.size - 1]
    tps = np.cumsum(y)[last]
    fps = (last + 1) - tps
    return tps, fps, int(y.sum()), int(y.size - y.sum())


def roc_auc(y_true, scores):
    tps, fps, n_pos, n_neg = _ranked_counts(y_true, scores)
    if n_pos == 0 or n_neg == 0:
        raise UndefinedCurveError("ROC needs both classes")
    tpr = np.r_[0.0, tps / n_pos]
    fpr = np.r_[0.0, fps / n_neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return RankingCurve("ROC", list(zip(fpr.tolist(), tpr.tolist())), auc)


def pr_auc(y_true, scores):
    """Step-wise (average-precision) area: sum over thresholds of dRecall * precision."""
    tps, fps, n_pos, _ = _ranked_counts(y_true, scores)
    if n_pos == 0:
        raise UndefinedCurveError("precision-recall curve needs positives")
    precision = tps / (tps + fps)
    recall = tps / n_pos
    auc = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    points = [(0.0, 1.0)] + list(zip(recall.tolist(), precision.tolist()))
    return RankingCurve("PR", points, auc)


def evaluate(y_true, proba, threshold=0.5):
    """Full report: confusion-based metrics plus ROC-AUC and PRC-AUC of ``proba``."""
    y_true = np.asarray(y_true).astype(np.int64)
    proba = np.asarray(proba, dtype=np.float64)
    report = scalar_metrics(confusion(y_true, (proba >= threshold).astype(np.int64)))
    if 0 < y_true.sum() < y_true.size:
        report.roc_auc = roc_auc(y_true, proba).auc
        report.prc_auc = pr_auc(y_true, proba).auc
    return report


def table_csv(reports, decimals=None):
    """Metrics-as-rows, models-as-columns CSV. ``reports`` maps model name to report."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    names = list(reports)
    w.writerow(["Performance Indicators"] + names)
    for label, attr in TABLE_ROWS:
        row = [label]
        for name in names:
            v = getattr(reports[name], attr)
            if v is None:
                row.append("")
            elif isinstance(v, int):
                row.append(str(v))
            else:
                row.append(f"{v:.{decimals}f}" if decimals is not None else repr(float(v)))
        w.writerow(row)
    return buf.getvalue()


def report_csv_row(report):
    """One CSV row (header + values) in table order."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([label for label, _ in TABLE_ROWS])
    w.writerow(["" if v is None else v for v in report.table_column()])
    return buf.getvalue()
