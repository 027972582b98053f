"""Confusion matrices, per-class metrics, one-vs-rest ROC and fold aggregation."""

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import EmptyInput, EmptyMatrix, LabelOutOfRange, LengthMismatch, SingleClassPresent


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion counts must be a square matrix")
        if np.any(c < 0):
            raise ValueError("confusion counts must be non-negative")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def n_classes(self):
        return self.counts.shape[0]

    @property
    def total(self):
        return int(self.counts.sum())

    @property
    def tp(self):
        return np.diag(self.counts).copy()

    @property
    def fp(self):
        return self.counts.sum(axis=0) - self.tp

    @property
    def fn(self):
        return self.counts.sum(axis=1) - self.tp

    @property
    def tn(self):
        return self.total - self.tp - self.fp - self.fn

    def __eq__(self, other):
        return isinstance(other, ConfusionMatrix) and np.array_equal(self.counts, other.counts)


def confusion(y_true, y_pred, n_classes):
    y_true = np.asarray(y_true, dtype=np.int64).ravel()
    y_pred = np.asarray(y_pred, dtype=np.int64).ravel()
    if y_true.shape != y_pred.shape:
        raise LengthMismatch(f"{y_true.size} true labels vs {y_pred.size} predictions")
    for arr in (y_true, y_pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise LabelOutOfRange(f"labels must lie in 0..{n_classes - 1}")
    counts = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return ConfusionMatrix(counts.reshape(n_classes, n_classes))


def _ratio(num, den):
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out, ~ok


@dataclass(frozen=True, eq=False)
class MetricsReport:
    accuracy: float
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    class_accuracy: np.ndarray     # one-vs-rest (TP + TN) / total
    confusion: ConfusionMatrix
    degenerate: dict = field(default_factory=dict)

    @property
    def class_recall(self):
        """Per-class hit rate: the other reading of a per-task accuracy."""
        return self.recall

    @property
    def macro_precision(self):
        return float(self.precision.mean())

    @property
    def macro_recall(self):
        return float(self.recall.mean())

    @property
    def macro_f1(self):
        return float(self.f1.mean())

    def to_dict(self):
        return {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "precision": self.precision.tolist(),
            "recall": self.recall.tolist(),
            "f1": self.f1.tolist(),
            "class_recall": self.class_recall.tolist(),
            "class_ovr_accuracy": self.class_accuracy.tolist(),
            "confusion": self.confusion.counts.tolist(),
            "degenerate": {k: v.tolist() for k, v in self.degenerate.items()},
        }


def metrics(cm):
    """Accuracy plus per-class precision, recall and F1.

    Zero denominators give 0 and are flagged in ``report.degenerate``.
    """
    if cm.total == 0:
        raise EmptyMatrix("confusion matrix has no samples")
    tp, fp, fn, tn = cm.tp, cm.fp, cm.fn, cm.tn
    precision, p_bad = _ratio(tp, tp + fp)
    recall, r_bad = _ratio(tp, tp + fn)
    f1, f_bad = _ratio(2 * precision * recall, precision + recall)
    return MetricsReport(
        accuracy=float(tp.sum() / cm.total),
        precision=precision,
        recall=recall,
        f1=f1,
        class_accuracy=(tp + tn) / cm.total,
        confusion=cm,
        degenerate={"precision": p_bad, "recall": r_bad, "f1": f_bad},
    )


# ----------------------------------------------------------------------
# ROC


@dataclass(frozen=True, eq=False)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray   # thresholds[k] admits every score >= it; first is +inf
    auc: float


def roc(scores, y_true, cls=None):
    """One-vs-rest ROC for class ``cls``.

    ``scores`` may be a (n, C) matrix (column ``cls`` is used) or a 1-D score
    vector, in which case ``y_true`` is compared against ``cls`` (or treated as
    boolean when ``cls`` is None). Equal scores move together, so ties become a
    single diagonal segment. AUC uses the trapezoid rule.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(y_true)
    if s.ndim == 2:
        if cls is None:
            raise ValueError("a class index is required for a score matrix")
        s = s[:, cls]
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    pos = (y == cls) if cls is not None else y.astype(bool)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassPresent("ROC needs both positive and negative samples")
    order = np.argsort(-s, kind="stable")
    s_sorted, p_sorted = s[order], pos[order]
    tps = np.cumsum(p_sorted)
    fps = np.cumsum(~p_sorted)
    last = np.r_[np.nonzero(np.diff(s_sorted))[0], s_sorted.size - 1]
    tpr = np.r_[0.0, tps[last] / n_pos]
    fpr = np.r_[0.0, fps[last] / n_neg]
    thresholds = np.r_[np.inf, s_sorted[last]]
    return RocCurve(fpr, tpr, thresholds, float(np.trapezoid(tpr, fpr)))


def rank_auc(scores, positives):
    """Mann-Whitney AUC with mid-ranks for ties."""
    from scipy.stats import rankdata

    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives, dtype=bool)
    ranks = rankdata(s)
    n_pos = pos.sum()
    n_neg = pos.size - n_pos
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def roc_all(scores, y_true):
    """Per-class curves (None where a class is absent or universal) and macro AUC."""
    s = np.asarray(scores, dtype=np.float64)
    curves = []
    for c in range(s.shape[1]):
        try:
            curves.append(roc(s, y_true, c))
        except SingleClassPresent:
            curves.append(None)
    aucs = [c.auc for c in curves if c is not None]
    return curves, (float(np.mean(aucs)) if aucs else float("nan"))


# ----------------------------------------------------------------------
# aggregation


@dataclass(frozen=True, eq=False)
class Summary:
    n_reports: int
    mean: dict
    std: dict
    confusion_counts: np.ndarray
    confusion_normalized: np.ndarray

    def to_dict(self):
        return {
            "n_reports": self.n_reports,
            "mean": {k: _jsonable(v) for k, v in self.mean.items()},
            "std": {k: _jsonable(v) for k, v in self.std.items()},
            "confusion_counts": self.confusion_counts.tolist(),
            "confusion_normalized": self.confusion_normalized.tolist(),
        }


SCALAR_FIELDS = ("accuracy", "macro_precision", "macro_recall", "macro_f1")
VECTOR_FIELDS = ("precision", "recall", "f1", "class_recall", "class_ovr_accuracy")


def _jsonable(v):
    return v.tolist() if isinstance(v, np.ndarray) else v


def _moments(v):
    """Mean and population std over axis 0, exact when every entry agrees."""
    same = np.all(v == v[0], axis=0)
    mean = np.where(same, v[0], v.mean(axis=0))
    std = np.where(same, 0.0, v.std(axis=0))
    return mean, std


def aggregate(reports):
    """Mean and population std of each metric; confusions summed, then row-normalized.

    ``reports`` may be :class:`MetricsReport` objects or their ``to_dict()``
    forms, optionally carrying extra scalar keys such as ``macro_auc``.
    """
    reports = [r.to_dict() if isinstance(r, MetricsReport) else r for r in reports]
    if not reports:
        raise EmptyInput("nothing to aggregate")
    sizes = {len(r["confusion"]) for r in reports}
    if len(sizes) != 1:
        raise ValueError("reports disagree on the number of classes")
    scalar_keys = [k for k in reports[0]
                   if k not in VECTOR_FIELDS and isinstance(reports[0][k], (int, float))
                   and all(k in r for r in reports)]
    mean, std = {}, {}
    for k in scalar_keys:
        m, sd = _moments(np.array([r[k] for r in reports], dtype=np.float64))
        mean[k], std[k] = float(m), float(sd)
    for k in VECTOR_FIELDS:
        if all(k in r for r in reports):
            mean[k], std[k] = _moments(np.array([r[k] for r in reports], dtype=np.float64))
    counts = np.sum([np.asarray(r["confusion"], dtype=np.int64) for r in reports], axis=0)
    rows = counts.sum(axis=1, keepdims=True)
    normalized = np.divide(counts, rows, out=np.zeros(counts.shape), where=rows > 0)
    return Summary(len(reports), mean, std, counts, normalized)


# ----------------------------------------------------------------------
# export


def to_json(obj):
    """Stable JSON text (sorted keys, trailing newline)."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def rows_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def confusion_csv(counts, class_names=None):
    counts = np.asarray(counts)
    names = list(class_names or range(counts.shape[0]))
    rows = [[names[i]] + list(counts[i].tolist()) for i in range(counts.shape[0])]
    return rows_to_csv(["true\\pred"] + names, rows)


def roc_csv(curves, class_names=None):
    rows = []
    for c, curve in enumerate(curves):
        if curve is None:
            continue
        name = class_names[c] if class_names else c
        for f, t, th in zip(curve.fpr.tolist(), curve.tpr.tolist(), curve.thresholds.tolist()):
            rows.append([name, f, t, th])
    return rows_to_csv(["class", "fpr", "tpr", "threshold"], rows)
