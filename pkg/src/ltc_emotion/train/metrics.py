"""Multiclass classification metrics."""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from ..errors import ShapeError, UndefinedMetricError
from ..features.labels import CLASS_NAMES

LOG_LOSS_CLIP = 1e-15


def confusion_matrix(labels, preds, n_classes):
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def _safe_div(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def per_class_prf(cm):
    tp = np.diag(cm).astype(float)
    precision = _safe_div(tp, cm.sum(axis=0))
    recall = _safe_div(tp, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return precision, recall, f1


def cohens_kappa(cm):
    cm = np.asarray(cm, dtype=float)
    n = cm.sum()
    po = np.trace(cm) / n
    pe = float(cm.sum(axis=0) @ cm.sum(axis=1)) / n**2
    if np.count_nonzero(cm.sum(axis=1)) < 2 or pe >= 1.0:
        raise UndefinedMetricError("kappa is undefined when only one class is present")
    return (po - pe) / (1.0 - pe)


def matthews_corrcoef(cm):
    cm = np.asarray(cm, dtype=float)
    if np.count_nonzero(cm.sum(axis=1)) < 2:
        raise UndefinedMetricError("MCC is undefined when only one class is present")
    t, p = cm.sum(axis=1), cm.sum(axis=0)
    c, s = np.trace(cm), cm.sum()
    denom = np.sqrt((s**2 - p @ p) * (s**2 - t @ t))
    return float((c * s - t @ p) / denom) if denom > 0 else 0.0


def binary_auc(scores, positive):
    """Area under the ROC curve via the rank-sum statistic (ties share ranks)."""
    positive = np.asarray(positive, dtype=bool)
    n_pos = int(positive.sum())
    n_neg = positive.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def log_loss(probs, labels):
    p = np.clip(probs[np.arange(len(labels)), labels], LOG_LOSS_CLIP, 1.0)
    return float(-np.mean(np.log(p)))


def top_confusions(cm, class_names, k=10):
    """Largest off-diagonal cells, count descending then row/column order."""
    rows = [(int(cm[i, j]), i, j) for i in range(cm.shape[0]) for j in range(cm.shape[1])
            if i != j and cm[i, j] > 0]
    rows.sort(key=lambda r: (-r[0], r[1], r[2]))
    return [{"true": class_names[i], "predicted": class_names[j], "count": c}
            for c, i, j in rows[:k]]


@dataclass
class MetricsReport:
    n_samples: int
    accuracy: float
    balanced_accuracy: float
    macro_f1: float
    weighted_f1: float
    cohens_kappa: float
    mcc: float
    log_loss: float
    roc_micro_auc: float
    roc_macro_auc: float
    confusion_matrix: list
    per_class: list = field(default_factory=list)
    top_misclassifications: list = field(default_factory=list)
    class_names: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(_jsonable(self.to_dict()), indent=2, sort_keys=True) + "\n"


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, float) and not np.isfinite(x):
        return None
    if isinstance(x, np.generic):
        return _jsonable(x.item())
    return x


def compute_metrics(probs, labels, class_names=None):
    """Every summary and per-class metric from predicted probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] != labels.shape[0]:
        raise ShapeError(f"metrics: probs {probs.shape} vs labels {labels.shape}")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-5):
        raise ShapeError("metrics: probability rows must sum to 1")
    n, k = probs.shape
    names = list(class_names or (CLASS_NAMES if k == len(CLASS_NAMES) else range(k)))
    names = [str(c) for c in names]
    preds = probs.argmax(axis=1)
    cm = confusion_matrix(labels, preds, k)
    precision, recall, f1 = per_class_prf(cm)
    support = cm.sum(axis=1)
    present = support > 0
    seen = present | (cm.sum(axis=0) > 0)
    onehot = np.eye(k, dtype=bool)[labels]
    aucs = np.array([binary_auc(probs[:, c], onehot[:, c]) for c in range(k)])
    per_class = [
        {"class": names[c], "precision": float(precision[c]), "recall": float(recall[c]),
         "f1": float(f1[c]), "auc": float(aucs[c]), "support": int(support[c])}
        for c in range(k)
    ]
    defined = aucs[np.isfinite(aucs)]
    return MetricsReport(
        n_samples=int(n),
        accuracy=float(np.trace(cm) / n),
        balanced_accuracy=float(recall[present].mean()),
        macro_f1=float(f1[seen].mean()),
        weighted_f1=float((f1 * support).sum() / support.sum()),
        cohens_kappa=float(cohens_kappa(cm)),
        mcc=matthews_corrcoef(cm),
        log_loss=log_loss(probs, labels),
        roc_micro_auc=binary_auc(probs.ravel(), onehot.ravel()),
        roc_macro_auc=float(defined.mean()) if defined.size else float("nan"),
        confusion_matrix=cm.tolist(),
        per_class=per_class,
        top_misclassifications=top_confusions(cm, names),
        class_names=names,
    )


def accuracy_and_macro_f1(preds, labels, n_classes):
    cm = confusion_matrix(labels, preds, n_classes)
    _, _, f1 = per_class_prf(cm)
    seen = (cm.sum(axis=1) > 0) | (cm.sum(axis=0) > 0)
    return float(np.trace(cm) / cm.sum()), float(f1[seen].mean())
