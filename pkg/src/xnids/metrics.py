"""Multiclass evaluation: confusion matrix, per-class TP/FP/FN/TN,
precision/recall/F1 with macro and support-weighted aggregates, and
one-vs-rest ROC/AUC."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .schema import CLASS_NAMES

N_CLASSES = len(CLASS_NAMES)


class MetricError(Exception):
    pass


class LengthMismatch(MetricError):
    pass


class InvalidLabel(MetricError):
    pass


class SingleClassOnly(MetricError):
    """ROC/AUC is undefined when one side of the one-vs-rest split is empty."""


def confusion_matrix(true_labels: np.ndarray, predicted_labels: np.ndarray, n_classes: int = N_CLASSES) -> np.ndarray:
    """Cell (i, j) counts samples with true class i predicted as class j."""
    t = np.asarray(true_labels, dtype=np.int64).ravel()
    p = np.asarray(predicted_labels, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise LengthMismatch(f"{t.shape[0]} true labels vs {p.shape[0]} predictions")
    for arr, kind in ((t, "true"), (p, "predicted")):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise InvalidLabel(f"{kind} labels must lie in 0..{n_classes - 1}")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


def per_class_counts(cm: np.ndarray) -> dict[str, np.ndarray]:
    """TP/FP/FN/TN per class; the four always sum to the matrix total."""
    cm = np.asarray(cm, dtype=np.int64)
    total = cm.sum()
    tp = np.diag(cm)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    tn = total - tp - fp - fn
    return {"tp": tp, "fp": fp, "fn": fn, "tn": tn}


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    # 0/0 reported as 0 by convention.
    out = np.zeros_like(num, dtype=np.float64)
    nz = den != 0
    out[nz] = num[nz] / den[nz]
    return out


@dataclass
class ClassReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    zero_division_flags: np.ndarray  # True where a 0/0 was coerced to 0

    def to_jsonable(self) -> dict:
        return {
            CLASS_NAMES[c]: {
                "precision": float(self.precision[c]),
                "recall": float(self.recall[c]),
                "f1": float(self.f1[c]),
                "support": int(self.support[c]),
                "zero_division": bool(self.zero_division_flags[c]),
            }
            for c in range(len(self.support))
        }


@dataclass
class AggregateReport:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    total: int
    notes: list[str] = field(default_factory=list)

    def to_jsonable(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall, "f1": self.macro_f1},
            "weighted": {
                "precision": self.weighted_precision,
                "recall": self.weighted_recall,
                "f1": self.weighted_f1,
            },
            "total": self.total,
            "notes": self.notes,
        }


def class_report(cm: np.ndarray) -> ClassReport:
    counts = per_class_counts(cm)
    tp, fp, fn = counts["tp"], counts["fp"], counts["fn"]
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    flags = ((tp + fp) == 0) | ((tp + fn) == 0) | ((precision + recall) == 0)
    support = np.asarray(cm).sum(axis=1)
    return ClassReport(precision, recall, f1, support, flags)


def aggregate(report: ClassReport, cm: np.ndarray) -> AggregateReport:
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    accuracy = float(np.trace(cm) / total) if total else 0.0
    weights = report.support / total if total else np.zeros_like(report.support, dtype=np.float64)
    return AggregateReport(
        accuracy=accuracy,
        macro_precision=float(report.precision.mean()),
        macro_recall=float(report.recall.mean()),
        macro_f1=float(report.f1.mean()),
        weighted_precision=float(np.sum(weights * report.precision)),
        weighted_recall=float(np.sum(weights * report.recall)),
        weighted_f1=float(np.sum(weights * report.f1)),
        total=total,
    )


# ---------------------------------------------------------------------------
# ROC / AUC


@dataclass
class RocCurve:
    class_index: int
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


def roc_curve(scores: np.ndarray, true_labels: np.ndarray, class_index: int) -> RocCurve:
    """One-vs-rest sweep over unique score thresholds, descending.

    Points start at (0, 0) (threshold above every score) and end at (1, 1);
    both axes are monotone non-decreasing along the sweep.
    """
    scores = np.asarray(scores, dtype=np.float64)
    y = (np.asarray(true_labels).ravel() == class_index).astype(np.int64)
    s = scores[:, class_index] if scores.ndim == 2 else scores.ravel()
    if s.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{s.shape[0]} scores vs {y.shape[0]} labels")
    n_pos = int(y.sum())
    n_neg = int(y.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise SingleClassOnly(f"class {class_index}: need both positives and negatives for ROC")

    order = np.argsort(-s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]
    tp_cum = np.cumsum(y_sorted)
    fp_cum = np.cumsum(1 - y_sorted)
    # Keep one operating point per distinct threshold (last index of each run).
    distinct = np.nonzero(np.diff(s_sorted))[0]
    cut = np.concatenate([distinct, [s.size - 1]])
    tpr = np.concatenate([[0.0], tp_cum[cut] / n_pos])
    fpr = np.concatenate([[0.0], fp_cum[cut] / n_neg])
    thresholds = np.concatenate([[np.inf], s_sorted[cut]])
    return RocCurve(class_index, fpr, tpr, thresholds)


def auc(curve: RocCurve) -> float:
    return float(np.trapezoid(curve.tpr, curve.fpr))


def micro_roc_curve(scores: np.ndarray, true_labels: np.ndarray) -> RocCurve:
    """Micro-average curve: every (sample, class) pair becomes one binary
    decision, pooled before the sweep."""
    scores = np.asarray(scores, dtype=np.float64)
    n, k = scores.shape
    onehot = np.zeros((n, k), dtype=np.int64)
    onehot[np.arange(n), np.asarray(true_labels).ravel()] = 1
    curve = roc_curve(scores.ravel(), onehot.ravel(), class_index=1)
    return RocCurve(-1, curve.fpr, curve.tpr, curve.thresholds)


# ---------------------------------------------------------------------------
# Export


def full_report(true_labels: np.ndarray, predicted_labels: np.ndarray, scores: np.ndarray | None = None) -> dict:
    cm = confusion_matrix(true_labels, predicted_labels)
    rep = class_report(cm)
    agg = aggregate(rep, cm)
    out = {
        "confusion_matrix": cm.tolist(),
        "per_class": rep.to_jsonable(),
        "aggregate": agg.to_jsonable(),
    }
    if scores is not None:
        aucs = {}
        for c in range(N_CLASSES):
            try:
                aucs[CLASS_NAMES[c]] = auc(roc_curve(scores, true_labels, c))
            except SingleClassOnly:
                aucs[CLASS_NAMES[c]] = None
        out["auc"] = aucs
    return out


def render_text_report(report: dict) -> str:
    """Aligned text tables: overall aggregates, then per-class rows."""
    agg = report["aggregate"]
    lines = [
        "Overall",
        f"  accuracy            {agg['accuracy']:.4f}",
        f"  macro    P/R/F1     {agg['macro']['precision']:.4f} / {agg['macro']['recall']:.4f} / {agg['macro']['f1']:.4f}",
        f"  weighted P/R/F1     {agg['weighted']['precision']:.4f} / {agg['weighted']['recall']:.4f} / {agg['weighted']['f1']:.4f}",
        "",
        f"{'Class':<8} {'Precision':>10} {'Recall':>10} {'F1':>10} {'Support':>10}",
    ]
    for name in CLASS_NAMES:
        row = report["per_class"][name]
        lines.append(
            f"{name:<8} {row['precision']:>10.4f} {row['recall']:>10.4f} {row['f1']:>10.4f} {row['support']:>10d}"
        )
    if report.get("auc"):
        lines.append("")
        lines.append(f"{'Class':<8} {'AUC':>10}")
        for name, value in report["auc"].items():
            lines.append(f"{name:<8} {'n/a' if value is None else f'{value:>10.4f}'}")
    for note in agg.get("notes", []):
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def save_report(report: dict, out_dir: str | Path, scores: np.ndarray | None = None, true_labels: np.ndarray | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "metrics.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    (out / "metrics.txt").write_text(render_text_report(report))
    if scores is not None and true_labels is not None:
        for c, name in enumerate(CLASS_NAMES):
            try:
                curve = roc_curve(scores, true_labels, c)
            except SingleClassOnly:
                continue
            rows = ["fpr,tpr,threshold"] + [
                f"{f},{t},{th}" for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)
            ]
            (out / f"roc_{name.lower()}.csv").write_text("\n".join(rows) + "\n")
        micro = micro_roc_curve(scores, true_labels)
        rows = ["fpr,tpr,threshold"] + [
            f"{f},{t},{th}" for f, t, th in zip(micro.fpr, micro.tpr, micro.thresholds)
        ]
        (out / "roc_micro.csv").write_text("\n".join(rows) + "\n")
