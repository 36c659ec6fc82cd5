"""Metric reports with the fixed column sets of the shallow and DNN
result tables."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sklearn.metrics import (
    accuracy_score,
    confusion_matrix,
    precision_recall_fscore_support,
    roc_auc_score,
)

SHALLOW_REPORT_COLUMNS = ["Model name", "AUC", "Prec.", "Recall", "F1", "Acc", "T.t."]
DNN_REPORT_COLUMNS = ["Model name", "AUC", "Prec.", "Recall", "F1", "Acc", "Epochs", "T.t."]


@dataclass
class MetricsReport:
    model: str
    auc: float
    precision: float
    recall: float
    f1: float
    accuracy: float
    train_time: float
    epochs: Optional[int] = None
    confusion: list = field(default_factory=list)
    classes: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    def columns(self) -> list[str]:
        return DNN_REPORT_COLUMNS if self.epochs is not None else SHALLOW_REPORT_COLUMNS

    def row(self) -> dict:
        row = {
            "Model name": self.model,
            "AUC": round(self.auc, 2),
            "Prec.": round(self.precision, 2),
            "Recall": round(self.recall, 2),
            "F1": round(self.f1, 2),
            "Acc": round(self.accuracy, 2),
        }
        if self.epochs is not None:
            row["Epochs"] = self.epochs
        row["T.t."] = format_duration(self.train_time)
        return row

    def to_dict(self) -> dict:
        d = self.row()
        d["confusion"] = self.confusion
        d["classes"] = self.classes
        d.update(self.extras)
        return d


def format_duration(seconds: float) -> str:
    seconds = int(round(seconds))
    return f"{seconds // 3600:02d}:{seconds % 3600 // 60:02d}:{seconds % 60:02d}"


def compute_report(
    model_name: str,
    truths,
    predictions,
    scores: Optional[np.ndarray] = None,
    *,
    classes: Optional[list] = None,
    train_time: float = 0.0,
    epochs: Optional[int] = None,
) -> MetricsReport:
    """Macro-averaged percent-scale metrics; AUC is macro one-vs-rest when
    per-class scores are available, otherwise one-vs-rest on the binary
    indicator."""
    if classes is None:
        classes = sorted(set(truths))
    precision, recall, f1, _ = precision_recall_fscore_support(
        truths, predictions, labels=classes, average="macro", zero_division=0
    )
    accuracy = accuracy_score(truths, predictions)
    auc = float("nan")
    if scores is not None:
        if len(classes) == 2:
            auc = roc_auc_score((np.asarray(truths) == classes[1]).astype(int), scores[:, 1])
        else:
            auc = roc_auc_score(truths, scores, multi_class="ovr", average="macro", labels=classes)
    return MetricsReport(
        model=model_name,
        auc=100 * float(auc),
        precision=100 * float(precision),
        recall=100 * float(recall),
        f1=100 * float(f1),
        accuracy=100 * float(accuracy),
        train_time=train_time,
        epochs=epochs,
        confusion=confusion_matrix(truths, predictions, labels=classes).tolist(),
        classes=list(classes),
    )


def render_table(reports: list[MetricsReport]) -> str:
    columns = reports[0].columns() if reports else SHALLOW_REPORT_COLUMNS
    widths = {c: max(len(c), 12 if c == "Model name" else 8) for c in columns}
    header = "".join(f"{c:<{widths[c] + 1}}" for c in columns)
    lines = [header.rstrip()]
    for report in reports:
        row = report.row()
        lines.append("".join(f"{str(row[c]):<{widths[c] + 1}}" for c in columns).rstrip())
    return "\n".join(lines)
