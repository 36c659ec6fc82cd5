"""Self-contained detection baselines.

A Gini CART classifier grown best-first under four structural constraints
(max depth, max leaves, min samples per leaf, min samples to split), the
AUC/precision/recall/F1/accuracy metric suite with a fixed-order confusion
matrix, and a centroid reconstruction-error anomaly scorer (train on
Normal only, score by mean absolute deviation, threshold calibrated by F1
maximization on validation).

No ML framework underneath: everything here is verifiable against the
hand oracles in the test suite.
"""

from __future__ import annotations

import heapq
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .features import CLASS_LABELS, ProcessedRow


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 200
    max_leaf_nodes: int = 1000
    min_samples_leaf: int = 2
    min_samples_split: int = 10

    def validate(self) -> None:
        for name in ("max_depth", "max_leaf_nodes", "min_samples_leaf", "min_samples_split"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


@dataclass
class TreeNode:
    counts: np.ndarray  # per-class sample counts reaching this node
    depth: int
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    def to_dict(self) -> dict:
        d = {"counts": [int(c) for c in self.counts], "depth": self.depth}
        if not self.is_leaf:
            d.update(
                feature=self.feature,
                threshold=self.threshold,
                left=self.left.to_dict(),
                right=self.right.to_dict(),
            )
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        node = cls(counts=np.asarray(d["counts"], dtype=float), depth=d["depth"])
        if "feature" in d:
            node.feature = d["feature"]
            node.threshold = d["threshold"]
            node.left = cls.from_dict(d["left"])
            node.right = cls.from_dict(d["right"])
        return node


@dataclass
class DecisionTree:
    params: TreeParams
    classes: list[str]
    columns: list[str]
    root: TreeNode

    def leaves(self) -> list[TreeNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend((node.left, node.right))
        return out

    def depth(self) -> int:
        return max(leaf.depth for leaf in self.leaves())

    def to_dict(self) -> dict:
        return {
            "kind": "tree",
            "params": self.params.__dict__,
            "classes": self.classes,
            "columns": self.columns,
            "root": self.root.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DecisionTree":
        return cls(
            params=TreeParams(**d["params"]),
            classes=list(d["classes"]),
            columns=list(d["columns"]),
            root=TreeNode.from_dict(d["root"]),
        )


def _gini_weighted(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    return float(n - (counts**2).sum() / n)  # n * gini


def _best_split(X: np.ndarray, y: np.ndarray, idx: np.ndarray, n_classes: int, min_leaf: int):
    """Exact best Gini split over the samples in ``idx``.

    Returns (gain, feature, threshold, left_idx, right_idx) or None.
    Gain is the unnormalized impurity decrease n*gini(parent) - sum child.
    """
    n = idx.size
    y_node = y[idx]
    counts = np.bincount(y_node, minlength=n_classes).astype(float)
    parent = _gini_weighted(counts)
    best = None
    for f in range(X.shape[1]):
        col = X[idx, f]
        order = np.argsort(col, kind="stable")
        vals = col[order]
        labels = y_node[order]
        boundaries = np.nonzero(vals[:-1] != vals[1:])[0]
        if boundaries.size == 0:
            continue
        one_hot = np.zeros((n, n_classes))
        one_hot[np.arange(n), labels] = 1.0
        cum = one_hot.cumsum(axis=0)
        n_left = boundaries + 1
        n_right = n - n_left
        valid = (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        b = boundaries[valid]
        left_counts = cum[b]
        right_counts = counts - left_counts
        nl = (b + 1).astype(float)
        nr = n - nl
        child = (nl - (left_counts**2).sum(axis=1) / nl) + (nr - (right_counts**2).sum(axis=1) / nr)
        pos = int(np.argmin(child))
        gain = parent - float(child[pos])
        if gain > 1e-12 and (best is None or gain > best[0]):
            cut = b[pos]
            threshold = float((vals[cut] + vals[cut + 1]) / 2.0)
            best = (gain, f, threshold, idx[order[: cut + 1]], idx[order[cut + 1 :]])
    return best


def train_tree(
    X: np.ndarray,
    labels: Sequence[str],
    params: TreeParams = TreeParams(),
    columns: Optional[Sequence[str]] = None,
) -> DecisionTree:
    """Grow a CART best-first so the leaf budget spends on the largest
    impurity decreases, honoring all four structural constraints."""
    params.validate()
    X = np.asarray(X, dtype=float)
    classes = _class_order(set(labels))
    if len(classes) < 2:
        warnings.warn("training data carries a single class; model is a single leaf")
    index = {c: i for i, c in enumerate(classes)}
    y = np.asarray([index[l] for l in labels], dtype=int)
    n_classes = len(classes)
    columns = list(columns) if columns is not None else [f"f{i}" for i in range(X.shape[1])]

    root_idx = np.arange(X.shape[0])
    root = TreeNode(counts=np.bincount(y, minlength=n_classes).astype(float), depth=0)
    heap: list = []
    counter = 0

    def consider(node: TreeNode, idx: np.ndarray) -> None:
        nonlocal counter
        if node.depth >= params.max_depth or idx.size < params.min_samples_split:
            return
        split = _best_split(X, y, idx, n_classes, params.min_samples_leaf)
        if split is not None:
            heapq.heappush(heap, (-split[0], counter, node, split))
            counter += 1

    consider(root, root_idx)
    n_leaves = 1
    while heap and n_leaves < params.max_leaf_nodes:
        _, _, node, (gain, f, threshold, left_idx, right_idx) = heapq.heappop(heap)
        node.feature = f
        node.threshold = threshold
        node.left = TreeNode(
            counts=np.bincount(y[left_idx], minlength=n_classes).astype(float), depth=node.depth + 1
        )
        node.right = TreeNode(
            counts=np.bincount(y[right_idx], minlength=n_classes).astype(float), depth=node.depth + 1
        )
        n_leaves += 1
        consider(node.left, left_idx)
        consider(node.right, right_idx)

    return DecisionTree(params=params, classes=classes, columns=columns, root=root)


def predict(model: DecisionTree, X: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Labels plus per-class leaf-frequency scores (each row sums to 1)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.columns):
        raise ValueError(
            f"feature matrix has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"model expects {len(model.columns)}"
        )
    scores = np.empty((X.shape[0], len(model.classes)))
    for i, row in enumerate(X):
        node = model.root
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        scores[i] = node.counts / node.counts.sum()
    labels = [model.classes[j] for j in scores.argmax(axis=1)]
    return labels, scores


def _class_order(present: Iterable[str]) -> list[str]:
    present = set(present)
    ordered = [c for c in CLASS_LABELS if c in present]
    ordered.extend(sorted(present - set(CLASS_LABELS)))
    return ordered


@dataclass
class MetricsReport:
    """Percent-scale metrics plus the confusion matrix (rows = truth)."""

    precision: float
    recall: float
    f1: float
    accuracy: float
    classes: list[str]
    confusion: list[list[int]]
    auc: Optional[float] = None
    train_time: float = 0.0
    per_class: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "classes": self.classes,
            "confusion": self.confusion,
            "train_time": self.train_time,
            "per_class": self.per_class,
        }

    def format_row(self, name: str) -> str:
        auc = f"{self.auc:6.2f}" if self.auc is not None else "   n/a"
        tt = format_duration(self.train_time)
        return (
            f"{name:<12}{auc} {self.precision:6.2f} {self.recall:6.2f} "
            f"{self.f1:6.2f} {self.accuracy:6.2f} {tt:>9}"
        )


METRICS_HEADER = f"{'Model name':<12}{'AUC':>6} {'Prec.':>6} {'Recall':>6} {'F1':>6} {'Acc':>6} {'T.t.':>9}"


def format_duration(seconds: float) -> str:
    seconds = int(round(seconds))
    return f"{seconds // 3600:02d}:{seconds % 3600 // 60:02d}:{seconds % 60:02d}"


def format_reports(reports: dict[str, MetricsReport]) -> str:
    lines = [METRICS_HEADER]
    lines.extend(report.format_row(name) for name, report in reports.items())
    return "\n".join(lines)


def evaluate(
    predictions: Sequence[str],
    truths: Sequence[str],
    *,
    classes: Optional[Sequence[str]] = None,
    scores: Optional[np.ndarray] = None,
    score_classes: Optional[Sequence[str]] = None,
    train_time: float = 0.0,
) -> MetricsReport:
    """Macro-averaged precision/recall/F1, accuracy, and the confusion
    matrix in fixed class order; AUC included when scores are supplied."""
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths differ in length")
    if not truths:
        raise ValueError("cannot evaluate an empty prediction set")
    if classes is None:
        classes = _class_order(set(truths) | set(predictions))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=int)
    for truth, pred in zip(truths, predictions):
        confusion[index[truth], index[pred]] += 1

    precisions, recalls, f1s = [], [], []
    per_class = {}
    for i, cls in enumerate(classes):
        tp = confusion[i, i]
        fp = confusion[:, i].sum() - tp
        fn = confusion[i, :].sum() - tp
        if confusion[i, :].sum() == 0:
            continue  # class absent from truths: excluded from macro averages
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        precisions.append(precision)
        recalls.append(recall)
        f1s.append(f1)
        per_class[cls] = {
            "precision": 100 * precision,
            "recall": 100 * recall,
            "f1": 100 * f1,
            "support": int(confusion[i, :].sum()),
        }

    auc = None
    if scores is not None:
        auc = auc_ovr(scores, truths, classes=score_classes or classes)
    return MetricsReport(
        precision=100 * float(np.mean(precisions)),
        recall=100 * float(np.mean(recalls)),
        f1=100 * float(np.mean(f1s)),
        accuracy=100 * float(confusion.trace() / confusion.sum()),
        classes=list(classes),
        confusion=confusion.tolist(),
        auc=auc,
        train_time=train_time,
        per_class=per_class,
    )


def _binary_auc(scores: np.ndarray, positives: np.ndarray) -> float:
    """Rank-statistic ROC AUC with tie correction (equals the trapezoid
    area under the tie-aware ROC curve)."""
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    pos_rank_sum = ranks[positives].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_ovr(scores: np.ndarray, truths: Sequence[str], *, classes: Sequence[str]) -> float:
    """Macro one-vs-rest ROC AUC, percent scale.

    Classes absent from the truths (or without negatives) are excluded
    from the average with a warning.
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != len(classes):
        raise ValueError("scores must be (n_samples, n_classes)")
    truths = list(truths)
    aucs = []
    for j, cls in enumerate(classes):
        positives = np.asarray([t == cls for t in truths])
        if positives.sum() == 0 or positives.all():
            warnings.warn(f"class {cls!r} lacks positives or negatives; excluded from AUC")
            continue
        aucs.append(_binary_auc(scores[:, j], positives))
    if not aucs:
        raise ValueError("no class had both positives and negatives")
    return 100 * float(np.mean(aucs))


# ---------------------------------------------------------------------------
# Centroid reconstruction-error anomaly baseline
# ---------------------------------------------------------------------------

@dataclass
class AnomalyModel:
    centroid: np.ndarray  # per-feature mean over Normal training rows
    threshold: Optional[float] = None
    columns: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": "anomaly",
            "centroid": [float(c) for c in self.centroid],
            "threshold": self.threshold,
            "columns": self.columns,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalyModel":
        return cls(
            centroid=np.asarray(d["centroid"], dtype=float),
            threshold=d["threshold"],
            columns=list(d.get("columns", [])),
        )


def anomaly_fit(normal_rows: np.ndarray, columns: Optional[Sequence[str]] = None) -> AnomalyModel:
    normal_rows = np.asarray(normal_rows, dtype=float)
    if normal_rows.size == 0:
        raise ValueError("anomaly fit needs at least one Normal row")
    return AnomalyModel(
        centroid=normal_rows.mean(axis=0),
        columns=list(columns) if columns is not None else [],
    )


def anomaly_score(model: AnomalyModel, rows: np.ndarray) -> np.ndarray:
    """Mean absolute deviation of each row from the Normal centroid."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[None, :]
    return np.abs(rows - model.centroid).mean(axis=1)


def calibrate_threshold(
    model: AnomalyModel, validation_rows: np.ndarray, validation_is_malicious: Sequence[bool]
) -> float:
    """Pick the score threshold maximizing F1 for the Malicious class on
    the validation set; stores it on the model and returns it."""
    flags = np.asarray(list(validation_is_malicious), dtype=bool)
    if not flags.any() or flags.all():
        raise ValueError("calibration needs both Normal and Malicious rows")
    scores = anomaly_score(model, validation_rows)
    uniq = np.unique(scores)
    candidates = (uniq[:-1] + uniq[1:]) / 2.0 if uniq.size > 1 else uniq
    candidates = np.concatenate([candidates, [uniq[-1] + 1.0]])
    best_f1, best_thr = -1.0, None
    for thr in candidates:
        if thr <= 0:
            continue
        pred = scores > thr
        tp = int(np.sum(pred & flags))
        fp = int(np.sum(pred & ~flags))
        fn = int(np.sum(~pred & flags))
        denom = 2 * tp + fp + fn
        f1 = 2 * tp / denom if denom else 0.0
        if f1 > best_f1:
            best_f1, best_thr = f1, float(thr)
    if best_thr is None:
        best_thr = float(uniq[-1] + 1.0)
    model.threshold = best_thr
    return best_thr


def anomaly_classify(model: AnomalyModel, rows: np.ndarray) -> list[str]:
    if model.threshold is None:
        raise ValueError("threshold not calibrated")
    return ["Malicious" if s > model.threshold else "Normal" for s in anomaly_score(model, rows)]


# ---------------------------------------------------------------------------
# Model persistence and matrix helpers
# ---------------------------------------------------------------------------

def rows_to_matrix(
    rows: Sequence[ProcessedRow], columns: Sequence[str]
) -> tuple[np.ndarray, list[str]]:
    X = np.asarray([[row.values[c] for c in columns] for row in rows], dtype=float)
    return X, [row.label for row in rows]


def save_model(path, model) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("kind") == "tree":
        return DecisionTree.from_dict(d)
    if d.get("kind") == "anomaly":
        return AnomalyModel.from_dict(d)
    raise ValueError(f"{path}: unknown model kind {d.get('kind')!r}")
