"""Autoencoder anomaly detection over a Normal/Malicious relabeling.

Procedure: stratified 50/30/20 train/test/validation split; the training
subset keeps only Normal rows; the reconstructing autoencoder trains with
an MAE loss; per-sample reconstruction error is thresholded, the
threshold chosen on the validation subset by F1 maximization (standing in
for manual trial and error); the report carries the published reference
row for side-by-side comparison.

The published description gives the reconstructor a single linear output
node, which cannot reproduce a full feature vector; this implementation
reconstructs the whole vector.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from tensorflow import keras

from .configs import DnnConfig
from .data import MALICIOUS, NORMAL, load_features, split_50_30_20, to_binary
from .dnn import build_ae_reconstructor, set_determinism, _optimizer
from .report import MetricsReport, compute_report

# published reference row for this pipeline (not reproduced on synthetic data)
REFERENCE = {
    "threshold": 0.33,
    "Prec.": 91.75,
    "Recall": 96.60,
    "F1": 94.11,
    "Acc": 88.94,
}


@dataclass
class AnomalyResult:
    report: MetricsReport
    threshold: float
    final_train_mae: float
    loss_curve: list[float] = field(default_factory=list)
    val_loss_curve: list[float] = field(default_factory=list)
    test_scores: list[float] = field(default_factory=list)
    test_labels: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = self.report.to_dict()
        d["threshold"] = self.threshold
        d["final_train_mae"] = self.final_train_mae
        d["reference"] = REFERENCE
        return d


def reconstruction_error(model: keras.Model, X: np.ndarray, batch_size: int) -> np.ndarray:
    reconstructed = model.predict(X, batch_size=batch_size, verbose=0)
    return np.abs(reconstructed - X).mean(axis=1)


def best_f1_threshold(scores: np.ndarray, is_malicious: np.ndarray) -> float:
    order = np.argsort(scores)
    uniq = np.unique(scores[order])
    candidates = (uniq[:-1] + uniq[1:]) / 2.0 if uniq.size > 1 else uniq
    best_f1, best_thr = -1.0, float(uniq[-1] + 1.0)
    for thr in candidates:
        pred = scores > thr
        tp = int(np.sum(pred & is_malicious))
        fp = int(np.sum(pred & ~is_malicious))
        fn = int(np.sum(~pred & is_malicious))
        denominator = 2 * tp + fp + fn
        f1 = 2 * tp / denominator if denominator else 0.0
        if f1 > best_f1:
            best_f1, best_thr = f1, float(thr)
    return best_thr


def run_anomaly_ae(dataset_csv, config: DnnConfig = DnnConfig()) -> AnomalyResult:
    X, labels, _ = load_features(dataset_csv)
    binary = to_binary(labels)
    if not (binary == NORMAL).any():
        raise ValueError("dataset has no Normal samples to train on")
    (X_train, y_train), (X_test, y_test), (X_val, y_val) = split_50_30_20(
        X, binary, seed=config.seed
    )
    X_train_normal = X_train[y_train == NORMAL]

    set_determinism(config.seed)
    model = build_ae_reconstructor(X.shape[1], config)
    model.compile(optimizer=_optimizer(config), loss="mae")
    stopper = keras.callbacks.EarlyStopping(
        monitor="val_loss",
        patience=config.early_stop_patience,
        min_delta=config.early_stop_min_delta,
        start_from_epoch=config.early_stop_warmup,
        restore_best_weights=True,
    )
    t0 = time.perf_counter()
    history = model.fit(
        X_train_normal,
        X_train_normal,
        batch_size=config.batch_size,
        epochs=config.max_epochs,
        validation_data=(X_val, X_val),
        callbacks=[stopper],
        verbose=0,
    )
    elapsed = time.perf_counter() - t0

    val_scores = reconstruction_error(model, X_val, config.batch_size)
    threshold = best_f1_threshold(val_scores, y_val == MALICIOUS)

    test_scores = reconstruction_error(model, X_test, config.batch_size)
    predictions = np.where(test_scores > threshold, MALICIOUS, NORMAL)
    report = compute_report(
        "AE-anomaly",
        list(y_test),
        list(predictions),
        np.column_stack([-test_scores, test_scores]),  # error ranks Malicious
        train_time=elapsed,
        epochs=len(history.history["loss"]),
        classes=[NORMAL, MALICIOUS],
    )
    return AnomalyResult(
        report=report,
        threshold=threshold,
        final_train_mae=float(history.history["loss"][-1]),
        loss_curve=[float(v) for v in history.history["loss"]],
        val_loss_curve=[float(v) for v in history.history["val_loss"]],
        test_scores=[float(s) for s in test_scores],
        test_labels=list(y_test),
    )
