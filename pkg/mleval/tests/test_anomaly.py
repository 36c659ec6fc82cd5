import numpy as np
import pytest

from mleval.anomaly import REFERENCE, best_f1_threshold, run_anomaly_ae
from mleval.configs import DnnConfig
from mleval.data import MALICIOUS, NORMAL


@pytest.fixture(scope="module")
def result(anomaly_csv):
    return run_anomaly_ae(anomaly_csv, DnnConfig(seed=5, max_epochs=40))


def test_detects_shifted_cluster(result):
    assert result.report.f1 >= 90.0
    assert result.threshold > 0


def test_report_includes_reference_row(result):
    payload = result.to_dict()
    assert payload["reference"] == REFERENCE
    assert REFERENCE["threshold"] == 0.33
    assert (REFERENCE["Prec."], REFERENCE["Recall"]) == (91.75, 96.60)
    assert (REFERENCE["F1"], REFERENCE["Acc"]) == (94.11, 88.94)
    assert payload["threshold"] == result.threshold


def test_training_metadata(result):
    assert result.report.epochs == len(result.loss_curve)
    assert result.final_train_mae == result.loss_curve[-1]
    assert len(result.test_scores) == len(result.test_labels)
    assert set(result.test_labels) == {NORMAL, MALICIOUS}


def test_no_overfit_beyond_patience(result):
    # early stopping: once the stopper engages (after warm-up), at most
    # `patience` epochs may trail the best validation loss
    warmup = DnnConfig().early_stop_warmup
    curve = result.val_loss_curve
    monitored = curve[warmup:] if len(curve) > warmup else curve
    best = int(np.argmin(monitored))
    assert len(monitored) - 1 - best <= 2


def test_reconstruction_error_separates_classes(result):
    scores = np.asarray(result.test_scores)
    labels = np.asarray(result.test_labels)
    assert scores[labels == MALICIOUS].mean() > scores[labels == NORMAL].mean()


def test_best_f1_threshold_hand_case():
    scores = np.array([0.1, 0.2, 0.8, 0.9])
    flags = np.array([False, False, True, True])
    threshold = best_f1_threshold(scores, flags)
    assert 0.2 < threshold < 0.8
    assert ((scores > threshold) == flags).all()


def test_missing_normal_rows_rejected(tmp_path):
    import pandas as pd

    frame = pd.DataFrame({"f0": [0.1, 0.9], "f1": [0.2, 0.8], "Label": ["DDoS-flooding"] * 2})
    path = tmp_path / "no_normal.csv"
    frame.to_csv(path, index=False)
    with pytest.raises(ValueError):
        run_anomaly_ae(path)
