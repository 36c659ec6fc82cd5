"""Feature CSV loading and split helpers.

The CSVs come from the traffic toolkit: preprocessed feature columns with
the Label column last. Nothing here imports the producer package; files
are the only interface.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

LABEL_COLUMN = "Label"
NORMAL = "Normal"
MALICIOUS = "Malicious"


class SchemaError(ValueError):
    pass


def load_features(path) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Returns (X, labels, feature column names)."""
    frame = pd.read_csv(path)
    if frame.columns[-1] != LABEL_COLUMN:
        raise SchemaError(f"{path}: expected {LABEL_COLUMN!r} as the last column")
    labels = frame[LABEL_COLUMN].astype(str).to_numpy()
    features = frame.drop(columns=[LABEL_COLUMN])
    if features.empty:
        raise SchemaError(f"{path}: no feature columns")
    return features.to_numpy(dtype=np.float32), labels, list(features.columns)


def check_same_schema(cols_a: list[str], cols_b: list[str], a: str, b: str) -> None:
    if cols_a != cols_b:
        raise SchemaError(f"{a} and {b} carry different feature columns")


def to_binary(labels: np.ndarray) -> np.ndarray:
    """Collapse the five classes into Normal vs Malicious."""
    return np.where(labels == NORMAL, NORMAL, MALICIOUS)


def split_50_30_20(
    X: np.ndarray, labels: np.ndarray, seed: int = 0
) -> tuple[tuple, tuple, tuple]:
    """Stratified train/test/validation split at 50/30/20."""
    X_train, X_rest, y_train, y_rest = train_test_split(
        X, labels, train_size=0.5, stratify=labels, random_state=seed
    )
    X_test, X_val, y_test, y_val = train_test_split(
        X_rest, y_rest, train_size=0.6, stratify=y_rest, random_state=seed
    )
    return (X_train, y_train), (X_test, y_test), (X_val, y_val)
