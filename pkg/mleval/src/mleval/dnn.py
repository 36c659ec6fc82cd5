"""DNN classifier harness: MLP, stacked denoising autoencoder used as a
classifier, and TextCNN, trained with mini-batch SGD (momentum 0.9),
batch normalization after each hidden layer, softmax outputs, and early
stopping with best-epoch restore after two non-improving epochs.

TextCNN needs integer tokens for its embedding layer. Feature values are
quantized as ``round(clip(x, -1, 1) * 1000) + 1001``: scaled values in
[0, 1] and indicator values in {-1, 0, 1} map to disjoint, order-
preserving tokens in [1, 2001].
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np
import tensorflow as tf
from tensorflow import keras
from tensorflow.keras import layers

from .configs import DnnConfig
from .data import check_same_schema, load_features
from .report import MetricsReport, compute_report

EMBEDDING_VOCAB = 2100


def set_determinism(seed: int) -> None:
    keras.utils.set_random_seed(seed)
    tf.config.experimental.enable_op_determinism()


def _optimizer(config: DnnConfig):
    return keras.optimizers.SGD(learning_rate=config.learning_rate, momentum=config.momentum)


def build_mlp(n_features: int, n_classes: int, config: DnnConfig) -> keras.Model:
    inputs = keras.Input(shape=(n_features,))
    x = inputs
    for width, rate in zip(config.mlp_layers, config.mlp_dropout):
        x = layers.Dense(width, kernel_initializer=config.mlp_initializer)(x)
        x = layers.BatchNormalization()(x)
        x = layers.Activation("relu")(x)
        x = layers.Dropout(rate)(x)
    outputs = layers.Dense(n_classes, activation="softmax")(x)
    return keras.Model(inputs, outputs, name="mlp")


def build_ae_classifier(n_features: int, n_classes: int, config: DnnConfig) -> keras.Model:
    inputs = keras.Input(shape=(n_features,))
    x = layers.Dropout(config.ae_dropout)(inputs)  # denoising corruption
    for width in config.ae_layers:
        x = layers.Dense(width)(x)
        x = layers.BatchNormalization()(x)
        x = layers.Activation("relu")(x)
    outputs = layers.Dense(n_classes, activation="softmax")(x)
    return keras.Model(inputs, outputs, name="ae")


def build_ae_reconstructor(n_features: int, config: DnnConfig) -> keras.Model:
    """Same stacked topology but reconstructing the input vector with a
    linear output; used by the anomaly pipeline with an MAE loss."""
    inputs = keras.Input(shape=(n_features,))
    x = layers.Dropout(config.ae_dropout)(inputs)
    for width in config.ae_layers:
        x = layers.Dense(width)(x)
        x = layers.BatchNormalization()(x)
        x = layers.Activation("relu")(x)
    outputs = layers.Dense(n_features, activation="linear")(x)
    return keras.Model(inputs, outputs, name="ae_reconstructor")


def build_textcnn(n_features: int, n_classes: int, config: DnnConfig) -> keras.Model:
    inputs = keras.Input(shape=(n_features,), dtype="int32")
    x = layers.Embedding(EMBEDDING_VOCAB, config.cnn_embedding_dim)(inputs)
    for i, (filters, kernel) in enumerate(config.cnn_filters):
        x = layers.Conv1D(filters, kernel, padding="same")(x)
        x = layers.BatchNormalization()(x)
        x = layers.Activation("relu")(x)
        x = layers.Dropout(config.cnn_dropout)(x)
        if i < 2:
            x = layers.AveragePooling1D(pool_size=2, padding="same")(x)
        else:
            x = layers.GlobalAveragePooling1D()(x)
    x = layers.Dense(config.cnn_dense)(x)
    x = layers.BatchNormalization()(x)
    x = layers.Activation("relu")(x)
    x = layers.Dropout(config.cnn_dropout)(x)
    outputs = layers.Dense(n_classes, activation="softmax")(x)
    return keras.Model(inputs, outputs, name="textcnn")


def quantize(X: np.ndarray) -> np.ndarray:
    return (np.round(np.clip(X, -1.0, 1.0) * 1000.0) + 1001.0).astype(np.int32)


def _fit(model: keras.Model, X, y, config: DnnConfig):
    model.compile(
        optimizer=_optimizer(config),
        loss="sparse_categorical_crossentropy",
        metrics=["accuracy"],
    )
    stopper = keras.callbacks.EarlyStopping(
        monitor="val_loss",
        patience=config.early_stop_patience,
        min_delta=config.early_stop_min_delta,
        start_from_epoch=config.early_stop_warmup,
        restore_best_weights=True,  # checkpoint on the minimum-loss epoch
    )
    # validation_split slices the tail, and feature CSVs are time-ordered
    order = np.random.default_rng(config.seed).permutation(len(X))
    X, y = X[order], y[order]
    t0 = time.perf_counter()
    history = model.fit(
        X,
        y,
        batch_size=config.batch_size,
        epochs=config.max_epochs,
        validation_split=config.validation_split,
        callbacks=[stopper],
        verbose=0,
    )
    elapsed = time.perf_counter() - t0
    return history, elapsed


MODEL_BUILDERS = {
    "MLP": (build_mlp, False),
    "AE": (build_ae_classifier, False),
    "TextCNN": (build_textcnn, True),
}


def run_dnn(
    train_csv,
    test_csv,
    config: DnnConfig = DnnConfig(),
    *,
    models: Optional[list[str]] = None,
) -> list[MetricsReport]:
    X_train, y_train, cols_train = load_features(train_csv)
    X_test, y_test, cols_test = load_features(test_csv)
    check_same_schema(cols_train, cols_test, str(train_csv), str(test_csv))
    classes = sorted(set(y_train) | set(y_test))
    index = {c: i for i, c in enumerate(classes)}
    y_train_ids = np.asarray([index[c] for c in y_train])

    reports = []
    for name, (builder, integer_input) in MODEL_BUILDERS.items():
        if models is not None and name not in models:
            continue
        set_determinism(config.seed)
        model = builder(X_train.shape[1], len(classes), config)
        Xt = quantize(X_train) if integer_input else X_train
        Xe = quantize(X_test) if integer_input else X_test
        history, elapsed = _fit(model, Xt, y_train_ids, config)
        scores = model.predict(Xe, batch_size=config.batch_size, verbose=0)
        predictions = [classes[i] for i in scores.argmax(axis=1)]
        report = compute_report(
            name, y_test, predictions, scores,
            classes=classes, train_time=elapsed,
            epochs=len(history.history["loss"]),
        )
        report.extras["loss_curve"] = [float(v) for v in history.history["loss"]]
        report.extras["val_loss_curve"] = [float(v) for v in history.history["val_loss"]]
        reports.append(report)
    return reports
