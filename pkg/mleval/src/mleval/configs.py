"""Model hyperparameter configurations.

Defaults are the published tuned values per classifier; change them via
dataclasses.replace or the CLI flags, not by editing here.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def _dt_params() -> dict:
    return {
        "max_depth": 200,
        "max_leaf_nodes": 1000,
        "min_samples_leaf": 2,
        "min_samples_split": 10,
        "ccp_alpha": 0.0001,
    }


def _lgbm_params() -> dict:
    return {
        "max_depth": 1000,
        "max_bin": 2000,
        "min_child_samples": 30,
        "min_data_in_bin": 50,
        "min_split_gain": 0.1,
        "n_estimators": 1000,
        "num_leaves": 3000,
        "learning_rate": 0.01,
        "reg_alpha": 0.001,
        "reg_lambda": 0.001,
        "n_jobs": 1,
    }


def _bagging_params() -> dict:
    return {
        "n_estimators": 500,
        "max_samples": 100_000,
    }


@dataclass(frozen=True)
class ShallowConfig:
    dt: dict = field(default_factory=_dt_params)
    lightgbm: dict = field(default_factory=_lgbm_params)
    bagging: dict = field(default_factory=_bagging_params)
    seed: int = 0


@dataclass(frozen=True)
class DnnConfig:
    # shared trainer settings
    learning_rate: float = 0.01
    momentum: float = 0.9
    batch_size: int = 256
    early_stop_patience: int = 2
    # desk-scale guards: epochs here see orders of magnitude fewer batches
    # than the original corpus, so the min-loss stopper only engages after
    # a warm-up and counts an epoch as improving when the change is
    # measurable
    early_stop_warmup: int = 15
    early_stop_min_delta: float = 1e-4
    max_epochs: int = 100  # the tuned models converged well under this
    validation_split: float = 0.1
    seed: int = 0
    # MLP
    mlp_layers: tuple[int, ...] = (300, 200, 160, 120, 60, 30, 10)
    mlp_dropout: tuple[float, ...] = (0.25, 0.25, 0.25, 0.2, 0.2, 0.2, 0.2)
    mlp_initializer: str = "he_uniform"
    # stacked denoising autoencoder used as a classifier
    ae_layers: tuple[int, ...] = (300, 200, 160, 120, 60, 30, 10, 30, 60, 120, 160, 200, 300)
    ae_dropout: float = 0.25  # input corruption (denoising)
    # TextCNN
    cnn_filters: tuple[tuple[int, int], ...] = ((64, 12), (128, 10), (256, 12))
    cnn_dense: int = 200
    cnn_dropout: float = 0.2
    cnn_embedding_dim: int = 16
