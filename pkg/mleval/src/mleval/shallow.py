"""Shallow classifier harness: decision tree, gradient-boosted trees, and
bagging, each grid-searched with 2-fold validation on the F1 score and
then fitted on the full training CSV.

The gradient-boosted model is nominally LightGBM; that package is not
available here, so scikit-learn's HistGradientBoostingClassifier backs it
with a documented parameter mapping (the configured values are preserved
in the config object):

    max_depth -> max_depth, n_estimators -> max_iter,
    num_leaves -> max_leaf_nodes, min_child_samples -> min_samples_leaf,
    reg_lambda -> l2_regularization, learning_rate -> learning_rate,
    max_bin -> max_bins (capped at the backend's 255 limit);
    min_data_in_bin / min_split_gain / reg_alpha have no equivalent.
"""

from __future__ import annotations

import time
from typing import Optional

import numpy as np
from sklearn.ensemble import BaggingClassifier, HistGradientBoostingClassifier
from sklearn.model_selection import GridSearchCV
from sklearn.tree import DecisionTreeClassifier

from .configs import ShallowConfig
from .data import check_same_schema, load_features
from .report import MetricsReport, compute_report


def _dt(params: dict, seed: int) -> DecisionTreeClassifier:
    return DecisionTreeClassifier(random_state=seed, **params)


def _gbdt(params: dict, seed: int) -> HistGradientBoostingClassifier:
    return HistGradientBoostingClassifier(
        max_depth=params["max_depth"],
        max_iter=params["n_estimators"],
        max_leaf_nodes=params["num_leaves"],
        min_samples_leaf=params["min_child_samples"],
        l2_regularization=params["reg_lambda"],
        learning_rate=params["learning_rate"],
        max_bins=min(params["max_bin"], 255),
        early_stopping=True,
        n_iter_no_change=10,
        random_state=seed,
    )


def _bagging(params: dict, seed: int, n_train: int) -> BaggingClassifier:
    # the sample cap cannot exceed the smallest CV fold
    max_samples = min(params["max_samples"], max(n_train // 2, 1))
    return BaggingClassifier(
        n_estimators=params["n_estimators"], max_samples=max_samples, random_state=seed
    )


def run_shallow(
    train_csv,
    test_csv,
    config: ShallowConfig = ShallowConfig(),
    *,
    grids: Optional[dict[str, dict[str, list]]] = None,
    models: Optional[list[str]] = None,
) -> list[MetricsReport]:
    """Fit and evaluate the three shallow classifiers.

    ``grids`` optionally widens the per-model parameter grids; by default
    each grid is the single configured combination, so the 2-fold search
    structure is exercised without extra cost.
    """
    X_train, y_train, cols_train = load_features(train_csv)
    X_test, y_test, cols_test = load_features(test_csv)
    check_same_schema(cols_train, cols_test, str(train_csv), str(test_csv))
    classes = sorted(set(y_train) | set(y_test))

    estimators = {
        "DT": _dt(config.dt, config.seed),
        "LightGBM": _gbdt(config.lightgbm, config.seed),
        "Bagging": _bagging(config.bagging, config.seed, len(X_train)),
    }
    reports = []
    for name, estimator in estimators.items():
        if models is not None and name not in models:
            continue
        grid = (grids or {}).get(name, {})
        search = GridSearchCV(estimator, grid, cv=2, scoring="f1_macro", refit=True)
        t0 = time.perf_counter()
        search.fit(X_train, y_train)
        elapsed = time.perf_counter() - t0
        best = search.best_estimator_
        predictions = best.predict(X_test)
        scores = best.predict_proba(X_test)
        report = compute_report(
            name, y_test, predictions, np.asarray(scores),
            classes=classes, train_time=elapsed,
        )
        report.extras["best_params"] = search.best_params_
        reports.append(report)
    return reports
