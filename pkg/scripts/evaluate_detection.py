#!/usr/bin/env python3
"""Train and evaluate the detection baselines on a generated corpus.

Expects the directory produced by generate_dataset.py; trains the CART
baseline on the train split, reports the metric table on the test split,
and runs the centroid reconstruction-error detector over a 50/30/20
Normal-vs-Malicious split of the combined set.

    python scripts/evaluate_detection.py --data data/ [--seed 42]
"""

import argparse
import sys
import time
from pathlib import Path

from h3forge.detect import (
    anomaly_classify,
    anomaly_fit,
    calibrate_threshold,
    evaluate,
    format_reports,
    predict,
    rows_to_matrix,
    save_model,
    train_tree,
)
from h3forge.features import read_csv, stratified_split


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data", help="corpus directory")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args(argv)
    data = Path(args.data)

    columns, train_rows = read_csv(data / "features_train.csv")
    _, test_rows = read_csv(data / "features_test.csv")
    X_train, y_train = rows_to_matrix(train_rows, columns)
    X_test, y_test = rows_to_matrix(test_rows, columns)

    t0 = time.perf_counter()
    model = train_tree(X_train, y_train, columns=columns)
    train_time = time.perf_counter() - t0
    save_model(data / "tree.json", model)
    predictions, scores = predict(model, X_test)
    report = evaluate(
        predictions, y_test, classes=model.classes, scores=scores, train_time=train_time
    )
    print(format_reports({"DT": report}))
    print("confusion (rows = truth):")
    width = max(len(c) for c in report.classes)
    for cls, row in zip(report.classes, report.confusion):
        print(f"  {cls:<{width}} {row}")

    _, all_rows = read_csv(data / "features_all.csv")
    binary = ["Normal" if r.label == "Normal" else "Malicious" for r in all_rows]
    train, test, validation = stratified_split(all_rows, [0.5, 0.3, 0.2], seed=args.seed, labels=binary)
    train_normal = [r for r in train if r.label == "Normal"]
    X_normal, _ = rows_to_matrix(train_normal, columns)
    anomaly = anomaly_fit(X_normal, columns=columns)
    X_val, val_labels = rows_to_matrix(validation, columns)
    threshold = calibrate_threshold(anomaly, X_val, [l != "Normal" for l in val_labels])
    X_t, t_labels = rows_to_matrix(test, columns)
    preds = anomaly_classify(anomaly, X_t)
    truths = ["Malicious" if l != "Normal" else "Normal" for l in t_labels]
    anomaly_report = evaluate(preds, truths, classes=["Normal", "Malicious"])
    save_model(data / "anomaly.json", anomaly)
    print(f"\ncentroid-MAE threshold={threshold:.4f}")
    print(format_reports({"centroid-MAE": anomaly_report}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
