"""mleval command line: shallow, dnn, and anomaly evaluations over
feature CSVs produced by the traffic toolkit.

    mleval shallow --train features_train.csv --test features_test.csv --out results/
    mleval dnn     --train features_train.csv --test features_test.csv --out results/
    mleval anomaly --data features_all.csv --out results/
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .configs import DnnConfig, ShallowConfig
from .report import render_table


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mleval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_shallow = sub.add_parser("shallow", help="DT / LightGBM / Bagging")
    p_shallow.add_argument("--train", required=True)
    p_shallow.add_argument("--test", required=True)
    p_shallow.add_argument("--models", help="comma-separated subset (DT,LightGBM,Bagging)")
    p_shallow.add_argument("--seed", type=int, default=0)
    p_shallow.add_argument("--out", default=".")

    p_dnn = sub.add_parser("dnn", help="MLP / AE / TextCNN")
    p_dnn.add_argument("--train", required=True)
    p_dnn.add_argument("--test", required=True)
    p_dnn.add_argument("--models", help="comma-separated subset (MLP,AE,TextCNN)")
    p_dnn.add_argument("--seed", type=int, default=0)
    p_dnn.add_argument("--max-epochs", type=int, default=100)
    p_dnn.add_argument("--out", default=".")

    p_anomaly = sub.add_parser("anomaly", help="autoencoder reconstruction error")
    p_anomaly.add_argument("--data", required=True)
    p_anomaly.add_argument("--seed", type=int, default=0)
    p_anomaly.add_argument("--max-epochs", type=int, default=100)
    p_anomaly.add_argument("--out", default=".")

    return parser


def _write(out_dir: str, name: str, payload) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(json.dumps(payload, indent=2) + "\n")
    return path


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    models = args.models.split(",") if getattr(args, "models", None) else None

    if args.command == "shallow":
        from .shallow import run_shallow

        reports = run_shallow(
            args.train, args.test, ShallowConfig(seed=args.seed), models=models
        )
        print(render_table(reports))
        _write(args.out, "shallow_reports.json", [r.to_dict() for r in reports])
        return 0

    if args.command == "dnn":
        from .dnn import run_dnn

        config = DnnConfig(seed=args.seed, max_epochs=args.max_epochs)
        reports = run_dnn(args.train, args.test, config, models=models)
        print(render_table(reports))
        _write(args.out, "dnn_reports.json", [r.to_dict() for r in reports])
        return 0

    if args.command == "anomaly":
        from .anomaly import REFERENCE, run_anomaly_ae

        config = DnnConfig(seed=args.seed, max_epochs=args.max_epochs)
        result = run_anomaly_ae(args.data, config)
        print(render_table([result.report]))
        print(
            f"threshold={result.threshold:.4f} final_train_mae={result.final_train_mae:.4f} "
            f"(reference: threshold {REFERENCE['threshold']}, "
            f"P {REFERENCE['Prec.']}, R {REFERENCE['Recall']}, "
            f"F1 {REFERENCE['F1']}, Acc {REFERENCE['Acc']})"
        )
        _write(args.out, "anomaly_report.json", result.to_dict())
        return 0

    return 1


if __name__ == "__main__":
    sys.exit(main())
