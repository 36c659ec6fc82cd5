#!/usr/bin/env python3
"""Generate the full ten-attack dry-run corpus.

For each dataset attack this runs the published campaign timeline against
the default six-server rotation, labels the traffic, and writes per-attack
events/manifest/labeled-CSV trios plus a combined preprocessed feature set
(60/40 stratified, pipeline fitted on the training split).

    python scripts/generate_dataset.py --out data/ --seed 42 [--clients 13]
"""

import argparse
import sys
from pathlib import Path

from h3forge.campaign import BenignClientModel, build_schedule, run_campaign
from h3forge.capture import events_to_packets, label_packets, write_labeled_csv
from h3forge.engine import AttackKind, TrafficSink
from h3forge.features import (
    DEFAULT_SCHEMA,
    FeaturePipeline,
    extract_row,
    stratified_split,
    write_csv,
)

DATASET_KINDS = [
    AttackKind.HTTP3_FLOOD,
    AttackKind.FUZZING,
    AttackKind.HTTP3_LORIS,
    AttackKind.HTTP3_TABLES_STREAMS,
    AttackKind.QUIC_FLOOD,
    AttackKind.QUIC_LORIS,
    AttackKind.QUIC_ENC,
    AttackKind.HTTP_SMUGGLE,
    AttackKind.HTTP2_CONCURRENT,
    AttackKind.HTTP2_PAUSE,
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--clients", type=int, default=13)
    parser.add_argument("--split", default="0.6,0.4")
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fractions = [float(v) for v in args.split.split(",")]

    raw, classes = [], []
    for i, kind in enumerate(DATASET_KINDS):
        campaign_dir = out / kind.value
        campaign_dir.mkdir(exist_ok=True)
        schedule = build_schedule(kind)
        log = run_campaign(
            schedule,
            BenignClientModel(client_count=args.clients, seed=args.seed + i),
            TrafficSink(mode="dry_run"),
            seed=args.seed + i,
        )
        log.write(campaign_dir / "events.ndjson", campaign_dir / "manifest.json")
        packets = events_to_packets(log.events)
        labeled = label_packets(packets, log.manifest)
        write_labeled_csv(campaign_dir / "labeled.csv", labeled)
        raw.extend(extract_row(ev) for ev in log.events)
        classes.extend(lp.cls for lp in labeled)
        malicious = sum(1 for lp in labeled if lp.label != "Normal")
        print(f"{kind.value:<22}{len(log.events):>8} events  {malicious:>8} malicious")

    indexed = list(range(len(raw)))
    parts = stratified_split(indexed, fractions, seed=args.seed, labels=classes)
    pipeline = FeaturePipeline.fit([raw[i] for i in parts[0]])
    names = ["train", "test"] if len(parts) == 2 else [f"part{i}" for i in range(len(parts))]
    for name, part in zip(names, parts):
        rows = pipeline.transform([raw[i] for i in part], [classes[i] for i in part])
        write_csv(out / f"features_{name}.csv", rows, pipeline)
        print(f"features_{name}.csv: {len(rows)} rows x {len(pipeline.columns) + 1} columns")
    all_rows = pipeline.transform(raw, classes)
    write_csv(out / "features_all.csv", all_rows, pipeline)
    DEFAULT_SCHEMA.save(out / "schema.json")
    print(f"features_all.csv: {len(all_rows)} rows; schema registry -> {out / 'schema.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
