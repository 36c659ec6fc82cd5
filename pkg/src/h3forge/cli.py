"""Command-line entry point.

Subcommands: ``attack`` (single plan/run), ``campaign`` (full dataset
timeline), ``label``, ``features``, ``detect {train,eval,anomaly}``,
``footprint``, and ``stats``.

Exit codes: 0 success, 1 usage error, 2 runtime error, 3 safety
interlock. All file outputs land under ``--out`` (default from the
H3FORGE_OUT environment variable, falling back to the current
directory). Dry-run outputs are deterministic under ``--seed``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from . import campaign as campaign_mod
from . import capture as capture_mod
from . import detect as detect_mod
from . import features as features_mod
from .engine import (
    AttackKind,
    EngineError,
    SETTINGS_VARIANT_HIGH,
    SETTINGS_VARIANT_LOW,
    SafetyError,
    TrafficSink,
    attacker_addresses,
    default_params,
    downgrade_probe,
    plan_attack,
    write_events,
    read_events,
)

OUT_ENV = "H3FORGE_OUT"

PLANNABLE = [k.value for k in AttackKind if k != AttackKind.DOWNGRADE_PROBE]
CAMPAIGN_KINDS = [
    k.value
    for k in AttackKind
    if k not in (AttackKind.DOWNGRADE_PROBE, AttackKind.SLOW_RATE_POST)
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(parser):
    parser.add_argument("--seed", type=int, default=0, help="deterministic seed for dry runs")
    parser.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")


def _add_mode(parser):
    mode = parser.add_mutually_exclusive_group()
    mode.add_argument("--dry-run", dest="live", action="store_false", default=False)
    mode.add_argument("--live", dest="live", action="store_true")
    parser.add_argument(
        "--yes-i-own-this-target",
        dest="acknowledged",
        action="store_true",
        help="required before any live traffic is generated",
    )


def _load_servers(path) -> list[campaign_mod.ServerTarget]:
    if path is None:
        return list(campaign_mod.DEFAULT_SERVERS)
    with open(path, encoding="utf-8") as fh:
        return [campaign_mod.ServerTarget.from_dict(d) for d in json.load(fh)]


def build_parser() -> _Parser:
    parser = _Parser(prog="h3forge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="plan or run a single attack window")
    p_attack.add_argument("kind", choices=PLANNABLE + [AttackKind.DOWNGRADE_PROBE.value])
    p_attack.add_argument("--target", default="10.0.0.4:443", help="host:port")
    p_attack.add_argument("--duration", type=float, help="window length in seconds")
    p_attack.add_argument("--parallelism", type=int)
    p_attack.add_argument("--settings-variant", choices=["low", "high"])
    p_attack.add_argument("--smuggle-variant", choices=list(campaign_mod.SMUGGLE_VARIANTS))
    p_attack.add_argument(
        "--capabilities-stub",
        help="comma-separated protocol stub for the downgrade probe (e.g. 'h1.1,h2,h3')",
    )
    _add_mode(p_attack)
    _add_common(p_attack)

    p_campaign = sub.add_parser("campaign", help="run a full dataset timeline")
    p_campaign.add_argument("kind", nargs="?", choices=CAMPAIGN_KINDS)
    p_campaign.add_argument(
        "--config", help="campaign config JSON (attack, servers, seed, mode); flags override"
    )
    p_campaign.add_argument("--servers", help="JSON file with server targets")
    p_campaign.add_argument("--clients", type=int, default=13, help="benign client count")
    p_campaign.add_argument(
        "--variant-order", default="high,low", help="tables/streams cycle order"
    )
    p_campaign.add_argument("--remap-at", type=float, help="benign source-address remap time")
    _add_mode(p_campaign)
    _add_common(p_campaign)

    p_label = sub.add_parser("label", help="label packets against a campaign manifest")
    src = p_label.add_mutually_exclusive_group(required=True)
    src.add_argument("--events", help="engine event log (ndjson)")
    src.add_argument("--pcap", help="classic pcap capture")
    p_label.add_argument("--manifest", required=True)
    _add_common(p_label)

    p_features = sub.add_parser("features", help="build preprocessed feature CSVs")
    p_features.add_argument("--events", required=True)
    p_features.add_argument("--manifest", required=True)
    p_features.add_argument("--split", default="0.6,0.4", help="stratified fractions")
    _add_common(p_features)

    p_detect = sub.add_parser("detect", help="train and evaluate detection baselines")
    detect_sub = p_detect.add_subparsers(dest="detect_command", required=True)

    p_train = detect_sub.add_parser("train")
    p_train.add_argument("--train", required=True, help="training features CSV")
    p_train.add_argument("--max-depth", type=int, default=200)
    p_train.add_argument("--max-leaf-nodes", type=int, default=1000)
    p_train.add_argument("--min-samples-leaf", type=int, default=2)
    p_train.add_argument("--min-samples-split", type=int, default=10)
    _add_common(p_train)

    p_eval = detect_sub.add_parser("eval")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--test", required=True, help="test features CSV")
    _add_common(p_eval)

    p_anomaly = detect_sub.add_parser("anomaly")
    p_anomaly.add_argument("--data", required=True, help="features CSV (all rows)")
    p_anomaly.add_argument("--split", default="0.5,0.3,0.2")
    _add_common(p_anomaly)

    p_fp = sub.add_parser("footprint", help="packets-per-second attack footprints")
    fp_src = p_fp.add_mutually_exclusive_group(required=True)
    fp_src.add_argument("--events")
    fp_src.add_argument("--pcap")
    p_fp.add_argument("--manifest", required=True)
    p_fp.add_argument("--bucket", type=float, default=1.0)
    p_fp.add_argument("--plot", action="store_true", help="also render a PNG")
    _add_common(p_fp)

    p_stats = sub.add_parser("stats", help="per-attack traffic statistics")
    p_stats.add_argument("--in", dest="input", required=True, help="labeled CSV")
    p_stats.add_argument("--servers", help="JSON file with server targets")
    _add_common(p_stats)

    return parser


def _make_sink(args, target=None) -> TrafficSink:
    return TrafficSink(
        mode="live" if args.live else "dry_run",
        target=target,
        target_acknowledged=getattr(args, "acknowledged", False),
    )


def cmd_attack(args) -> int:
    out = _out_dir(args)
    kind = AttackKind(args.kind)
    if kind == AttackKind.DOWNGRADE_PROBE:
        capabilities = None
        if args.capabilities_stub is not None:
            capabilities = {c.strip() for c in args.capabilities_stub.split(",") if c.strip()}
        sink = _make_sink(args, args.target)
        report = downgrade_probe(args.target, sink, capabilities=capabilities)
        payload = report.to_dict()
        (out / "downgrade_report.json").write_text(json.dumps(payload, indent=2) + "\n")
        print(json.dumps(payload))
        return 0

    params = default_params(kind, seed=args.seed)
    overrides = {}
    if args.duration is not None:
        overrides["duration"] = args.duration
    if args.parallelism is not None:
        overrides["parallelism"] = args.parallelism
    if args.settings_variant is not None:
        overrides["settings"] = (
            SETTINGS_VARIANT_LOW if args.settings_variant == "low" else SETTINGS_VARIANT_HIGH
        )
    if args.smuggle_variant is not None:
        overrides["smuggle_variant"] = args.smuggle_variant
    if overrides:
        params = dataclasses.replace(params, **overrides)

    sink = _make_sink(args, args.target)
    events = plan_attack(kind, params, sink, target=args.target)
    write_events(out / "events.ndjson", events)
    manifest = {
        "attack": kind.value,
        "seed": args.seed,
        "mode": sink.mode,
        "target": args.target,
        "duration": params.duration,
        "parallelism": params.parallelism,
        "attacker_addrs": attacker_addresses(params.parallelism),
        "event_count": len(events),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    print(f"{kind.value}: {len(events)} events -> {out / 'events.ndjson'}")
    return 0


def cmd_campaign(args) -> int:
    out = _out_dir(args)
    config = campaign_mod.load_campaign_config(args.config) if args.config else {}
    if args.kind is None and "attack" not in config:
        raise UsageError("campaign needs a kind argument or a --config with an attack")
    kind = AttackKind(args.kind) if args.kind else config["attack"]
    servers = config.get("servers") if args.servers is None else None
    if servers is None:
        servers = _load_servers(args.servers)
    seed = config.get("seed", args.seed) if args.seed == 0 else args.seed
    variant_order = tuple(v.strip() for v in args.variant_order.split(","))
    schedule = campaign_mod.build_schedule(kind, servers, variant_order=variant_order)
    model = campaign_mod.BenignClientModel(client_count=args.clients, seed=seed)
    if config.get("mode") == "live" and not args.live:
        args.live = True
    sink = _make_sink(args)
    log = None
    try:
        log = campaign_mod.run_campaign(
            schedule, model, sink, servers=servers, seed=seed, address_remap_at=args.remap_at
        )
    except KeyboardInterrupt:
        # flush whatever was collected, marked as truncated
        partial = campaign_mod.CampaignLog(
            manifest={
                "attack": kind.value,
                "seed": seed,
                "mode": sink.mode,
                "truncated": True,
                "schedule": schedule.to_dict(),
                "servers": [s.to_dict() for s in servers],
            },
            events=sink.events,
        )
        partial.write(out / "events.ndjson", out / "manifest.json")
        print("interrupted: partial log flushed with truncation marker", file=sys.stderr)
        raise
    log.write(out / "events.ndjson", out / "manifest.json")
    packets = capture_mod.events_to_packets(log.events)
    labeled = capture_mod.label_packets(packets, log.manifest)
    capture_mod.write_labeled_csv(out / "labeled.csv", labeled)
    print(
        f"{kind.value}: {len(log.events)} events over {schedule.total:.0f}s "
        f"-> {out / 'events.ndjson'}, {out / 'labeled.csv'}"
    )
    return 0


def _read_packets(args):
    if getattr(args, "events", None):
        events = read_events(args.events)
        return capture_mod.events_to_packets(events)
    result = capture_mod.ingest_pcap(args.pcap)
    return result.records


def cmd_label(args) -> int:
    out = _out_dir(args)
    manifest = campaign_mod.load_manifest(args.manifest)
    packets = _read_packets(args)
    counters = capture_mod.LabelCounters()
    labeled = capture_mod.label_packets(packets, manifest, counters=counters)
    capture_mod.write_labeled_csv(out / "labeled.csv", labeled)
    malicious = sum(1 for lp in labeled if lp.label != "Normal")
    print(
        f"labeled {len(labeled)} packets ({malicious} malicious, "
        f"{counters.outside_horizon} outside horizon) -> {out / 'labeled.csv'}"
    )
    return 0


def _parse_fractions(text) -> list[float]:
    try:
        fractions = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad fractions {text!r}") from exc
    return fractions


def cmd_features(args) -> int:
    out = _out_dir(args)
    manifest = campaign_mod.load_manifest(args.manifest)
    events = read_events(args.events)
    packets = capture_mod.events_to_packets(events)
    labeled = capture_mod.label_packets(packets, manifest)

    raw = [features_mod.extract_row(ev) for ev in events]
    labels = [features_mod.map_class(lp.label) for lp in labeled]
    indexed = list(range(len(raw)))
    fractions = _parse_fractions(args.split)
    parts = features_mod.stratified_split(indexed, fractions, seed=args.seed, labels=labels)

    train_idx = parts[0]
    pipeline = features_mod.FeaturePipeline.fit([raw[i] for i in train_idx])
    names = (["train", "test"] if len(parts) == 2 else [f"part{i}" for i in range(len(parts))])
    written = []
    for name, part in zip(names, parts):
        rows = pipeline.transform([raw[i] for i in part], [labels[i] for i in part])
        path = out / f"features_{name}.csv"
        features_mod.write_csv(path, rows, pipeline)
        written.append(f"{path} ({len(rows)} rows)")
    all_rows = pipeline.transform(raw, labels)
    features_mod.write_csv(out / "features_all.csv", all_rows, pipeline)
    with open(out / "pipeline.json", "w", encoding="utf-8") as fh:
        json.dump(pipeline.to_dict(), fh)
        fh.write("\n")
    features_mod.DEFAULT_SCHEMA.save(out / "schema.json")
    print("wrote " + ", ".join(written) + f", {out / 'features_all.csv'} ({len(all_rows)} rows)")
    return 0


def cmd_detect_train(args) -> int:
    out = _out_dir(args)
    columns, rows = features_mod.read_csv(args.train)
    X, labels = detect_mod.rows_to_matrix(rows, columns)
    params = detect_mod.TreeParams(
        max_depth=args.max_depth,
        max_leaf_nodes=args.max_leaf_nodes,
        min_samples_leaf=args.min_samples_leaf,
        min_samples_split=args.min_samples_split,
    )
    import time

    t0 = time.perf_counter()
    model = detect_mod.train_tree(X, labels, params, columns=columns)
    elapsed = time.perf_counter() - t0
    detect_mod.save_model(out / "tree.json", model)
    predictions, scores = detect_mod.predict(model, X)
    report = detect_mod.evaluate(
        predictions, labels, classes=model.classes, scores=scores, train_time=elapsed
    )
    (out / "train_metrics.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    print(detect_mod.format_reports({"DT(train)": report}))
    return 0


def cmd_detect_eval(args) -> int:
    out = _out_dir(args)
    model = detect_mod.load_model(args.model)
    _, rows = features_mod.read_csv(args.test)
    X, truths = detect_mod.rows_to_matrix(rows, model.columns)
    predictions, scores = detect_mod.predict(model, X)
    report = detect_mod.evaluate(predictions, truths, classes=model.classes, scores=scores)
    (out / "eval_metrics.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    print(detect_mod.format_reports({"DT": report}))
    return 0


def cmd_detect_anomaly(args) -> int:
    out = _out_dir(args)
    columns, rows = features_mod.read_csv(args.data)
    fractions = _parse_fractions(args.split)
    if len(fractions) != 3:
        raise UsageError("anomaly detection expects three fractions (train,test,validation)")
    binary = ["Normal" if r.label == "Normal" else "Malicious" for r in rows]
    parts = features_mod.stratified_split(rows, fractions, seed=args.seed, labels=binary)
    train, test, validation = parts
    train_normal = [r for r in train if r.label == "Normal"]
    if not train_normal:
        raise EngineError("no Normal rows available for anomaly training")
    X_train, _ = detect_mod.rows_to_matrix(train_normal, columns)
    model = detect_mod.anomaly_fit(X_train, columns=columns)
    X_val, val_labels = detect_mod.rows_to_matrix(validation, columns)
    threshold = detect_mod.calibrate_threshold(
        model, X_val, [l != "Normal" for l in val_labels]
    )
    X_test, test_labels = detect_mod.rows_to_matrix(test, columns)
    predictions = detect_mod.anomaly_classify(model, X_test)
    truths = ["Malicious" if l != "Normal" else "Normal" for l in test_labels]
    report = detect_mod.evaluate(predictions, truths, classes=["Normal", "Malicious"])
    detect_mod.save_model(out / "anomaly.json", model)
    payload = report.to_dict()
    payload["threshold"] = threshold
    (out / "anomaly_metrics.json").write_text(json.dumps(payload, indent=2) + "\n")
    print(f"threshold={threshold:.4f}")
    print(detect_mod.format_reports({"centroid-MAE": report}))
    return 0


def cmd_footprint(args) -> int:
    out = _out_dir(args)
    manifest = campaign_mod.load_manifest(args.manifest)
    packets = _read_packets(args)
    labeled = capture_mod.label_packets(packets, manifest)
    series = capture_mod.footprint(labeled, bucket=args.bucket)
    series.write_csv(out / "footprint.csv")
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        rows = series.rows()
        ts = [r[0] for r in rows]
        fig, ax = plt.subplots(figsize=(10, 4))
        ax.plot(ts, [r[1] for r in rows], label="normal", color="tab:blue")
        ax.plot(ts, [r[2] for r in rows], label="malicious", color="tab:red")
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"packets per {series.bucket:g}s")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "footprint.png", dpi=120)
        plt.close(fig)
    print(f"footprint ({len(series.buckets())} buckets) -> {out / 'footprint.csv'}")
    return 0


def cmd_stats(args) -> int:
    out = _out_dir(args)
    labeled = capture_mod.read_labeled_csv(args.input)
    servers = _load_servers(args.servers)
    result = capture_mod.stats(labeled, servers)
    print(result.format_table())
    payload = {
        "normal": result.normal_count,
        "malicious": result.malicious_count,
        "pct_malicious_to_normal": result.pct_malicious_to_normal,
        "per_server": [
            {"server": name, "total": total, "malicious": malicious, "pct": pct}
            for name, total, malicious, pct in result.per_server
        ],
    }
    (out / "stats.json").write_text(json.dumps(payload, indent=2) + "\n")
    return 0


_COMMANDS = {
    "attack": cmd_attack,
    "campaign": cmd_campaign,
    "label": cmd_label,
    "features": cmd_features,
    "footprint": cmd_footprint,
    "stats": cmd_stats,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "detect":
            handler = {
                "train": cmd_detect_train,
                "eval": cmd_detect_eval,
                "anomaly": cmd_detect_anomaly,
            }[args.detect_command]
            return handler(args)
        return _COMMANDS[args.command](args)
    except SafetyError as exc:
        print(f"safety interlock: {exc}", file=sys.stderr)
        return 3
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (EngineError, capture_mod.IngestError, features_mod.SchemaError,
            features_mod.MappingError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> int:
    return dispatch(argv)


if __name__ == "__main__":
    sys.exit(main())
