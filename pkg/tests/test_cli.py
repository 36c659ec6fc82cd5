import json
import subprocess
import sys

import pytest

from h3forge.capture import LabeledPacket, PacketRecord, write_labeled_csv
from h3forge.cli import dispatch


def run_cli(*argv):
    return dispatch(list(argv))


@pytest.fixture()
def small_campaign(tmp_path):
    out = tmp_path / "camp"
    servers = tmp_path / "servers.json"
    servers.write_text(
        json.dumps(
            [
                {"name": "OpenLiteSpeed", "address": "10.0.0.4:443", "capabilities": ["h1.1", "h3"]},
                {"name": "Caddy", "address": "10.0.0.5:443", "capabilities": ["h1.1", "h2", "h3"]},
            ]
        )
    )
    code = run_cli(
        "campaign", "http3-flood", "--dry-run", "--seed", "42",
        "--servers", str(servers), "--clients", "3", "--out", str(out),
    )
    assert code == 0
    return out


def test_campaign_writes_manifest_and_log(small_campaign):
    assert (small_campaign / "manifest.json").exists()
    assert (small_campaign / "events.ndjson").exists()
    assert (small_campaign / "labeled.csv").exists()
    manifest = json.loads((small_campaign / "manifest.json").read_text())
    assert manifest["attack"] == "http3-flood"
    assert manifest["seed"] == 42


def test_campaign_deterministic_across_runs(tmp_path, small_campaign):
    second = tmp_path / "again"
    servers = tmp_path / "servers.json"
    code = run_cli(
        "campaign", "http3-flood", "--dry-run", "--seed", "42",
        "--servers", str(servers), "--clients", "3", "--out", str(second),
    )
    assert code == 0
    for name in ("events.ndjson", "labeled.csv", "manifest.json"):
        assert (small_campaign / name).read_bytes() == (second / name).read_bytes()


def test_live_without_acknowledgment_exits_3(tmp_path):
    code = run_cli(
        "attack", "http3-tables-streams", "--live", "--target", "10.9.9.9:443",
        "--out", str(tmp_path),
    )
    assert code == 3


def test_unknown_subcommand_exits_1(capsys):
    assert run_cli("frobnicate") == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_kind_exits_1():
    assert run_cli("attack", "no-such-attack") == 1


def test_attack_dry_run_writes_plan(tmp_path):
    out = tmp_path / "plan"
    code = run_cli(
        "attack", "http3-flood", "--duration", "5", "--seed", "1", "--out", str(out),
    )
    assert code == 0
    lines = (out / "events.ndjson").read_text().strip().splitlines()
    assert lines
    record = json.loads(lines[0])
    assert set(record) == {"ts", "worker_id", "action", "target", "bytes", "detail"}


def test_attack_downgrade_probe_with_stub(tmp_path, capsys):
    code = run_cli(
        "attack", "downgrade-probe", "--target", "h3.example:443",
        "--capabilities-stub", "h1.1,h2,h3", "--out", str(tmp_path),
    )
    assert code == 0
    report = json.loads((tmp_path / "downgrade_report.json").read_text())
    assert report["accepted_versions"] == ["h1.1", "h2", "h3"]


def test_label_and_footprint_and_features_pipeline(tmp_path, small_campaign):
    label_out = tmp_path / "lab"
    code = run_cli(
        "label", "--events", str(small_campaign / "events.ndjson"),
        "--manifest", str(small_campaign / "manifest.json"), "--out", str(label_out),
    )
    assert code == 0
    assert (label_out / "labeled.csv").exists()

    fp_out = tmp_path / "fp"
    code = run_cli(
        "footprint", "--events", str(small_campaign / "events.ndjson"),
        "--manifest", str(small_campaign / "manifest.json"), "--out", str(fp_out),
    )
    assert code == 0
    header = (fp_out / "footprint.csv").read_text().splitlines()[0]
    assert header == "t,normal_pps,malicious_pps"

    feat_out = tmp_path / "feat"
    code = run_cli(
        "features", "--events", str(small_campaign / "events.ndjson"),
        "--manifest", str(small_campaign / "manifest.json"), "--seed", "5",
        "--out", str(feat_out),
    )
    assert code == 0
    for name in ("features_train.csv", "features_test.csv", "features_all.csv", "pipeline.json", "schema.json"):
        assert (feat_out / name).exists()

    model_out = tmp_path / "model"
    code = run_cli(
        "detect", "train", "--train", str(feat_out / "features_train.csv"), "--out", str(model_out),
    )
    assert code == 0
    assert (model_out / "tree.json").exists()

    eval_out = tmp_path / "eval"
    code = run_cli(
        "detect", "eval", "--model", str(model_out / "tree.json"),
        "--test", str(feat_out / "features_test.csv"), "--out", str(eval_out),
    )
    assert code == 0
    metrics = json.loads((eval_out / "eval_metrics.json").read_text())
    assert set(metrics) >= {"auc", "precision", "recall", "f1", "accuracy", "confusion"}

    anomaly_out = tmp_path / "anomaly"
    code = run_cli(
        "detect", "anomaly", "--data", str(feat_out / "features_all.csv"),
        "--seed", "3", "--out", str(anomaly_out),
    )
    assert code == 0
    payload = json.loads((anomaly_out / "anomaly_metrics.json").read_text())
    assert payload["threshold"] > 0


def test_stats_prints_reference_ratio(tmp_path, capsys):
    # counts shaped like the flood row: 947/2500 -> 37.88%
    labeled = []
    for i in range(2500):
        rec = PacketRecord(ts=float(i), src="192.0.2.10", dst="10.0.0.4",
                           src_port=1, dst_port=443, l4="udp", length=100)
        labeled.append(LabeledPacket(rec, "Normal", "Normal"))
    for i in range(947):
        rec = PacketRecord(ts=240.0 + i, src="203.0.113.99", dst="10.0.0.4",
                           src_port=1, dst_port=443, l4="udp", length=100)
        labeled.append(LabeledPacket(rec, "http3-flood", "DDoS-flooding"))
    path = tmp_path / "labeled.csv"
    write_labeled_csv(path, labeled)
    code = run_cli("stats", "--in", str(path), "--out", str(tmp_path))
    assert code == 0
    assert "37.88" in capsys.readouterr().out


def test_runtime_error_exits_2(tmp_path):
    bad = tmp_path / "missing.csv"
    assert run_cli("stats", "--in", str(bad), "--out", str(tmp_path)) == 2


def test_campaign_config_file(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "attack": "http2-pause",
                "seed": 9,
                "mode": "dry_run",
                "servers": [
                    {"name": "Caddy", "address": "10.0.0.5:443", "capabilities": ["h1.1", "h2", "h3"]}
                ],
            }
        )
    )
    out = tmp_path / "out"
    assert run_cli("campaign", "--config", str(config), "--clients", "2", "--out", str(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["attack"] == "http2-pause"
    assert manifest["seed"] == 9
    assert [s["name"] for s in manifest["servers"]] == ["Caddy"]


def test_campaign_without_kind_or_config_is_usage_error():
    assert run_cli("campaign") == 1


def test_out_env_variable(tmp_path, monkeypatch):
    monkeypatch.setenv("H3FORGE_OUT", str(tmp_path / "envout"))
    code = run_cli("attack", "fuzzing", "--duration", "2", "--seed", "1")
    assert code == 0
    assert (tmp_path / "envout" / "events.ndjson").exists()


def test_module_entrypoint_smoke(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "h3forge.cli", "attack", "fuzzing",
         "--duration", "2", "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "events.ndjson").exists()
