import json

import pytest

from h3forge import engine
from h3forge.engine import (
    AttackEvent,
    AttackKind,
    AttackParams,
    ParameterError,
    SafetyError,
    TrafficSink,
    attacker_addresses,
    cve_triggered,
    default_params,
    downgrade_probe,
    execute_plan,
    plan_attack,
)
from h3forge.wire import SettingsFrame, ipv4_checksum


def dry_sink():
    return TrafficSink(mode="dry_run", target="10.0.0.4:443")


def plan(kind, *, window, seed=42, overrides=None, capabilities=None):
    params = default_params(kind, seed=seed)
    if overrides:
        import dataclasses

        params = dataclasses.replace(params, **overrides)
    return plan_attack(kind, params, dry_sink(), window=window, capabilities=capabilities)


SCHEDULABLE = [k for k in AttackKind if k not in (AttackKind.DOWNGRADE_PROBE, AttackKind.SLOW_RATE_POST)]


# ---------------------------------------------------------------------------
# Cross-kind invariants
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kind", SCHEDULABLE + [AttackKind.SLOW_RATE_POST])
def test_dry_run_determinism(kind):
    first = plan(kind, window=(0.0, 20.0))
    second = plan(kind, window=(0.0, 20.0))
    assert first == second
    assert [e.to_json() for e in first] == [e.to_json() for e in second]


@pytest.mark.parametrize("kind", SCHEDULABLE + [AttackKind.SLOW_RATE_POST])
def test_events_inside_window_and_monotonic_per_worker(kind):
    window = (100.0, 130.0)
    events = plan(kind, window=window)
    assert events, f"{kind} produced no events"
    last_per_worker = {}
    for ev in events:
        assert window[0] <= ev.ts < window[1]
        assert ev.ts >= last_per_worker.get(ev.worker_id, window[0])
        last_per_worker[ev.worker_id] = ev.ts


@pytest.mark.parametrize("kind", SCHEDULABLE)
def test_seed_changes_stream(kind):
    assert plan(kind, window=(0.0, 20.0), seed=1) != plan(kind, window=(0.0, 20.0), seed=2)


def test_live_mode_without_acknowledgment_is_refused():
    sink = TrafficSink(mode="live", target="10.0.0.4:443", target_acknowledged=False)
    with pytest.raises(SafetyError):
        plan_attack(AttackKind.HTTP3_FLOOD, default_params(AttackKind.HTTP3_FLOOD), sink)


def test_event_json_roundtrip():
    events = plan(AttackKind.HTTP3_FLOOD, window=(0.0, 3.0))
    for ev in events[:10]:
        line = ev.to_json()
        assert set(json.loads(line)) == {"ts", "worker_id", "action", "target", "bytes", "detail"}
        assert AttackEvent.from_json(line) == ev


def test_taxonomy_covers_every_kind():
    assert set(engine.TAXONOMY) == set(AttackKind)
    assert set(engine.TAXONOMY.values()) <= {"volume", "slow-rate", "transport", "http2-specific", "probe"}


def test_attacker_addresses_unique():
    addrs = attacker_addresses(50)
    assert len(set(addrs)) == 50
    assert addrs[0] == engine.ATTACKER_ADDR


# ---------------------------------------------------------------------------
# HTTP/3 flood
# ---------------------------------------------------------------------------

def test_flood_defaults_ten_workers_gap_at_most_timeout():
    events = plan(AttackKind.HTTP3_FLOOD, window=(0.0, 60.0))
    requests = [e for e in events if e.action == "request"]
    assert len({e.worker_id for e in requests}) == 10
    for w in range(10):
        times = [e.ts for e in requests if e.worker_id == w]
        gaps = [b - a for a, b in zip(times, times[1:])]
        assert gaps and max(gaps) <= 1.0 + 1e-9


def test_flood_request_carries_paper_decorations():
    events = plan(AttackKind.HTTP3_FLOOD, window=(0.0, 5.0))
    req = next(e for e in events if e.action == "request")
    assert req.detail["extra_methods"] == ["HEAD", "POST", "GET"]
    assert req.detail["headers"]["settings"] == "0"
    assert req.bytes == 26
    assert req.detail["fields"]["http.content_length"] == 26


def test_flood_degenerate_window_single_request():
    events = plan(
        AttackKind.HTTP3_FLOOD, window=(0.0, 1.0), overrides={"parallelism": 1, "per_request_timeout": 1.0}
    )
    assert sum(1 for e in events if e.action == "request") == 1


# ---------------------------------------------------------------------------
# Slow-rate POST
# ---------------------------------------------------------------------------

def test_slow_post_forty_connections_closed_at_five_seconds():
    events = plan(AttackKind.SLOW_RATE_POST, window=(0.0, 5.0))
    connects = [e for e in events if e.action == "connect"]
    closes = [e for e in events if e.action == "close"]
    assert len(connects) == 40
    assert len(closes) == 40
    for e in closes:
        assert e.ts == pytest.approx(5.0, abs=1e-3)


def test_slow_post_total_bytes_per_connection_is_payload_len():
    events = plan(AttackKind.SLOW_RATE_POST, window=(0.0, 5.0))
    per_worker = {}
    for e in events:
        per_worker[e.worker_id] = per_worker.get(e.worker_id, 0) + e.bytes
    assert set(per_worker.values()) == {32}


def test_slow_post_empty_body_still_valid():
    events = plan(AttackKind.SLOW_RATE_POST, window=(0.0, 5.0), overrides={"payload_len": 0})
    requests = [e for e in events if e.action == "request"]
    assert len(requests) == 40
    assert all(e.detail["method"] == "POST" for e in requests)
    assert all(e.bytes == 0 for e in events)


# ---------------------------------------------------------------------------
# Tables/streams
# ---------------------------------------------------------------------------

def test_tables_streams_cve_trigger_boundary():
    assert cve_triggered(engine.SETTINGS_VARIANT_LOW) is True
    assert cve_triggered(engine.SETTINGS_VARIANT_HIGH) is False
    assert cve_triggered(SettingsFrame(max_table_capacity=31, blocked_streams=4)) is True
    assert cve_triggered(SettingsFrame(max_table_capacity=32, blocked_streams=4)) is False


@pytest.mark.parametrize(
    "settings,expected",
    [(engine.SETTINGS_VARIANT_LOW, True), (engine.SETTINGS_VARIANT_HIGH, False)],
)
def test_tables_streams_plan_marks_trigger(settings, expected):
    events = plan(
        AttackKind.HTTP3_TABLES_STREAMS, window=(0.0, 10.0), overrides={"settings": settings, "parallelism": 5}
    )
    marked = [e for e in events if "cve_trigger" in e.detail]
    assert marked and all(e.detail["cve_trigger"] is expected for e in marked)
    sent = [e for e in events if e.action == "send_datagram"]
    assert sent, "some connections must complete and emit SETTINGS"
    assert all(
        e.detail["settings"]["max_table_capacity"] == settings.max_table_capacity for e in sent
    )


def test_tables_streams_requires_settings():
    params = default_params(AttackKind.HTTP3_TABLES_STREAMS)
    import dataclasses

    params = dataclasses.replace(params, settings=None)
    with pytest.raises(ParameterError):
        plan_attack(AttackKind.HTTP3_TABLES_STREAMS, params, dry_sink(), window=(0.0, 10.0))


def test_tables_streams_some_connections_drop():
    events = plan(AttackKind.HTTP3_TABLES_STREAMS, window=(0.0, 30.0))
    assert any(e.action == "timeout" for e in events)


# ---------------------------------------------------------------------------
# Loris family and floods
# ---------------------------------------------------------------------------

def test_loris_single_worker_twelve_requests_on_period():
    events = plan(AttackKind.HTTP3_LORIS, window=(0.0, 60.0), overrides={"parallelism": 1})
    requests = [e for e in events if e.action == "request"]
    assert len(requests) == 12
    for k, e in enumerate(requests):
        assert e.ts == pytest.approx(5.0 * k, abs=0.1)
    gaps = {round(b.ts - a.ts, 9) for a, b in zip(requests, requests[1:])}
    assert gaps == {5.0}


def test_loris_zero_window_no_events():
    assert plan(AttackKind.HTTP3_LORIS, window=(0.0, 0.0)) == []


def test_loris_local_bots_send_bare_requests():
    events = plan(AttackKind.HTTP3_LORIS, window=(0.0, 10.0))
    requests = [e for e in events if e.action == "request"]
    local = [e for e in requests if e.detail["local_bot"]]
    remote = [e for e in requests if not e.detail["local_bot"]]
    assert local and remote
    assert all(e.bytes == 0 for e in local)
    assert all(e.bytes == 32 for e in remote)


def test_quic_flood_outpaces_loris():
    window = (0.0, 10.0)
    flood = plan(AttackKind.QUIC_FLOOD, window=window, overrides={"parallelism": 1})
    loris = plan(AttackKind.QUIC_LORIS, window=window, overrides={"parallelism": 1})
    assert len(flood) >= len(loris)


# ---------------------------------------------------------------------------
# QUIC encapsulation and fuzzing
# ---------------------------------------------------------------------------

def test_quic_enc_alternates_and_inner_packets_validate():
    events = plan(AttackKind.QUIC_ENC, window=(0.0, 5.0))
    datagrams = [e for e in events if e.action == "send_datagram"]
    assert [e.detail["inner"] for e in datagrams[:4]] == ["tcp", "udp", "tcp", "udp"]
    for e in datagrams:
        inner = bytes.fromhex(e.detail["inner_hex"])
        assert e.bytes == len(inner)
        assert inner[0] == 0x45
        total_length = int.from_bytes(inner[2:4], "big")
        assert total_length == len(inner)
        zeroed = inner[:10] + b"\x00\x00" + inner[12:20]
        stored = int.from_bytes(inner[10:12], "big")
        assert ipv4_checksum(zeroed) == stored


def test_quic_enc_seed_stable_payload_bytes():
    first = plan(AttackKind.QUIC_ENC, window=(0.0, 5.0))
    second = plan(AttackKind.QUIC_ENC, window=(0.0, 5.0))
    assert [e.detail["inner_hex"] for e in first] == [e.detail["inner_hex"] for e in second]


def test_fuzzing_honors_max_length_and_seed():
    events = plan(AttackKind.FUZZING, window=(0.0, 10.0), overrides={"max_datagram_len": 256})
    assert events
    assert all(1 <= e.bytes <= 256 for e in events)
    again = plan(AttackKind.FUZZING, window=(0.0, 10.0), overrides={"max_datagram_len": 256})
    assert events == again
    other = plan(AttackKind.FUZZING, window=(0.0, 10.0), seed=7, overrides={"max_datagram_len": 256})
    assert [e.bytes for e in other] != [e.bytes for e in events]


# ---------------------------------------------------------------------------
# HTTP/2 kinds and smuggling
# ---------------------------------------------------------------------------

def test_http2_concurrent_metadata_and_cap():
    events = plan(AttackKind.HTTP2_CONCURRENT, window=(0.0, 10.0))
    connects = [e for e in events if e.action == "connect"]
    assert connects
    assert all(e.detail["max_total_connections"] == 100_000 for e in connects)
    assert all(e.detail["max_concurrent_streams"] == 100_000 for e in connects)

    single = plan(
        AttackKind.HTTP2_CONCURRENT, window=(0.0, 10.0), overrides={"max_total_connections": 1}
    )
    assert sum(1 for e in single if e.action == "connect") == 1


def test_http2_concurrent_fallback_flag():
    h2_ok = plan(AttackKind.HTTP2_CONCURRENT, window=(0.0, 5.0), capabilities={"h1.1", "h2"})
    h1_only = plan(AttackKind.HTTP2_CONCURRENT, window=(0.0, 5.0), capabilities={"h1.1"})
    assert all(e.detail["fallback_h1.1"] is False for e in h2_ok if e.action == "connect")
    assert all(e.detail["fallback_h1.1"] is True for e in h1_only if e.action == "connect")
    assert all(e.detail["protocol"] == "h1.1" for e in h1_only if e.action == "request")


def test_http2_pause_strict_alternation():
    events = plan(
        AttackKind.HTTP2_PAUSE, window=(0.0, 4.0), overrides={"parallelism": 1, "pause_period": 1.0}
    )
    seq = [(e.action, e.ts) for e in events if e.action in ("pause", "resume")]
    assert seq == [("pause", 1.0), ("resume", 2.0), ("pause", 3.0)]


def test_http2_pause_zero_window_and_counts():
    assert plan(AttackKind.HTTP2_PAUSE, window=(0.0, 0.0)) == []
    for horizon in (3.0, 4.0, 7.5):
        events = plan(AttackKind.HTTP2_PAUSE, window=(0.0, horizon))
        for w in {e.worker_id for e in events}:
            pauses = sum(1 for e in events if e.worker_id == w and e.action == "pause")
            resumes = sum(1 for e in events if e.worker_id == w and e.action == "resume")
            assert pauses - resumes in (0, 1)


@pytest.mark.parametrize("variant", ["cl_te", "te_cl"])
def test_smuggle_conflicting_framing_markers(variant):
    events = plan(AttackKind.HTTP_SMUGGLE, window=(0.0, 5.0), overrides={"smuggle_variant": variant})
    requests = [e for e in events if e.action == "request"]
    assert requests
    for e in requests:
        assert e.detail["content_length"] == 4
        assert e.detail["transfer_encoding"] == "chunked"
        assert e.detail["variant"] == variant


def test_smuggle_h2c_upgrade_marker():
    events = plan(
        AttackKind.HTTP_SMUGGLE, window=(0.0, 5.0), overrides={"smuggle_variant": "h2c_upgrade"}
    )
    requests = [e for e in events if e.action == "request"]
    assert requests
    assert all(e.detail["upgrade"] == "h2c" for e in requests)


def test_smuggle_one_request_per_period_per_worker():
    events = plan(AttackKind.HTTP_SMUGGLE, window=(0.0, 10.0))
    requests = [e for e in events if e.action == "request"]
    assert len(requests) == 10  # 1 worker, 1 s period, 10 s window


def test_smuggle_unknown_variant_rejected():
    with pytest.raises(ParameterError):
        plan(AttackKind.HTTP_SMUGGLE, window=(0.0, 5.0), overrides={"smuggle_variant": "nope"})


# ---------------------------------------------------------------------------
# Downgrade probe
# ---------------------------------------------------------------------------

def test_downgrade_probe_full_stub():
    report = downgrade_probe("h3only.example:443", capabilities={"h1.1", "h2", "h3"})
    assert report.accepted_versions == frozenset({"h1.1", "h2", "h3"})
    assert report.http3_only_configured is True


def test_downgrade_probe_tcp_blocked_stub():
    with_h3 = downgrade_probe("h3only.example:443", capabilities={"h3"})
    assert with_h3.accepted_versions == frozenset({"h3"})
    nothing = downgrade_probe("h3only.example:443", capabilities=set())
    assert nothing.accepted_versions == frozenset()


def test_downgrade_probe_idempotent():
    stub = {"h1.1", "h3"}
    first = downgrade_probe("h3only.example:443", capabilities=stub)
    second = downgrade_probe("h3only.example:443", capabilities=stub)
    assert first == second


def test_downgrade_probe_refuses_dry_run_without_stub():
    with pytest.raises(ParameterError):
        downgrade_probe("h3only.example:443", TrafficSink(mode="dry_run"))


# ---------------------------------------------------------------------------
# Live execution contract
# ---------------------------------------------------------------------------

class RecordingTransport:
    def __init__(self):
        self.calls = []
        self._n = 0

    def open_connection(self, target, transport_params):
        self._n += 1
        self.calls.append(("open", target))
        return self._n

    def open_stream(self, conn):
        self.calls.append(("stream", conn))
        return conn

    def write(self, conn, data):
        self.calls.append(("write", conn, len(data)))

    def close(self, conn):
        self.calls.append(("close", conn))


def test_execute_plan_replays_over_transport():
    events = plan(AttackKind.HTTP3_FLOOD, window=(0.0, 2.0), overrides={"parallelism": 2})
    sink = TrafficSink(mode="live", target="10.0.0.4:443", target_acknowledged=True)
    transport = RecordingTransport()
    count = execute_plan(events, transport, sink, sleep=lambda dt: None)
    assert count == len(events)
    assert any(c[0] == "open" for c in transport.calls)
    assert any(c[0] == "write" for c in transport.calls)


def test_execute_plan_gated_by_acknowledgment():
    sink = TrafficSink(mode="live", target="10.0.0.4:443", target_acknowledged=False)
    with pytest.raises(SafetyError):
        execute_plan([], RecordingTransport(), sink)
