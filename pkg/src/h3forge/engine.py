"""Attack planning engine.

Each attack kind compiles to a deterministic stream of timestamped
:class:`AttackEvent` records under a simulated clock (dry-run mode, the
default). Live mode replays a plan over an externally supplied transport
and is gated behind an explicit target acknowledgment.

Dry-run output is a pure function of (kind, params, window, seed): the
per-worker RNG is seeded from a stable string so two runs produce
byte-identical event logs on any platform.

Events whose natural timestamp would land on or past the window end are
clamped to ``end - 1e-6`` (terminal close/timeout) or dropped, so a plan
never leaks into an adjacent schedule phase.
"""

from __future__ import annotations

import json
import random
import socket
import ssl
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Optional, Protocol

from .wire import (
    InnerEncapsulation,
    SettingsFrame,
    build_inner_encapsulation,
    build_settings_frame,
    gen_fuzz_payload,
)

CLOSE_EPS = 1e-6

ATTACKER_ADDR = "203.0.113.99"
BOT_ADDR_PREFIX = "198.51.100."


class EngineError(Exception):
    """Base class for attack-engine failures."""


class ParameterError(EngineError):
    """Invalid or missing attack parameters."""


class SafetyError(EngineError):
    """Live traffic requested without the target-ownership acknowledgment."""


class ProbeError(EngineError):
    """Probe could not complete; carries any partial report."""

    def __init__(self, message: str, partial: Optional["DowngradeReport"] = None):
        super().__init__(message)
        self.partial = partial


class AttackKind(str, Enum):
    HTTP3_FLOOD = "http3-flood"
    HTTP3_LORIS = "http3-loris"
    SLOW_RATE_POST = "slow-rate-post"
    HTTP3_TABLES_STREAMS = "http3-tables-streams"
    QUIC_FLOOD = "quic-flood"
    QUIC_LORIS = "quic-loris"
    QUIC_ENC = "quic-enc"
    FUZZING = "fuzzing"
    HTTP_SMUGGLE = "http-smuggle"
    HTTP2_CONCURRENT = "http2-concurrent"
    HTTP2_PAUSE = "http2-pause"
    DOWNGRADE_PROBE = "downgrade-probe"


# metadata only; never used for control flow
TAXONOMY: dict[AttackKind, str] = {
    AttackKind.HTTP3_FLOOD: "volume",
    AttackKind.HTTP3_LORIS: "slow-rate",
    AttackKind.SLOW_RATE_POST: "slow-rate",
    AttackKind.HTTP3_TABLES_STREAMS: "volume",
    AttackKind.QUIC_FLOOD: "volume",
    AttackKind.QUIC_LORIS: "slow-rate",
    AttackKind.QUIC_ENC: "transport",
    AttackKind.FUZZING: "transport",
    AttackKind.HTTP_SMUGGLE: "http2-specific",
    AttackKind.HTTP2_CONCURRENT: "http2-specific",
    AttackKind.HTTP2_PAUSE: "http2-specific",
    AttackKind.DOWNGRADE_PROBE: "probe",
}

SETTINGS_VARIANT_LOW = SettingsFrame(max_table_capacity=16, blocked_streams=4)
SETTINGS_VARIANT_HIGH = SettingsFrame(max_table_capacity=409600, blocked_streams=1600)
SETTINGS_DEFAULTS = SettingsFrame(max_table_capacity=4096, blocked_streams=16)

SMUGGLE_VARIANTS = ("cl_te", "te_cl", "h2c_upgrade")


@dataclass(frozen=True)
class AttackParams:
    parallelism: int = 1
    per_request_timeout: float = 1.0
    request_period: float = 5.0
    payload_len: int = 0
    settings: Optional[SettingsFrame] = None
    duration: float = 60.0
    seed: int = 0
    # kind-specific knobs
    smuggle_variant: str = "cl_te"
    max_total_connections: int = 100_000
    max_concurrent_streams: int = 100_000
    pause_period: float = 1.0
    max_datagram_len: int = 1200
    local_bots: Optional[int] = None  # loris only; None -> parallelism // 2

    def validate(self) -> None:
        if self.parallelism < 1:
            raise ParameterError(f"parallelism must be >= 1, got {self.parallelism}")
        if self.duration <= 0:
            raise ParameterError(f"duration must be > 0, got {self.duration}")
        if self.per_request_timeout <= 0:
            raise ParameterError(f"timeout must be > 0, got {self.per_request_timeout}")
        if self.payload_len < 0:
            raise ParameterError(f"payload_len must be >= 0, got {self.payload_len}")


def default_params(kind: AttackKind, seed: int = 0, duration: Optional[float] = None) -> AttackParams:
    """Per-kind defaults matching the attack procedure parameters."""
    base = AttackParams(seed=seed)
    if kind == AttackKind.HTTP3_FLOOD:
        p = replace(base, parallelism=10, per_request_timeout=1.0, payload_len=26, duration=60.0)
    elif kind == AttackKind.SLOW_RATE_POST:
        p = replace(base, parallelism=40, per_request_timeout=5.0, payload_len=32, duration=60.0)
    elif kind == AttackKind.HTTP3_TABLES_STREAMS:
        p = replace(
            base,
            parallelism=100,
            per_request_timeout=5.0,
            duration=120.0,
            settings=SETTINGS_VARIANT_LOW,
        )
    elif kind in (AttackKind.HTTP3_LORIS, AttackKind.QUIC_LORIS):
        p = replace(
            base, parallelism=10, request_period=5.0, payload_len=32, duration=60.0
        )
    elif kind == AttackKind.QUIC_FLOOD:
        p = replace(base, parallelism=10, duration=60.0)
    elif kind == AttackKind.QUIC_ENC:
        p = replace(base, parallelism=1, duration=60.0)
    elif kind == AttackKind.FUZZING:
        p = replace(base, parallelism=1, duration=60.0, max_datagram_len=1200)
    elif kind == AttackKind.HTTP_SMUGGLE:
        p = replace(base, parallelism=1, request_period=1.0, duration=120.0)
    elif kind == AttackKind.HTTP2_CONCURRENT:
        p = replace(base, parallelism=4, duration=30.0)
    elif kind == AttackKind.HTTP2_PAUSE:
        p = replace(base, parallelism=10, pause_period=1.0, duration=30.0)
    elif kind == AttackKind.DOWNGRADE_PROBE:
        p = replace(base, parallelism=1, duration=10.0)
    else:
        raise ParameterError(f"unknown attack kind: {kind}")
    return p


@dataclass(frozen=True)
class AttackEvent:
    ts: float
    worker_id: int
    action: str  # connect, request, send_datagram, pause, resume, close, timeout
    target: str
    bytes: int
    detail: dict

    def to_json(self) -> str:
        record = {
            "ts": self.ts,
            "worker_id": self.worker_id,
            "action": self.action,
            "target": self.target,
            "bytes": self.bytes,
            "detail": self.detail,
        }
        return json.dumps(record, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "AttackEvent":
        record = json.loads(line)
        return cls(
            ts=record["ts"],
            worker_id=record["worker_id"],
            action=record["action"],
            target=record["target"],
            bytes=record["bytes"],
            detail=record["detail"],
        )


def write_events(path, events: Iterable[AttackEvent]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ev in events:
            fh.write(ev.to_json() + "\n")


def read_events(path) -> list[AttackEvent]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(AttackEvent.from_json(line))
    return out


@dataclass
class TrafficSink:
    """Collector for planned or executed traffic.

    dry_run collects events under the simulated clock; live additionally
    requires ``target_acknowledged`` before any plan may be generated
    against it.
    """

    mode: str = "dry_run"  # or "live"
    target: Optional[str] = None
    target_acknowledged: bool = False
    events: list[AttackEvent] = field(default_factory=list)

    def check_safety(self) -> None:
        if self.mode == "live" and not self.target_acknowledged:
            raise SafetyError(
                "live mode requires explicit target acknowledgment "
                "(--yes-i-own-this-target)"
            )

    def extend(self, events: Iterable[AttackEvent]) -> None:
        self.events.extend(events)


def worker_addr(worker_id: int) -> str:
    """Worker 0 is the attacker; higher ids are simulated bots."""
    if worker_id == 0:
        return ATTACKER_ADDR
    return f"{BOT_ADDR_PREFIX}{20 + worker_id}"


def _ipv4_or_default(host: str, default: str = "198.18.0.1") -> str:
    parts = host.split(".")
    if len(parts) == 4 and all(p.isdigit() and int(p) <= 255 for p in parts):
        return host
    return default


def attacker_addresses(parallelism: int) -> list[str]:
    return [worker_addr(w) for w in range(parallelism)]


def _worker_rng(kind: AttackKind, seed: int, worker: int, start: float) -> random.Random:
    # string seeding is platform-stable in CPython (sha512-based)
    return random.Random(f"{kind.value}:{seed}:{worker}:{start:.6f}")


def cve_triggered(settings: SettingsFrame) -> bool:
    """The tables/streams null-pointer class fires strictly below capacity 32."""
    return settings.max_table_capacity is not None and settings.max_table_capacity < 32


# ---------------------------------------------------------------------------
# Wire-visible field synthesis. Keys follow the tshark-style feature schema
# consumed downstream; values approximate what a capture of the real tools
# would expose, with seeded jitter so columns are not degenerate.
# ---------------------------------------------------------------------------

def _udp_sizes(udp_payload: int) -> dict:
    return {
        "udp.length": 8 + udp_payload,
        "ip.len": 20 + 8 + udp_payload,
        "frame.len": 14 + 20 + 8 + udp_payload,
    }


def _tcp_sizes(tcp_payload: int, hdr_len: int = 20) -> dict:
    return {
        "tcp.len": tcp_payload,
        "tcp.hdr_len": hdr_len,
        "ip.len": 20 + hdr_len + tcp_payload,
        "frame.len": 14 + 20 + hdr_len + tcp_payload,
    }


def _tls_client_hello(rng: random.Random) -> dict:
    hs = rng.randint(300, 380)
    return {
        "tls.handshake.length": hs,
        "tls.handshake.session_id_length": 32,
        "tls.handshake.cipher_suites_length": rng.choice([32, 36, 62]),
        "tls.handshake.extensions_length": hs - rng.randint(90, 110),
        "tls.record.length": hs + 4,
    }


def _quic_initial(rng: random.Random) -> dict:
    crypto = rng.randint(250, 340)
    fields = {
        "quic.packet_length": 1200,
        "quic.packet_number_length": rng.randint(1, 4),
        "quic.length": 1200 - rng.randint(18, 26),
        "quic.nci.connection_id.length": 8,
        "quic.crypto.length": crypto,
        "quic.padding_length": 1200 - crypto - rng.randint(40, 60),
        "quic.token_length": 0,
        "quic.fixed_bit": 1,
        "quic.long.packet_type": 0,
    }
    fields.update(_tls_client_hello(rng))
    fields.update(_udp_sizes(fields["quic.packet_length"]))
    return fields


def _quic_short(rng: random.Random, stream_len: int, fin: int = 1) -> dict:
    packet = stream_len + rng.randint(18, 28)
    fields = {
        "quic.packet_length": packet,
        "quic.packet_number_length": 1,
        "quic.stream.len": stream_len,
        "quic.stream.fin": fin,
        "quic.spin_bit": rng.getrandbits(1),
        "quic.fixed_bit": 1,
    }
    fields.update(_udp_sizes(packet))
    return fields


def _h3_request(rng: random.Random, header_block: int, content_length: Optional[int]) -> dict:
    stream_len = header_block + 2 + (content_length or 0)
    fields = _quic_short(rng, stream_len)
    fields["http3.frame_length"] = header_block
    if content_length is not None:
        fields["http.content_length"] = content_length
    return fields


def _tcp_handshake(rng: random.Random) -> dict:
    fields = {
        "tcp.flags.syn": 1,
        "tcp.flags.ack": 0,
        "tcp.flags.push": 0,
        "tcp.flags.reset": 0,
        "tcp.flags.fin": 0,
        "tcp.window_size_value": rng.choice([64240, 65535, 29200]),
        "tcp.option_len": rng.choice([12, 20]),
    }
    fields.update(_tcp_sizes(0, hdr_len=20 + fields["tcp.option_len"]))
    fields.update(_tls_client_hello(rng))
    return fields


def _tcp_segment(rng: random.Random, payload: int, push: bool = True, fin: bool = False) -> dict:
    fields = {
        "tcp.flags.syn": 0,
        "tcp.flags.ack": 1,
        "tcp.flags.push": int(push),
        "tcp.flags.reset": 0,
        "tcp.flags.fin": int(fin),
        "tcp.window_size_value": rng.choice([501, 502, 1024]),
    }
    fields.update(_tcp_sizes(payload))
    return fields


# ---------------------------------------------------------------------------
# Planners
# ---------------------------------------------------------------------------

def _resolve(params: AttackParams, sink: TrafficSink, window, target) -> tuple[float, float, str]:
    params.validate()
    sink.check_safety()
    if window is None:
        window = (0.0, params.duration)
    start, end = window
    if end < start:
        raise ParameterError(f"bad window: {window}")
    if target is None:
        target = sink.target or "dry-run-sink:443"
    return start, end, target


def _clamp_terminal(ts: float, end: float) -> float:
    return min(ts, end - CLOSE_EPS)


def _event(ts, worker, action, target, nbytes, detail, fields, src, l4):
    detail = dict(detail)
    detail["fields"] = fields
    detail["src"] = src
    detail["l4"] = l4
    return AttackEvent(
        ts=round(ts, 6), worker_id=worker, action=action, target=target, bytes=nbytes, detail=detail
    )


def _merge(per_worker: list[list[AttackEvent]]) -> list[AttackEvent]:
    merged = [ev for stream in per_worker for ev in stream]
    merged.sort(key=lambda ev: (ev.ts, ev.worker_id))
    return merged


def plan_http3_flood(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Parallel short-lived HTTP/3 GET floods.

    Each worker repeatedly issues a GET carrying the extra method headers
    HEAD/POST/GET, a ``settings: 0`` request header, and a null body; the
    request is cut off at the per-request timeout and immediately reissued.
    """
    start, end, target = _resolve(params, sink, window, target)
    headers = {"settings": "0"}
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.HTTP3_FLOOD, params.seed, w, start)
        src = worker_addr(w)
        # constant per-worker handshake latency keeps the reissue gap at
        # exactly the per-request timeout
        latency = rng.uniform(0.02, 0.06)
        events = []
        t = start
        while t < end:
            sport = rng.randint(49152, 65535)
            conn_detail = {"src_port": sport}
            events.append(
                _event(t, w, "connect", target, 0, conn_detail, _quic_initial(rng), src, "udp")
            )
            req_ts = t + latency
            if req_ts < end:
                fields = _h3_request(rng, rng.randint(90, 130), params.payload_len)
                detail = {
                    "method": "GET",
                    "extra_methods": ["HEAD", "POST", "GET"],
                    "headers": headers,
                    "body": "null",
                    "src_port": sport,
                }
                events.append(
                    _event(req_ts, w, "request", target, params.payload_len, detail, fields, src, "udp")
                )
            cut = _clamp_terminal(t + params.per_request_timeout, end)
            if cut > req_ts:
                events.append(
                    _event(cut, w, "timeout", target, 0, {"src_port": sport},
                           _udp_sizes(20), src, "udp")
                )
            t += params.per_request_timeout
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_slow_rate_post(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Slow POSTs: many parallel connections, each trickling a small seeded
    body until terminated at the per-connection timeout, then reopened."""
    start, end, target = _resolve(params, sink, window, target)
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.SLOW_RATE_POST, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        while t < end:
            sport = rng.randint(49152, 65535)
            events.append(
                _event(t, w, "connect", target, 0, {"src_port": sport}, _quic_initial(rng), src, "udp")
            )
            req_ts = t + rng.uniform(0.02, 0.06)
            if req_ts < end:
                fields = _h3_request(rng, rng.randint(80, 110), params.payload_len)
                detail = {"method": "POST", "src_port": sport}
                events.append(_event(req_ts, w, "request", target, 0, detail, fields, src, "udp"))
            # body drawn from the seeded generator, trickled in chunks
            body = gen_fuzz_payload(rng.getrandbits(64), params.payload_len)
            n_chunks = min(len(body), 8)
            sent = 0
            for i in range(n_chunks):
                size = len(body) // n_chunks + (1 if i < len(body) % n_chunks else 0)
                chunk_ts = t + (i + 1) * params.per_request_timeout / (n_chunks + 1)
                if chunk_ts >= end or size == 0:
                    break
                fields = _quic_short(rng, size, fin=0)
                events.append(
                    _event(chunk_ts, w, "send_datagram", target, size,
                           {"kind": "body-chunk", "src_port": sport}, fields, src, "udp")
                )
                sent += size
            close_ts = _clamp_terminal(t + params.per_request_timeout, end)
            events.append(
                _event(close_ts, w, "close", target, 0, {"src_port": sport, "sent": sent},
                       _udp_sizes(20), src, "udp")
            )
            t += params.per_request_timeout
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_tables_streams(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Parallel connections that complete a handshake and emit a SETTINGS
    frame with tampered QPACK table/stream parameters."""
    if params.settings is None:
        raise ParameterError("tables/streams attack requires settings (low or high variant)")
    start, end, target = _resolve(params, sink, window, target)
    frame_bytes = build_settings_frame(params.settings)
    trigger = cve_triggered(params.settings)
    settings_meta = {
        "max_table_capacity": params.settings.max_table_capacity,
        "blocked_streams": params.settings.blocked_streams,
    }
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.HTTP3_TABLES_STREAMS, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        while t < end:
            sport = rng.randint(49152, 65535)
            conn_detail = {"src_port": sport, "cve_trigger": trigger}
            events.append(
                _event(t, w, "connect", target, 0, conn_detail, _quic_initial(rng), src, "udp")
            )
            # some connections are dropped by the timeout before completing
            if rng.random() < 0.85:
                send_ts = t + rng.uniform(0.05, 0.25)
                if send_ts < end:
                    fields = _quic_short(rng, len(frame_bytes), fin=0)
                    fields["http3.frame_length"] = len(frame_bytes)
                    if params.settings.max_table_capacity is not None:
                        fields["http3.settings.qpack.max_table_capacity"] = (
                            params.settings.max_table_capacity
                        )
                    if params.settings.max_field_section_size is not None:
                        fields["http3.settings.max_field_section_size"] = (
                            params.settings.max_field_section_size
                        )
                    detail = {
                        "frame": "SETTINGS",
                        "settings": settings_meta,
                        "cve_trigger": trigger,
                        "src_port": sport,
                    }
                    events.append(
                        _event(send_ts, w, "send_datagram", target, len(frame_bytes),
                               detail, fields, src, "udp")
                    )
                close_ts = _clamp_terminal(t + params.per_request_timeout, end)
                events.append(
                    _event(close_ts, w, "close", target, 0, {"src_port": sport},
                           _udp_sizes(20), src, "udp")
                )
            else:
                drop_ts = _clamp_terminal(t + params.per_request_timeout, end)
                events.append(
                    _event(drop_ts, w, "timeout", target, 0, {"src_port": sport},
                           _udp_sizes(20), src, "udp")
                )
            t += params.per_request_timeout
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def _plan_loris(
    kind: AttackKind, params: AttackParams, sink: TrafficSink, window, target
) -> list[AttackEvent]:
    start, end, target = _resolve(params, sink, window, target)
    n_local = params.local_bots if params.local_bots is not None else params.parallelism // 2
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(kind, params.seed, w, start)
        src = worker_addr(w)
        # local bots issue bare requests; attacker and remote bots attach a payload
        local = kind == AttackKind.HTTP3_LORIS and 0 < w <= n_local
        payload = 0 if local else params.payload_len
        events = []
        sport = rng.randint(49152, 65535)
        t0 = start + rng.uniform(0.01, 0.05)
        if t0 >= end:
            streams.append(events)
            continue
        events.append(
            _event(start, w, "connect", target, 0, {"src_port": sport}, _quic_initial(rng), src, "udp")
        )
        k = 0
        while True:
            ts = t0 + k * params.request_period
            if ts >= end:
                break
            if kind == AttackKind.QUIC_LORIS:
                fields = _quic_short(rng, max(payload, 1), fin=0)
                detail = {"kind": "quic-connection-request", "src_port": sport}
            else:
                fields = _h3_request(rng, rng.randint(60, 90), payload if payload else None)
                detail = {"method": "GET", "local_bot": local, "src_port": sport}
            events.append(_event(ts, w, "request", target, payload, detail, fields, src, "udp"))
            k += 1
        close_ts = _clamp_terminal(end, end)
        events.append(
            _event(close_ts, w, "close", target, 0, {"src_port": sport}, _udp_sizes(20), src, "udp")
        )
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_http3_loris(params, sink, *, window=None, target=None) -> list[AttackEvent]:
    """One HTTP request per worker per period over held connections."""
    return _plan_loris(AttackKind.HTTP3_LORIS, params, sink, window, target)


def plan_quic_loris(params, sink, *, window=None, target=None) -> list[AttackEvent]:
    """Periodic minimal QUIC connection requests from every bot."""
    return _plan_loris(AttackKind.QUIC_LORIS, params, sink, window, target)


def plan_quic_flood(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Back-to-back QUIC connection initiations per worker, no period."""
    start, end, target = _resolve(params, sink, window, target)
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.QUIC_FLOOD, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        while t < end:
            sport = rng.randint(49152, 65535)
            events.append(
                _event(t, w, "connect", target, 0, {"src_port": sport}, _quic_initial(rng), src, "udp")
            )
            t += rng.uniform(0.2, 0.4)
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_quic_enc(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Datagrams whose payloads alternate inner IP(TCP) and IP(UDP)
    encapsulations built by the wire codec."""
    start, end, target = _resolve(params, sink, window, target)
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.QUIC_ENC, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        i = 0
        sport = rng.randint(49152, 65535)
        dst_host = _ipv4_or_default(target.rsplit(":", 1)[0])
        while t < end:
            inner_kind = "tcp" if i % 2 == 0 else "udp"
            inner = build_inner_encapsulation(
                InnerEncapsulation(
                    transport=inner_kind,
                    src_addr=src,
                    dst_addr=dst_host,
                    src_port=rng.randint(1024, 65535),
                    dst_port=rng.choice([80, 443]),
                    payload=gen_fuzz_payload(rng.getrandbits(64), rng.randint(0, 48)),
                )
            )
            fields = _udp_sizes(len(inner))
            # tshark dissects the inner layers too: ip.len is multi-valued
            fields["ip.len"] = [fields["ip.len"], len(inner)]
            if inner_kind == "tcp":
                fields.update(
                    {
                        "tcp.flags.syn": 1,
                        "tcp.flags.ack": 0,
                        "tcp.flags.push": 0,
                        "tcp.flags.reset": 0,
                        "tcp.flags.fin": 0,
                        "tcp.len": len(inner) - 40,
                        "tcp.hdr_len": 20,
                        "tcp.window_size_value": 8192,
                    }
                )
            else:
                fields["udp.length"] = [fields["udp.length"], len(inner) - 20]
            detail = {"inner": inner_kind, "inner_hex": inner.hex(), "src_port": sport}
            events.append(_event(t, w, "send_datagram", target, len(inner), detail, fields, src, "udp"))
            i += 1
            t += rng.uniform(0.1, 0.3)
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_fuzzing(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Seeded stream of UDP datagrams with pseudo-random lengths and payloads."""
    start, end, target = _resolve(params, sink, window, target)
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.FUZZING, params.seed, w, start)
        src = worker_addr(w)
        sport = rng.randint(49152, 65535)
        events = []
        t = start
        while t < end:
            length = rng.randint(1, params.max_datagram_len)
            payload = gen_fuzz_payload(rng.getrandbits(64), length)
            fields = _udp_sizes(length)
            # garbage sent at the QUIC port is still dissected: the first
            # byte decides the apparent fixed bit
            fields["quic.fixed_bit"] = (payload[0] >> 6) & 1
            detail = {"src_port": sport}
            events.append(_event(t, w, "send_datagram", target, length, detail, fields, src, "udp"))
            t += rng.uniform(0.05, 0.2)
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_http2_concurrent(
    params: AttackParams,
    sink: TrafficSink,
    *,
    window=None,
    target=None,
    capabilities: Optional[set] = None,
) -> list[AttackEvent]:
    """Connection floods advertising extreme total/concurrent-stream limits;
    degrades to HTTP/1.1 flooding when the target lacks HTTP/2."""
    start, end, target = _resolve(params, sink, window, target)
    fallback = capabilities is not None and "h2" not in capabilities
    proto = "h1.1" if fallback else "h2"
    meta = {
        "max_total_connections": params.max_total_connections,
        "max_concurrent_streams": params.max_concurrent_streams,
        "fallback_h1.1": fallback,
        "protocol": proto,
    }
    total = 0
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.HTTP2_CONCURRENT, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        while t < end and total < params.max_total_connections:
            sport = rng.randint(49152, 65535)
            detail = dict(meta)
            detail["src_port"] = sport
            events.append(_event(t, w, "connect", target, 0, detail, _tcp_handshake(rng), src, "tcp"))
            total += 1
            req_ts = t + rng.uniform(0.01, 0.04)
            if req_ts < end:
                if fallback:
                    fields = _tcp_segment(rng, rng.randint(120, 180))
                else:
                    fields = _tcp_segment(rng, rng.randint(60, 110))
                    fields.update(
                        {
                            "http2.length": rng.randint(30, 60),
                            "http2.header.length": rng.randint(20, 40),
                            "http2.header.name.length": 7,
                            "http2.header.value.length": rng.randint(8, 24),
                        }
                    )
                events.append(
                    _event(req_ts, w, "request", target, 0,
                           {"protocol": proto, "src_port": sport}, fields, src, "tcp")
                )
            t += rng.uniform(0.1, 0.2)
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_http2_pause(
    params: AttackParams,
    sink: TrafficSink,
    *,
    window=None,
    target=None,
    capabilities: Optional[set] = None,
) -> list[AttackEvent]:
    """Per-connection strict pause/resume alternation at the pause period."""
    if params.pause_period <= 0:
        raise ParameterError("pause_period must be > 0")
    start, end, target = _resolve(params, sink, window, target)
    fallback = capabilities is not None and "h2" not in capabilities
    streams = []
    for w in range(params.parallelism):
        if start >= end:
            streams.append([])
            continue
        rng = _worker_rng(AttackKind.HTTP2_PAUSE, params.seed, w, start)
        src = worker_addr(w)
        sport = rng.randint(49152, 65535)
        events = [
            _event(start, w, "connect", target, 0,
                   {"fallback_h1.1": fallback, "src_port": sport}, _tcp_handshake(rng), src, "tcp")
        ]
        k = 1
        while True:
            ts = start + k * params.pause_period
            if ts >= end:
                break
            action = "pause" if k % 2 == 1 else "resume"
            fields = _tcp_segment(rng, 0, push=False)
            fields["http2.length"] = 4  # WINDOW_UPDATE-sized control frame
            events.append(_event(ts, w, action, target, 0, {"src_port": sport}, fields, src, "tcp"))
            k += 1
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


def plan_http_smuggle(
    params: AttackParams, sink: TrafficSink, *, window=None, target=None
) -> list[AttackEvent]:
    """Requests with conflicting length framing (CL.TE / TE.CL) or an h2c
    Upgrade, one request per period per worker."""
    if params.smuggle_variant not in SMUGGLE_VARIANTS:
        raise ParameterError(
            f"unknown smuggle variant {params.smuggle_variant!r}; expected one of {SMUGGLE_VARIANTS}"
        )
    start, end, target = _resolve(params, sink, window, target)
    variant = params.smuggle_variant
    streams = []
    for w in range(params.parallelism):
        rng = _worker_rng(AttackKind.HTTP_SMUGGLE, params.seed, w, start)
        src = worker_addr(w)
        events = []
        t = start
        while t < end:
            sport = rng.randint(49152, 65535)
            events.append(
                _event(t, w, "connect", target, 0, {"src_port": sport}, _tcp_handshake(rng), src, "tcp")
            )
            req_ts = t + rng.uniform(0.01, 0.04)
            if req_ts < end:
                if variant == "h2c_upgrade":
                    detail = {
                        "variant": variant,
                        "upgrade": "h2c",
                        "headers": {"connection": "Upgrade, HTTP2-Settings", "upgrade": "h2c"},
                        "src_port": sport,
                    }
                    fields = _tcp_segment(rng, rng.randint(160, 220))
                else:
                    body_len = 4
                    detail = {
                        "variant": variant,
                        "content_length": body_len,
                        "transfer_encoding": "chunked",
                        "src_port": sport,
                    }
                    fields = _tcp_segment(rng, rng.randint(180, 260))
                    fields["http.content_length"] = body_len
                    fields["http.content_type"] = "application/x-www-form-urlencoded"
                events.append(
                    _event(req_ts, w, "request", target, detail.get("content_length", 0),
                           detail, fields, src, "tcp")
                )
            t += params.request_period
        streams.append(events)
    plan = _merge(streams)
    sink.extend(plan)
    return plan


_PLANNERS: dict[AttackKind, Callable] = {
    AttackKind.HTTP3_FLOOD: plan_http3_flood,
    AttackKind.SLOW_RATE_POST: plan_slow_rate_post,
    AttackKind.HTTP3_TABLES_STREAMS: plan_tables_streams,
    AttackKind.HTTP3_LORIS: plan_http3_loris,
    AttackKind.QUIC_LORIS: plan_quic_loris,
    AttackKind.QUIC_FLOOD: plan_quic_flood,
    AttackKind.QUIC_ENC: plan_quic_enc,
    AttackKind.FUZZING: plan_fuzzing,
    AttackKind.HTTP_SMUGGLE: plan_http_smuggle,
    AttackKind.HTTP2_CONCURRENT: plan_http2_concurrent,
    AttackKind.HTTP2_PAUSE: plan_http2_pause,
}


def plan_attack(
    kind: AttackKind,
    params: AttackParams,
    sink: TrafficSink,
    *,
    window=None,
    target=None,
    capabilities: Optional[set] = None,
) -> list[AttackEvent]:
    """Dispatch to the planner for ``kind``."""
    planner = _PLANNERS.get(kind)
    if planner is None:
        raise ParameterError(f"kind {kind} is not plannable")
    if kind in (AttackKind.HTTP2_CONCURRENT, AttackKind.HTTP2_PAUSE):
        return planner(params, sink, window=window, target=target, capabilities=capabilities)
    return planner(params, sink, window=window, target=target)


# ---------------------------------------------------------------------------
# Downgrade probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DowngradeReport:
    target: str
    http3_only_configured: bool
    accepted_versions: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "http3_only_configured": self.http3_only_configured,
            "accepted_versions": sorted(self.accepted_versions),
        }


def _probe_h11(host: str, port: int, timeout: float) -> bool:
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            sock.sendall(b"GET / HTTP/1.1\r\nHost: %b\r\nConnection: close\r\n\r\n" % host.encode())
            return sock.recv(9).startswith(b"HTTP/1.")
    except OSError:
        return False


def _probe_h2_alpn(host: str, port: int, timeout: float) -> bool:
    ctx = ssl.create_default_context()
    ctx.check_hostname = False
    ctx.verify_mode = ssl.CERT_NONE
    ctx.set_alpn_protocols(["h2"])
    try:
        with socket.create_connection((host, port), timeout=timeout) as sock:
            with ctx.wrap_socket(sock, server_hostname=host) as tls:
                return tls.selected_alpn_protocol() == "h2"
    except (OSError, ssl.SSLError):
        return False


def downgrade_probe(
    target: str,
    sink: Optional[TrafficSink] = None,
    *,
    capabilities: Optional[set] = None,
    http3_only_configured: bool = True,
    timeout: float = 3.0,
) -> DowngradeReport:
    """Check whether a host meant to speak only HTTP/3 also accepts
    HTTP/1.1 or HTTP/2 over TCP.

    With a ``capabilities`` stub the probe is evaluated against it (test
    path). Otherwise live mode is required: h1.1 via a plain TCP request,
    h2 via TLS ALPN negotiation. h3 reachability needs an external QUIC
    transport and is only reported from stubs.
    """
    if capabilities is not None:
        accepted = frozenset(v for v in ("h1.1", "h2", "h3") if v in capabilities)
        return DowngradeReport(target, http3_only_configured, accepted)
    if sink is None or sink.mode != "live":
        raise ParameterError("downgrade probe needs live mode or a capability stub")
    sink.check_safety()
    host, _, port_s = target.rpartition(":")
    if not host:
        raise ParameterError(f"target must be host:port, got {target!r}")
    port = int(port_s)
    accepted = set()
    try:
        if _probe_h11(host, port, timeout):
            accepted.add("h1.1")
        if _probe_h2_alpn(host, port, timeout):
            accepted.add("h2")
    except Exception as exc:  # pragma: no cover - network dependent
        raise ProbeError(
            str(exc), partial=DowngradeReport(target, http3_only_configured, frozenset(accepted))
        ) from exc
    return DowngradeReport(target, http3_only_configured, frozenset(accepted))


# ---------------------------------------------------------------------------
# Live execution contract
# ---------------------------------------------------------------------------

class Transport(Protocol):
    """What the engine needs from a real HTTP/2/QUIC stack to go live.

    Handshakes are out of scope here; implementations wrap an external
    conformant client.
    """

    def open_connection(self, target: str, transport_params: dict) -> object: ...

    def open_stream(self, conn: object) -> object: ...

    def write(self, conn: object, data: bytes) -> None: ...

    def close(self, conn: object) -> None: ...


def execute_plan(
    plan: Iterable[AttackEvent],
    transport: Transport,
    sink: TrafficSink,
    *,
    sleep: Callable[[float], None] | None = None,
) -> int:
    """Replay a plan over a live transport; returns the number of actions.

    ``sleep`` is injectable for tests; pass ``None`` to run as fast as the
    transport allows.
    """
    sink.check_safety()
    connections: dict[tuple[int, str], object] = {}
    now = 0.0
    count = 0
    for ev in plan:
        if sleep is not None and ev.ts > now:
            sleep(ev.ts - now)
            now = ev.ts
        key = (ev.worker_id, ev.target)
        if ev.action == "connect":
            connections[key] = transport.open_connection(
                ev.target, {k: v for k, v in ev.detail.items() if k != "fields"}
            )
        elif ev.action in ("request", "send_datagram"):
            conn = connections.get(key)
            if conn is None:
                conn = transport.open_connection(ev.target, {})
                connections[key] = conn
            transport.write(conn, gen_fuzz_payload(ev.worker_id, ev.bytes))
        elif ev.action in ("close", "timeout"):
            conn = connections.pop(key, None)
            if conn is not None:
                transport.close(conn)
        count += 1
    for conn in connections.values():
        transport.close(conn)
    return count
