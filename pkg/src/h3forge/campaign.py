"""Campaign timelines: per-attack phase schedules, benign background
traffic, and orchestration of a full run into a single time-ordered log.

Schedules follow the dataset's published timing: flood-family attacks run
10 minutes with the first 4 normal and one minute per server after that;
the tables/streams attack runs two back-to-back cycles; smuggling spends
2 minutes per server starting at minute 3; the HTTP/2 kinds rotate every
30 seconds starting at minute 3.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .engine import (
    AttackEvent,
    AttackKind,
    AttackParams,
    ParameterError,
    SETTINGS_VARIANT_HIGH,
    SETTINGS_VARIANT_LOW,
    SMUGGLE_VARIANTS,
    TrafficSink,
    attacker_addresses,
    default_params,
    plan_attack,
    write_events,
)

NORMAL_LEAD_FLOOD = 240.0
ATTACK_SLICE_FLOOD = 60.0
NORMAL_LEAD_SMUGGLE = 180.0
ATTACK_SLICE_SMUGGLE = 120.0
NORMAL_LEAD_HTTP2 = 180.0
ATTACK_SLICE_HTTP2 = 30.0
STREAM_MID_NORMAL = 180.0
STREAM_TAIL_NORMAL = 60.0

FLOOD_FAMILY = {
    AttackKind.HTTP3_FLOOD,
    AttackKind.FUZZING,
    AttackKind.HTTP3_LORIS,
    AttackKind.QUIC_FLOOD,
    AttackKind.QUIC_LORIS,
    AttackKind.QUIC_ENC,
}
HTTP2_KINDS = {AttackKind.HTTP2_CONCURRENT, AttackKind.HTTP2_PAUSE}

BENIGN_ADDR_PREFIX = "192.0.2."
RESOLVER = "192.0.2.1:53"


@dataclass(frozen=True)
class ServerTarget:
    name: str
    address: str  # host:port
    capabilities: frozenset[str] = frozenset({"h1.1", "h3"})

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "address": self.address,
            "capabilities": sorted(self.capabilities),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ServerTarget":
        return cls(d["name"], d["address"], frozenset(d.get("capabilities", ["h1.1", "h3"])))


# Rotation order used by the dataset; Caddy, IIS, and H2O enable HTTP/2 by
# default. Addresses are synthetic (the testbed's router IPs overlap).
DEFAULT_SERVERS: tuple[ServerTarget, ...] = (
    ServerTarget("OpenLiteSpeed", "10.0.0.4:443", frozenset({"h1.1", "h3"})),
    ServerTarget("Caddy", "10.0.0.5:443", frozenset({"h1.1", "h2", "h3"})),
    ServerTarget("NGINX", "10.2.0.4:443", frozenset({"h1.1", "h3"})),
    ServerTarget("IIS", "10.3.0.4:443", frozenset({"h1.1", "h2", "h3"})),
    ServerTarget("Cloudflare", "10.1.0.4:443", frozenset({"h1.1", "h3"})),
    ServerTarget("H2O", "10.4.0.4:443", frozenset({"h1.1", "h2", "h3"})),
)


@dataclass(frozen=True)
class Phase:
    start: float
    end: float
    kind: str  # "normal" or "attack"
    target: Optional[ServerTarget] = None
    settings_variant: Optional[str] = None  # tables/streams cycles
    smuggle_variant: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"start": self.start, "end": self.end, "kind": self.kind}
        if self.target is not None:
            d["target"] = self.target.to_dict()
        if self.settings_variant is not None:
            d["settings_variant"] = self.settings_variant
        if self.smuggle_variant is not None:
            d["smuggle_variant"] = self.smuggle_variant
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Phase":
        return cls(
            start=d["start"],
            end=d["end"],
            kind=d["kind"],
            target=ServerTarget.from_dict(d["target"]) if "target" in d else None,
            settings_variant=d.get("settings_variant"),
            smuggle_variant=d.get("smuggle_variant"),
        )


@dataclass
class CampaignSchedule:
    attack: AttackKind
    total: float
    phases: list[Phase]

    def validate(self) -> None:
        cursor = 0.0
        for phase in self.phases:
            if phase.start != cursor:
                raise ParameterError(f"phase gap/overlap at {phase.start} (expected {cursor})")
            if phase.end <= phase.start:
                raise ParameterError(f"empty phase at {phase.start}")
            if phase.kind == "attack" and phase.target is None:
                raise ParameterError("attack phase without a target")
            cursor = phase.end
        if cursor != self.total:
            raise ParameterError(f"phases cover [0, {cursor}), expected [0, {self.total})")

    def attack_seconds(self) -> float:
        return sum(p.end - p.start for p in self.phases if p.kind == "attack")

    def attack_phases(self) -> list[Phase]:
        return [p for p in self.phases if p.kind == "attack"]

    def phase_at(self, ts: float) -> Optional[Phase]:
        for phase in self.phases:
            if phase.start <= ts < phase.end:
                return phase
        return None

    def to_dict(self) -> dict:
        return {
            "attack": self.attack.value,
            "total": self.total,
            "phases": [p.to_dict() for p in self.phases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CampaignSchedule":
        return cls(
            attack=AttackKind(d["attack"]),
            total=d["total"],
            phases=[Phase.from_dict(p) for p in d["phases"]],
        )


def _unique_names(servers: Iterable[ServerTarget]) -> None:
    names = [s.name for s in servers]
    if len(set(names)) != len(names):
        raise ParameterError(f"server names must be unique: {names}")


def build_schedule(
    attack: AttackKind,
    servers: Iterable[ServerTarget] = DEFAULT_SERVERS,
    *,
    variant_order: tuple[str, str] = ("high", "low"),
) -> CampaignSchedule:
    """Build the published per-attack timeline over ``servers`` in rotation
    order. ``variant_order`` assigns the tables/streams cycle variants
    (the dataset ran high first, then low)."""
    servers = list(servers)
    if not servers:
        raise ParameterError("at least one server target required")
    _unique_names(servers)

    phases: list[Phase] = []
    if attack in FLOOD_FAMILY:
        phases.append(Phase(0.0, NORMAL_LEAD_FLOOD, "normal"))
        t = NORMAL_LEAD_FLOOD
        for server in servers:
            phases.append(Phase(t, t + ATTACK_SLICE_FLOOD, "attack", server))
            t += ATTACK_SLICE_FLOOD
        total = t
    elif attack == AttackKind.HTTP3_TABLES_STREAMS:
        if set(variant_order) != {"high", "low"}:
            raise ParameterError(f"variant_order must contain high and low: {variant_order}")
        phases.append(Phase(0.0, NORMAL_LEAD_FLOOD, "normal"))
        t = NORMAL_LEAD_FLOOD
        for cycle, variant in enumerate(variant_order):
            for server in servers:
                phases.append(
                    Phase(t, t + ATTACK_SLICE_FLOOD, "attack", server, settings_variant=variant)
                )
                t += ATTACK_SLICE_FLOOD
            if cycle == 0:
                phases.append(Phase(t, t + STREAM_MID_NORMAL, "normal"))
                t += STREAM_MID_NORMAL
        phases.append(Phase(t, t + STREAM_TAIL_NORMAL, "normal"))
        total = t + STREAM_TAIL_NORMAL
    elif attack == AttackKind.HTTP_SMUGGLE:
        phases.append(Phase(0.0, NORMAL_LEAD_SMUGGLE, "normal"))
        t = NORMAL_LEAD_SMUGGLE
        for i, server in enumerate(servers):
            phases.append(
                Phase(
                    t,
                    t + ATTACK_SLICE_SMUGGLE,
                    "attack",
                    server,
                    smuggle_variant=SMUGGLE_VARIANTS[i % len(SMUGGLE_VARIANTS)],
                )
            )
            t += ATTACK_SLICE_SMUGGLE
        total = t
    elif attack in HTTP2_KINDS:
        phases.append(Phase(0.0, NORMAL_LEAD_HTTP2, "normal"))
        t = NORMAL_LEAD_HTTP2
        for server in servers:
            phases.append(Phase(t, t + ATTACK_SLICE_HTTP2, "attack", server))
            t += ATTACK_SLICE_HTTP2
        total = t
    else:
        raise ParameterError(f"{attack.value} has no dataset timeline")

    schedule = CampaignSchedule(attack=attack, total=total, phases=phases)
    schedule.validate()
    return schedule


@dataclass(frozen=True)
class BenignClientModel:
    client_count: int = 13
    page_wait: float = 5.0
    sleep_range: tuple[float, float] = (1.0, 5.0)
    seed: int = 0

    def to_dict(self) -> dict:
        return {
            "client_count": self.client_count,
            "page_wait": self.page_wait,
            "sleep_range": list(self.sleep_range),
            "seed": self.seed,
        }


def benign_addr(client: int) -> str:
    return f"{BENIGN_ADDR_PREFIX}{10 + client}"


def _benign_fields_h3(rng: random.Random) -> dict:
    block = rng.randint(40, 80)
    packet = block + rng.randint(16, 26)
    return {
        "quic.packet_length": packet,
        "quic.packet_number_length": 1,
        "quic.stream.len": block + 2,
        "quic.stream.fin": 1,
        "quic.spin_bit": rng.getrandbits(1),
        "quic.fixed_bit": 1,
        "http3.frame_length": block,
        "udp.length": 8 + packet,
        "ip.len": 28 + packet,
        "frame.len": 42 + packet,
    }


def _benign_fields_tcp(rng: random.Random, h2: bool) -> dict:
    payload = rng.randint(90, 160)
    fields = {
        "tcp.flags.syn": 0,
        "tcp.flags.ack": 1,
        "tcp.flags.push": 1,
        "tcp.flags.reset": 0,
        "tcp.flags.fin": 0,
        "tcp.window_size_value": rng.choice([501, 513, 1026]),
        "tcp.len": payload,
        "tcp.hdr_len": 20,
        "ip.len": 40 + payload,
        "frame.len": 54 + payload,
    }
    if h2:
        fields.update(
            {
                "http2.length": rng.randint(24, 48),
                "http2.header.length": rng.randint(16, 36),
                "http2.header.name.length": rng.randint(4, 10),
                "http2.header.value.length": rng.randint(6, 20),
            }
        )
    return fields


def _benign_connect_fields(rng: random.Random, proto: str) -> dict:
    hs = rng.randint(280, 360)
    tls = {
        "tls.handshake.length": hs,
        "tls.handshake.session_id_length": 32,
        "tls.handshake.cipher_suites_length": rng.choice([32, 36]),
        "tls.handshake.extensions_length": hs - rng.randint(80, 100),
        "tls.record.length": hs + 4,
    }
    if proto == "h3":
        packet = 1200
        fields = {
            "quic.packet_length": packet,
            "quic.packet_number_length": rng.randint(1, 2),
            "quic.length": packet - rng.randint(18, 26),
            "quic.nci.connection_id.length": 8,
            "quic.crypto.length": hs,
            "quic.padding_length": packet - hs - rng.randint(40, 60),
            "quic.token_length": rng.choice([0, 16]),
            "quic.fixed_bit": 1,
            "quic.long.packet_type": 0,
            # browsers advertise the stock QPACK limits on connect
            "http3.settings.qpack.max_table_capacity": 4096,
            "http3.settings.max_field_section_size": 16384,
            "udp.length": 8 + packet,
            "ip.len": 28 + packet,
            "frame.len": 42 + packet,
        }
        fields.update(tls)
        return fields
    fields = {
        "tcp.flags.syn": 1,
        "tcp.flags.ack": 0,
        "tcp.flags.push": 0,
        "tcp.flags.reset": 0,
        "tcp.flags.fin": 0,
        "tcp.window_size_value": 64240,
        "tcp.option_len": 20,
        "tcp.len": 0,
        "tcp.hdr_len": 40,
        "ip.len": 60,
        "frame.len": 74,
    }
    fields.update(tls)
    return fields


def benign_traffic(
    model: BenignClientModel,
    horizon: float,
    servers: Iterable[ServerTarget] = DEFAULT_SERVERS,
) -> list[AttackEvent]:
    """Background web-browsing traffic: each client repeatedly picks a random
    server, fetches the landing page, waits out the page, sleeps 1-5 s,
    and goes again. Deterministic under the model seed."""
    servers = list(servers)
    if horizon <= 0:
        return []
    lo, hi = model.sleep_range
    events: list[AttackEvent] = []
    for client in range(model.client_count):
        rng = random.Random(f"benign:{model.seed}:{client}")
        src = benign_addr(client)
        seen: set[str] = set()
        t = rng.uniform(lo, hi)
        while t < horizon:
            server = rng.choice(servers)
            proto = "h3" if "h3" in server.capabilities else ("h2" if "h2" in server.capabilities else "h1.1")
            if proto == "h3" and rng.random() < 0.15:
                proto = "h2" if "h2" in server.capabilities else "h1.1"
            l4 = "udp" if proto == "h3" else "tcp"
            sport = rng.randint(49152, 65535)
            if rng.random() < 0.25:
                # fresh name resolution before the page fetch
                q = {
                    "fields": {
                        "dns.count.queries": 1,
                        "dns.flags.response": 0,
                        "udp.length": rng.randint(40, 64),
                        "ip.len": rng.randint(60, 84),
                        "frame.len": rng.randint(74, 98),
                    },
                    "src": src,
                    "l4": "udp",
                    "role": "benign",
                    "src_port": sport,
                }
                events.append(AttackEvent(round(max(0.0, t - 0.005), 6), client, "send_datagram", RESOLVER, 0, q))
                a = {
                    "fields": {
                        "dns.count.queries": 1,
                        "dns.count.answers": rng.randint(1, 2),
                        "dns.flags.response": 1,
                        "udp.length": rng.randint(56, 96),
                        "ip.len": rng.randint(76, 116),
                        "frame.len": rng.randint(90, 130),
                    },
                    "src": src,
                    "l4": "udp",
                    "role": "benign",
                    "src_port": sport,
                }
                events.append(AttackEvent(round(max(0.0, t - 0.003), 6), client, "send_datagram", RESOLVER, 0, a))
            if server.address not in seen:
                seen.add(server.address)
                detail = {
                    "fields": _benign_connect_fields(rng, proto),
                    "src": src,
                    "l4": l4,
                    "role": "benign",
                    "protocol": proto,
                    "src_port": sport,
                }
                events.append(
                    AttackEvent(round(max(0.0, t - 0.001), 6), client, "connect", server.address, 0, detail)
                )
            fields = _benign_fields_h3(rng) if proto == "h3" else _benign_fields_tcp(rng, proto == "h2")
            detail = {
                "fields": fields,
                "src": src,
                "l4": l4,
                "role": "benign",
                "protocol": proto,
                "method": "GET",
                "src_port": sport,
            }
            events.append(AttackEvent(round(t, 6), client, "request", server.address, 0, detail))
            t += model.page_wait + rng.uniform(lo, hi)
    events.sort(key=lambda ev: ev.ts)
    return events


@dataclass
class CampaignLog:
    manifest: dict
    events: list[AttackEvent]

    def events_for_server(self, address: str) -> list[AttackEvent]:
        return [ev for ev in self.events if ev.target == address]

    def write(self, events_path, manifest_path) -> None:
        write_events(events_path, self.events)
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump(self.manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")


def load_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _variant_settings(variant: str):
    return SETTINGS_VARIANT_HIGH if variant == "high" else SETTINGS_VARIANT_LOW


def _phase_params(schedule: CampaignSchedule, phase: Phase, seed: int, base: Optional[AttackParams]) -> AttackParams:
    params = base if base is not None else default_params(schedule.attack, seed=seed)
    params = replace(params, seed=seed, duration=phase.end - phase.start)
    if schedule.attack == AttackKind.HTTP3_TABLES_STREAMS and phase.settings_variant:
        params = replace(params, settings=_variant_settings(phase.settings_variant))
    if schedule.attack == AttackKind.HTTP_SMUGGLE and phase.smuggle_variant:
        params = replace(params, smuggle_variant=phase.smuggle_variant)
    return params


def run_campaign(
    schedule: CampaignSchedule,
    model: BenignClientModel,
    sink: TrafficSink,
    *,
    servers: Iterable[ServerTarget] = DEFAULT_SERVERS,
    seed: int = 0,
    base_params: Optional[AttackParams] = None,
    address_remap_at: Optional[float] = None,
) -> CampaignLog:
    """Merge benign traffic over the whole horizon with attack traffic in
    the attack phases into one time-ordered, ground-truth-tagged log.

    ``address_remap_at`` optionally models the testbed's DSL routers
    changing public IPs mid-campaign; off by default.
    """
    servers = list(servers)
    schedule.validate()
    sink.check_safety()

    benign = benign_traffic(model, schedule.total, servers)
    if address_remap_at is not None:
        remapped = []
        for ev in benign:
            if ev.ts >= address_remap_at:
                detail = dict(ev.detail)
                client = ev.worker_id
                detail["src"] = f"{BENIGN_ADDR_PREFIX}{110 + client}"
                detail["remapped"] = True
                ev = AttackEvent(ev.ts, ev.worker_id, ev.action, ev.target, ev.bytes, detail)
            remapped.append(ev)
        benign = remapped
    for ev in benign:
        ev.detail["truth"] = "Normal"

    max_parallelism = 0
    attack_events: list[AttackEvent] = []
    for phase in schedule.attack_phases():
        params = _phase_params(schedule, phase, seed, base_params)
        max_parallelism = max(max_parallelism, params.parallelism)
        phase_sink = TrafficSink(mode=sink.mode, target=phase.target.address,
                                 target_acknowledged=sink.target_acknowledged)
        events = plan_attack(
            schedule.attack,
            params,
            phase_sink,
            window=(phase.start, phase.end),
            target=phase.target.address,
            capabilities=set(phase.target.capabilities),
        )
        for ev in events:
            ev.detail["truth"] = schedule.attack.value
        attack_events.extend(events)

    merged = benign + attack_events
    merged.sort(key=lambda ev: ev.ts)
    sink.extend(merged)

    manifest = {
        "attack": schedule.attack.value,
        "seed": seed,
        "mode": sink.mode,
        "t0": 0.0,
        "schedule": schedule.to_dict(),
        "servers": [s.to_dict() for s in servers],
        "attacker_addrs": attacker_addresses(max_parallelism),
        "benign": model.to_dict(),
        "event_count": len(merged),
    }
    return CampaignLog(manifest=manifest, events=merged)


def load_campaign_config(path) -> dict:
    """Campaign configuration file: servers, attack kind, seed, mode."""
    with open(path, encoding="utf-8") as fh:
        cfg = json.load(fh)
    if "servers" in cfg:
        cfg["servers"] = [ServerTarget.from_dict(s) for s in cfg["servers"]]
    if "attack" in cfg:
        cfg["attack"] = AttackKind(cfg["attack"])
    return cfg
