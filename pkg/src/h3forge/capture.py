"""Traffic ingestion and labeling.

Reads classic pcap files (Ethernet link type, IPv4) or the engine's own
event logs into unified :class:`PacketRecord` streams, labels them
against a campaign manifest, splits them per server, and computes PPS
footprints and per-attack traffic statistics.

Labeling rule: a packet gets the manifest's attack kind iff its source or
destination is in the attacker address set AND its timestamp falls in an
attack phase; everything else is Normal. pcap-ng and IPv6 are out of
scope. Non-TCP/UDP IP packets are skipped with their own counter since
records are typed tcp-or-udp.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .campaign import CampaignSchedule, ServerTarget
from .engine import AttackEvent
from .features import map_class, round_half_up
from .wire import InnerEncapsulation, build_inner_encapsulation

PCAP_MAGIC_US = 0xA1B2C3D4
PCAP_MAGIC_NS = 0xA1B23C4D
LINKTYPE_ETHERNET = 1
ETHERTYPE_IPV4 = 0x0800

# frame length floor for actions whose fields carry no explicit size
NOMINAL_FRAME_LEN = 60


class IngestError(Exception):
    """Unreadable or unsupported capture file."""


@dataclass(frozen=True)
class PacketRecord:
    ts: float
    src: str
    dst: str
    src_port: int
    dst_port: int
    l4: str  # "tcp" or "udp"
    length: int
    summary_fields: Optional[dict] = None


@dataclass(frozen=True)
class LabeledPacket:
    record: PacketRecord
    label: str  # "Normal" or an attack kind value
    cls: str  # five-class detection label


@dataclass
class IngestCounters:
    non_ip: int = 0
    truncated: int = 0
    other_l4: int = 0


@dataclass
class IngestResult:
    records: list[PacketRecord]
    counters: IngestCounters


def iter_pcap(path, counters: Optional[IngestCounters] = None):
    """Yield one PacketRecord per IPv4 TCP/UDP packet in a classic pcap."""
    if counters is None:
        counters = IngestCounters()
    with open(path, "rb") as fh:
        header = fh.read(24)
        if len(header) < 24:
            raise IngestError(f"{path}: truncated pcap global header")
        magic = struct.unpack("<I", header[:4])[0]
        if magic in (PCAP_MAGIC_US, PCAP_MAGIC_NS):
            endian = "<"
        else:
            magic = struct.unpack(">I", header[:4])[0]
            if magic not in (PCAP_MAGIC_US, PCAP_MAGIC_NS):
                raise IngestError(f"{path}: not a classic pcap file")
            endian = ">"
        subsec_div = 1e6 if magic == PCAP_MAGIC_US else 1e9
        network = struct.unpack(f"{endian}I", header[20:24])[0]
        if network != LINKTYPE_ETHERNET:
            raise IngestError(f"{path}: unsupported link type {network}")
        while True:
            rec_header = fh.read(16)
            if not rec_header:
                break
            if len(rec_header) < 16:
                counters.truncated += 1
                break
            ts_sec, ts_sub, incl_len, orig_len = struct.unpack(f"{endian}IIII", rec_header)
            frame = fh.read(incl_len)
            if len(frame) < incl_len or incl_len < orig_len:
                counters.truncated += 1
                continue
            record = _parse_frame(ts_sec + ts_sub / subsec_div, frame, counters)
            if record is not None:
                yield record


def _parse_frame(ts: float, frame: bytes, counters: IngestCounters) -> Optional[PacketRecord]:
    if len(frame) < 34:  # ethernet + minimal ipv4
        counters.non_ip += 1
        return None
    ethertype = struct.unpack(">H", frame[12:14])[0]
    if ethertype != ETHERTYPE_IPV4:
        counters.non_ip += 1
        return None
    ip = frame[14:]
    ihl = (ip[0] & 0x0F) * 4
    if (ip[0] >> 4) != 4 or len(ip) < ihl:
        counters.truncated += 1
        return None
    proto = ip[9]
    if proto == 6:
        l4 = "tcp"
    elif proto == 17:
        l4 = "udp"
    else:
        counters.other_l4 += 1
        return None
    transport = ip[ihl:]
    if len(transport) < 4:
        counters.truncated += 1
        return None
    src_port, dst_port = struct.unpack(">HH", transport[:4])
    src = ".".join(str(b) for b in ip[12:16])
    dst = ".".join(str(b) for b in ip[16:20])
    return PacketRecord(
        ts=ts, src=src, dst=dst, src_port=src_port, dst_port=dst_port,
        l4=l4, length=len(frame), summary_fields=None,
    )


def ingest_pcap(path) -> IngestResult:
    counters = IngestCounters()
    records = list(iter_pcap(path, counters))
    return IngestResult(records=records, counters=counters)


def write_pcap(path, frames: Iterable[tuple[float, bytes]]) -> None:
    """Classic little-endian microsecond pcap with Ethernet link type."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<IHHiIII", PCAP_MAGIC_US, 2, 4, 0, 0, 65535, LINKTYPE_ETHERNET))
        for ts, frame in frames:
            sec = int(ts)
            usec = int(round((ts - sec) * 1e6))
            fh.write(struct.pack("<IIII", sec, usec, len(frame), len(frame)))
            fh.write(frame)


def record_to_frame(record: PacketRecord) -> bytes:
    """Synthesize an Ethernet frame matching the record's 5-tuple and length."""
    overhead = 14 + 20 + (20 if record.l4 == "tcp" else 8)
    payload = b"\x00" * max(record.length - overhead, 0)
    inner = build_inner_encapsulation(
        InnerEncapsulation(
            transport=record.l4,
            src_addr=record.src,
            dst_addr=record.dst,
            src_port=record.src_port,
            dst_port=record.dst_port,
            payload=payload,
        )
    )
    eth = b"\x12\x34\x56\x78\x9a\xbc" * 2 + struct.pack(">H", ETHERTYPE_IPV4)
    return eth + inner


def _split_hostport(target: str) -> tuple[str, int]:
    host, sep, port = target.rpartition(":")
    if not sep:
        return target, 0
    try:
        return host, int(port)
    except ValueError:
        return target, 0


def event_to_packet(event: AttackEvent, t0: float = 0.0) -> PacketRecord:
    """Project an engine event onto the unified packet record shape."""
    fields = event.detail.get("fields", {})
    length = fields.get("frame.len", NOMINAL_FRAME_LEN)
    if isinstance(length, (list, tuple)):
        length = length[0]
    dst, dst_port = _split_hostport(event.target)
    return PacketRecord(
        ts=t0 + event.ts,
        src=event.detail.get("src", "0.0.0.0"),
        dst=dst,
        src_port=int(event.detail.get("src_port", 0)),
        dst_port=dst_port,
        l4=event.detail.get("l4", "udp"),
        length=int(length),
        summary_fields=fields,
    )


def events_to_packets(events: Iterable[AttackEvent], t0: float = 0.0) -> list[PacketRecord]:
    return [event_to_packet(ev, t0) for ev in events]


@dataclass
class LabelCounters:
    outside_horizon: int = 0


def label_packets(
    records: Iterable[PacketRecord],
    manifest: dict,
    attacker_addrs: Optional[set[str]] = None,
    counters: Optional[LabelCounters] = None,
) -> list[LabeledPacket]:
    """Label records against a campaign manifest.

    Attack kind applies iff (src or dst in the attacker set) and the
    packet's campaign-relative timestamp falls in an attack phase.
    Timestamps outside the schedule horizon label Normal with a warning
    counter.
    """
    schedule = CampaignSchedule.from_dict(manifest["schedule"])
    attack_kind = manifest["attack"]
    t0 = manifest.get("t0", 0.0)
    if attacker_addrs is None:
        attacker_addrs = set(manifest.get("attacker_addrs", ()))
    if counters is None:
        counters = LabelCounters()
    labeled = []
    for record in records:
        rel = record.ts - t0
        phase = schedule.phase_at(rel)
        if phase is None:
            counters.outside_horizon += 1
            label = "Normal"
        elif phase.kind == "attack" and (record.src in attacker_addrs or record.dst in attacker_addrs):
            label = attack_kind
        else:
            label = "Normal"
        labeled.append(LabeledPacket(record=record, label=label, cls=map_class(label)))
    return labeled


def split_per_server(
    records: Iterable[PacketRecord], servers: Iterable[ServerTarget]
) -> dict[str, list[PacketRecord]]:
    """Assign each record to the server whose address matches its src or
    dst; everything else lands in the "other" bucket."""
    by_host = {_split_hostport(s.address)[0]: s.name for s in servers}
    buckets: dict[str, list[PacketRecord]] = {name: [] for name in by_host.values()}
    buckets["other"] = []
    for record in records:
        name = by_host.get(record.src) or by_host.get(record.dst)
        buckets[name if name else "other"].append(record)
    return buckets


@dataclass
class FootprintSeries:
    """Per-bucket packet counts, split normal vs malicious."""

    bucket: float
    normal: dict[int, int] = field(default_factory=dict)
    malicious: dict[int, int] = field(default_factory=dict)

    def total(self) -> int:
        return sum(self.normal.values()) + sum(self.malicious.values())

    def buckets(self) -> list[int]:
        keys = set(self.normal) | set(self.malicious)
        if not keys:
            return []
        return list(range(0, max(keys) + 1))

    def rows(self) -> list[tuple[float, int, int]]:
        return [
            (b * self.bucket, self.normal.get(b, 0), self.malicious.get(b, 0))
            for b in self.buckets()
        ]

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "normal_pps", "malicious_pps"])
            for t, normal, malicious in self.rows():
                writer.writerow([f"{t:g}", normal, malicious])


def footprint(labeled: Iterable[LabeledPacket], bucket: float = 1.0) -> FootprintSeries:
    if bucket <= 0:
        raise ValueError(f"bucket must be > 0, got {bucket}")
    series = FootprintSeries(bucket=bucket)
    for lp in labeled:
        index = int(lp.record.ts // bucket)
        side = series.normal if lp.label == "Normal" else series.malicious
        side[index] = side.get(index, 0) + 1
    return series


@dataclass
class TrafficStats:
    normal_count: int
    malicious_count: int
    pct_malicious_to_normal: Optional[float]  # None when normal_count == 0
    per_server: list[tuple[str, int, int, float]]  # (name, total, malicious, pct of total)

    def format_table(self) -> str:
        ratio = "n/a" if self.pct_malicious_to_normal is None else f"{self.pct_malicious_to_normal:.2f}"
        lines = [
            f"normal/malicious: {self.normal_count:,}/{self.malicious_count:,} ({ratio}%)",
            f"{'server':<16}{'total':>12}{'malicious':>12}{'%':>8}",
        ]
        for name, total, malicious, pct in self.per_server:
            lines.append(f"{name:<16}{total:>12,}{malicious:>12,}{pct:>8.2f}")
        return "\n".join(lines)


def ratio_pct(malicious: int, base: int) -> Optional[float]:
    """100*malicious/base rounded half-up to 2 decimals; None for base 0."""
    if base == 0:
        return None
    return round_half_up(100.0 * malicious / base, 2)


def stats(labeled: Iterable[LabeledPacket], servers: Iterable[ServerTarget]) -> TrafficStats:
    labeled = list(labeled)
    normal = sum(1 for lp in labeled if lp.label == "Normal")
    malicious = len(labeled) - normal
    split = split_per_server((lp.record for lp in labeled), servers)
    mal_records = {id(lp.record) for lp in labeled if lp.label != "Normal"}
    per_server = []
    for server in servers:
        bucket = split.get(server.name, [])
        total = len(bucket)
        bad = sum(1 for r in bucket if id(r) in mal_records)
        pct = ratio_pct(bad, total)
        per_server.append((server.name, total, bad, pct if pct is not None else 0.0))
    return TrafficStats(
        normal_count=normal,
        malicious_count=malicious,
        pct_malicious_to_normal=ratio_pct(malicious, normal),
        per_server=per_server,
    )


LABELED_CSV_COLUMNS = ["ts", "src", "dst", "l4", "length", "label", "class"]


def write_labeled_csv(path, labeled: Iterable[LabeledPacket]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABELED_CSV_COLUMNS)
        for lp in labeled:
            writer.writerow(
                [
                    f"{lp.record.ts:.6f}",
                    lp.record.src,
                    lp.record.dst,
                    lp.record.l4,
                    lp.record.length,
                    lp.label,
                    lp.cls,
                ]
            )


def read_labeled_csv(path) -> list[LabeledPacket]:
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LABELED_CSV_COLUMNS:
            raise IngestError(f"{path}: unexpected labeled CSV header {header}")
        for ts, src, dst, l4, length, label, cls in reader:
            record = PacketRecord(
                ts=float(ts), src=src, dst=dst, src_port=0, dst_port=0,
                l4=l4, length=int(length), summary_fields=None,
            )
            out.append(LabeledPacket(record=record, label=label, cls=cls))
    return out
