"""Byte-exact wire artifacts: QUIC varints, HTTP/3 SETTINGS frames,
inner IPv4 encapsulations, and reproducible fuzz payloads.

Everything here is a pure function of its inputs, so the module is safe
for unrestricted concurrent use.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

VARINT_MAX = (1 << 62) - 1

# HTTP/3 frame type (RFC 9114 section 7.2.4)
FRAME_TYPE_SETTINGS = 0x04

# Settings identifiers from the HTTP/3 and QPACK settings registries
SETTINGS_QPACK_MAX_TABLE_CAPACITY = 0x01
SETTINGS_MAX_FIELD_SECTION_SIZE = 0x06
SETTINGS_QPACK_BLOCKED_STREAMS = 0x07


class WireError(ValueError):
    """Raised on malformed or out-of-range wire data."""


def encode_varint(value: int) -> bytes:
    """Encode ``value`` as a QUIC variable-length integer (RFC 9000 section 16).

    The minimal of the four length classes (1, 2, 4, or 8 bytes) is used.
    """
    if value < 0 or value > VARINT_MAX:
        raise WireError(f"varint out of range [0, 2^62): {value}")
    if value <= 0x3F:
        return bytes([value])
    if value <= 0x3FFF:
        return struct.pack(">H", 0x4000 | value)
    if value <= 0x3FFFFFFF:
        return struct.pack(">I", 0x80000000 | value)
    return struct.pack(">Q", 0xC000000000000000 | value)


def decode_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode one varint at ``offset``; returns (value, bytes consumed)."""
    if offset >= len(data):
        raise WireError("empty input")
    first = data[offset]
    length = 1 << (first >> 6)
    if offset + length > len(data):
        raise WireError(f"truncated varint: need {length} bytes")
    value = first & 0x3F
    for b in data[offset + 1 : offset + length]:
        value = (value << 8) | b
    return value, length


@dataclass(frozen=True)
class SettingsFrame:
    """Parameters carried by a single HTTP/3 SETTINGS frame.

    ``None`` parameters are absent from the wire form, not zero-encoded.
    """

    max_table_capacity: Optional[int] = None
    blocked_streams: Optional[int] = None
    max_field_section_size: Optional[int] = None

    def as_pairs(self) -> list[tuple[int, int]]:
        pairs = []
        if self.max_table_capacity is not None:
            pairs.append((SETTINGS_QPACK_MAX_TABLE_CAPACITY, self.max_table_capacity))
        if self.max_field_section_size is not None:
            pairs.append((SETTINGS_MAX_FIELD_SECTION_SIZE, self.max_field_section_size))
        if self.blocked_streams is not None:
            pairs.append((SETTINGS_QPACK_BLOCKED_STREAMS, self.blocked_streams))
        return pairs


def build_settings_frame(frame: SettingsFrame) -> bytes:
    """Serialize ``frame`` as one HTTP/3 SETTINGS frame.

    Layout: frame type varint, payload length varint, then one
    identifier/value varint pair per provided parameter.
    """
    payload = b"".join(
        encode_varint(ident) + encode_varint(value) for ident, value in frame.as_pairs()
    )
    return encode_varint(FRAME_TYPE_SETTINGS) + encode_varint(len(payload)) + payload


def parse_settings_frame(data: bytes) -> SettingsFrame:
    """Inverse of :func:`build_settings_frame`; unknown identifiers are ignored."""
    ftype, used = decode_varint(data)
    if ftype != FRAME_TYPE_SETTINGS:
        raise WireError(f"not a SETTINGS frame: type {ftype:#x}")
    length, n = decode_varint(data, used)
    used += n
    if used + length > len(data):
        raise WireError("truncated SETTINGS payload")
    end = used + length
    known = {
        SETTINGS_QPACK_MAX_TABLE_CAPACITY: "max_table_capacity",
        SETTINGS_MAX_FIELD_SECTION_SIZE: "max_field_section_size",
        SETTINGS_QPACK_BLOCKED_STREAMS: "blocked_streams",
    }
    fields: dict[str, int] = {}
    while used < end:
        ident, n = decode_varint(data, used)
        used += n
        value, n = decode_varint(data, used)
        used += n
        if ident in known:
            fields[known[ident]] = value
    return SettingsFrame(**fields)


def _ones_complement_sum(data: bytes) -> int:
    if len(data) % 2:
        data += b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total


def ipv4_checksum(header: bytes) -> int:
    """RFC 791 ones-complement header checksum (checksum field zeroed by caller)."""
    return (~_ones_complement_sum(header)) & 0xFFFF


def _pack_addr(addr: str) -> bytes:
    parts = addr.split(".")
    if len(parts) != 4:
        raise WireError(f"bad IPv4 address: {addr!r}")
    try:
        octets = [int(p) for p in parts]
    except ValueError as exc:
        raise WireError(f"bad IPv4 address: {addr!r}") from exc
    if any(o < 0 or o > 255 for o in octets):
        raise WireError(f"bad IPv4 address: {addr!r}")
    return bytes(octets)


@dataclass(frozen=True)
class InnerEncapsulation:
    """An inner IPv4 packet carried as the payload of an outer UDP datagram.

    The outer IP(UDP(...)) layers are supplied by the host network stack;
    this type owns only the inner IP(TCP) or IP(UDP) bytes.
    """

    transport: str  # "tcp" or "udp"
    src_addr: str = "10.0.0.1"
    dst_addr: str = "10.0.0.2"
    src_port: int = 1024
    dst_port: int = 80
    payload: bytes = b""


def _transport_segment(enc: InnerEncapsulation) -> bytes:
    if enc.transport == "tcp":
        # minimal 20-byte header: SYN, window 8192, checksum filled below
        header = struct.pack(
            ">HHIIBBHHH",
            enc.src_port,
            enc.dst_port,
            0,  # seq
            0,  # ack
            5 << 4,  # data offset 5 words
            0x02,  # SYN
            8192,
            0,  # checksum placeholder
            0,  # urgent
        )
        segment = header + enc.payload
        csum = _pseudo_header_checksum(enc, segment, proto=6)
        return segment[:16] + struct.pack(">H", csum) + segment[18:]
    if enc.transport == "udp":
        length = 8 + len(enc.payload)
        header = struct.pack(">HHHH", enc.src_port, enc.dst_port, length, 0)
        segment = header + enc.payload
        csum = _pseudo_header_checksum(enc, segment, proto=17)
        if csum == 0:
            csum = 0xFFFF  # RFC 768: transmitted zero means "no checksum"
        return segment[:6] + struct.pack(">H", csum) + segment[8:]
    raise WireError(f"unknown transport {enc.transport!r}")


def _pseudo_header_checksum(enc: InnerEncapsulation, segment: bytes, proto: int) -> int:
    pseudo = (
        _pack_addr(enc.src_addr)
        + _pack_addr(enc.dst_addr)
        + struct.pack(">BBH", 0, proto, len(segment))
    )
    return (~_ones_complement_sum(pseudo + segment)) & 0xFFFF


def build_inner_encapsulation(enc: InnerEncapsulation) -> bytes:
    """Serialize the inner IPv4 packet with correct checksum and total length."""
    segment = _transport_segment(enc)
    total_length = 20 + len(segment)
    if total_length > 0xFFFF:
        raise WireError(f"inner packet too large: {total_length} bytes")
    proto = 6 if enc.transport == "tcp" else 17
    header = struct.pack(
        ">BBHHHBBH4s4s",
        0x45,  # version 4, IHL 5
        0,
        total_length,
        0,  # identification
        0,  # flags/fragment offset
        64,
        proto,
        0,  # checksum placeholder
        _pack_addr(enc.src_addr),
        _pack_addr(enc.dst_addr),
    )
    csum = ipv4_checksum(header)
    header = header[:10] + struct.pack(">H", csum) + header[12:]
    return header + segment


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return state, z ^ (z >> 31)


def gen_fuzz_payload(seed: int, length: int) -> bytes:
    """Deterministic pseudo-random bytes from a splitmix64 stream.

    Identical (seed, length) yields identical bytes on every platform;
    the generator is fixed so fuzz corpora stay reproducible.
    """
    if length < 0:
        raise WireError(f"negative length: {length}")
    out = bytearray()
    state = seed & 0xFFFFFFFFFFFFFFFF
    while len(out) < length:
        state, word = _splitmix64(state)
        out += word.to_bytes(8, "little")
    return bytes(out[:length])


def null_body(n: int) -> bytes:
    """``n`` zero bytes, as sent alongside each flooding request."""
    if n < 0:
        raise WireError(f"negative length: {n}")
    return b"\x00" * n
