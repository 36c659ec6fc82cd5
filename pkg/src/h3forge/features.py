"""The 46-feature traffic schema and its preprocessing pipeline.

Thirty-five numeric features are Min-Max scaled (empty cells become 0,
results rounded half-up to three decimals); eleven categorical features
are one-hot encoded (empty cells become -1 across the feature's
indicator columns). Scalers and encoders are fitted on training rows
only. Multi-valued raw fields are folded by summation before scaling.
Values outside the training range are NOT clamped at apply time, so
test-set cells can fall outside [0, 1] when an unseen extreme shows up;
hiding that drift would be worse than reporting it.

Expanded OHE columns are named ``<feature>=<category>``, which is this
toolkit's own convention: its CSVs are schema-compatible with themselves,
not with externally produced ones.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Optional, Sequence

MINMAX_FEATURES: tuple[str, ...] = (
    "frame.len",
    "ip.len",
    "tcp.len",
    "tcp.hdr_len",
    "tcp.window_size_value",
    "tcp.option_len",
    "udp.length",
    "tls.record.length",
    "tls.reassembled.length",
    "tls.handshake.length",
    "tls.handshake.certificates_length",
    "tls.handshake.certificate_length",
    "tls.handshake.session_id_length",
    "tls.handshake.cipher_suites_length",
    "tls.handshake.extensions_length",
    "tls.handshake.client_cert_vrfy.sig_len",
    "quic.packet_length",
    "quic.packet_number_length",
    "quic.length",
    "quic.nci.connection_id.length",
    "quic.crypto.length",
    "quic.stream.len",
    "quic.token_length",
    "quic.padding_length",
    "http2.length",
    "http2.header.length",
    "http2.header.name.length",
    "http2.header.value.length",
    "http2.headers.content_length",
    "http3.frame_length",
    "http3.settings.qpack.max_table_capacity",
    "http3.settings.max_field_section_size",
    "dns.count.queries",
    "dns.count.answers",
    "http.content_length",
)

OHE_FEATURES: tuple[str, ...] = (
    "tcp.flags.ack",
    "tcp.flags.push",
    "tcp.flags.reset",
    "tcp.flags.syn",
    "tcp.flags.fin",
    "quic.long.packet_type",
    "quic.fixed_bit",
    "quic.spin_bit",
    "quic.stream.fin",
    "dns.flags.response",
    "http.content_type",
)

LABEL_COLUMN = "Label"

ALL_FEATURES: tuple[str, ...] = MINMAX_FEATURES + OHE_FEATURES

CLASS_LABELS: tuple[str, ...] = (
    "Normal",
    "DDoS-flooding",
    "DDoS-loris",
    "Transport-layer",
    "HTTP/2 attacks",
)

# attack kind value -> detection class
_CLASS_MAP = {
    "Normal": "Normal",
    "http3-flood": "DDoS-flooding",
    "http3-tables-streams": "DDoS-flooding",
    "quic-flood": "DDoS-flooding",
    "http3-loris": "DDoS-loris",
    "quic-loris": "DDoS-loris",
    "fuzzing": "Transport-layer",
    "quic-enc": "Transport-layer",
    "http-smuggle": "HTTP/2 attacks",
    "http2-concurrent": "HTTP/2 attacks",
    "http2-pause": "HTTP/2 attacks",
}


class SchemaError(ValueError):
    """Schema mismatch between a file and the canonical feature set."""


class MappingError(ValueError):
    """Label has no detection class (not a dataset member)."""


def map_class(label: str) -> str:
    """Map Normal or a dataset attack kind to its five-class label."""
    value = getattr(label, "value", label)
    try:
        return _CLASS_MAP[value]
    except KeyError:
        raise MappingError(f"{value!r} is not a dataset member") from None


def round_half_up(value: float, digits: int) -> float:
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class FeatureSchema:
    """The canonical feature registry: names plus preprocessing kinds."""

    minmax: tuple[str, ...] = MINMAX_FEATURES
    ohe: tuple[str, ...] = OHE_FEATURES

    def names(self) -> tuple[str, ...]:
        return self.minmax + self.ohe

    def save(self, path) -> None:
        registry = {
            "minmax": list(self.minmax),
            "ohe": list(self.ohe),
            "label": LABEL_COLUMN,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(registry, fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "FeatureSchema":
        with open(path, encoding="utf-8") as fh:
            registry = json.load(fh)
        return cls(minmax=tuple(registry["minmax"]), ohe=tuple(registry["ohe"]))


DEFAULT_SCHEMA = FeatureSchema()

# value type in a RawRow: absent (missing key), number, symbol string,
# or list of numbers for multi-valued fields
RawRow = dict


def fold_multivalue(values: Sequence[float]) -> Optional[float]:
    """Multi-valued cells collapse to their arithmetic sum; empty means absent."""
    if not values:
        return None
    return sum(values)


def extract_row(obj, schema: FeatureSchema = DEFAULT_SCHEMA) -> RawRow:
    """Pull schema fields out of an engine event or a packet record.

    Events carry a ``fields`` mapping in their detail; packet records
    carry ``summary_fields`` plus a frame length. Multi-valued entries
    are kept as lists here and folded during preprocessing.
    """
    if hasattr(obj, "detail"):
        source = dict(obj.detail.get("fields", {}))
        source.setdefault("frame.len", obj.bytes if obj.bytes > 0 else 60)
    elif hasattr(obj, "summary_fields"):
        source = dict(obj.summary_fields or {})
        source.setdefault("frame.len", obj.length)
        if getattr(obj, "l4", None) == "udp":
            source.setdefault("udp.length", max(obj.length - 34, 8))
        elif getattr(obj, "l4", None) == "tcp":
            source.setdefault("tcp.len", max(obj.length - 54, 0))
    else:
        raise TypeError(f"cannot extract features from {type(obj).__name__}")
    known = set(schema.names())
    row = {k: v for k, v in source.items() if k in known}
    for name in schema.ohe:
        if isinstance(row.get(name), (list, tuple)):
            raise ValueError(f"categorical feature {name} cannot be multi-valued")
    return row


def _fold_raw(row: RawRow, name: str) -> Optional[float]:
    value = row.get(name)
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return fold_multivalue(value)
    return value


@dataclass
class MinMaxScaler:
    """Per-feature training min/max; absent cells are zero-filled before
    both fit and apply, and a degenerate column maps to 0."""

    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def fit(self, rows: Iterable[RawRow], names: Sequence[str]) -> "MinMaxScaler":
        lo: dict[str, float] = {}
        hi: dict[str, float] = {}
        rows = list(rows)
        for name in names:
            values = [(_fold_raw(row, name) or 0.0) for row in rows]
            if not values:
                values = [0.0]
            lo[name] = min(values)
            hi[name] = max(values)
        self.bounds = {name: (lo[name], hi[name]) for name in names}
        return self

    def apply_one(self, name: str, value: Optional[float]) -> float:
        x = 0.0 if value is None else float(value)
        lo, hi = self.bounds[name]
        if hi == lo:
            return 0.0
        return round_half_up((x - lo) / (hi - lo), 3)


@dataclass
class OneHotEncoder:
    """Observed categories per feature, in first-seen-then-sorted order.

    Absent cells expand to -1 in every indicator; categories unseen at
    fit time expand to all zeros.
    """

    categories: dict[str, list] = field(default_factory=dict)

    def fit(self, rows: Iterable[RawRow], names: Sequence[str]) -> "OneHotEncoder":
        observed: dict[str, set] = {name: set() for name in names}
        for row in rows:
            for name in names:
                value = row.get(name)
                if value is not None:
                    observed[name].add(value)
        self.categories = {
            name: sorted(values, key=lambda v: (str(type(v).__name__), str(v)))
            for name, values in observed.items()
        }
        return self

    def columns(self, name: str) -> list[str]:
        return [f"{name}={cat}" for cat in self.categories[name]]

    def apply_one(self, name: str, value) -> list[int]:
        cats = self.categories[name]
        if value is None:
            return [-1] * len(cats)
        return [1 if value == cat else 0 for cat in cats]


@dataclass
class ProcessedRow:
    values: dict[str, float]
    label: str


@dataclass
class FeaturePipeline:
    """Fitted preprocessing: scaling + encoding + the expanded column order."""

    schema: FeatureSchema
    scaler: MinMaxScaler
    encoder: OneHotEncoder

    @classmethod
    def fit(cls, rows: Iterable[RawRow], schema: FeatureSchema = DEFAULT_SCHEMA) -> "FeaturePipeline":
        rows = list(rows)
        scaler = MinMaxScaler().fit(rows, schema.minmax)
        encoder = OneHotEncoder().fit(rows, schema.ohe)
        return cls(schema=schema, scaler=scaler, encoder=encoder)

    @property
    def columns(self) -> list[str]:
        cols = list(self.schema.minmax)
        for name in self.schema.ohe:
            cols.extend(self.encoder.columns(name))
        return cols

    def transform_row(self, row: RawRow, label: str) -> ProcessedRow:
        values: dict[str, float] = {}
        for name in self.schema.minmax:
            values[name] = self.scaler.apply_one(name, _fold_raw(row, name))
        for name in self.schema.ohe:
            for col, indicator in zip(self.encoder.columns(name), self.encoder.apply_one(name, row.get(name))):
                values[col] = indicator
        return ProcessedRow(values=values, label=label)

    def transform(self, rows: Iterable[RawRow], labels: Iterable[str]) -> list[ProcessedRow]:
        return [self.transform_row(row, label) for row, label in zip(rows, labels)]

    def to_dict(self) -> dict:
        return {
            "schema": {"minmax": list(self.schema.minmax), "ohe": list(self.schema.ohe)},
            "scaler": {name: list(b) for name, b in self.scaler.bounds.items()},
            "encoder": self.encoder.categories,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeaturePipeline":
        schema = FeatureSchema(minmax=tuple(d["schema"]["minmax"]), ohe=tuple(d["schema"]["ohe"]))
        scaler = MinMaxScaler(bounds={k: (v[0], v[1]) for k, v in d["scaler"].items()})
        encoder = OneHotEncoder(categories=d["encoder"])
        return cls(schema=schema, scaler=scaler, encoder=encoder)


def stratified_split(
    rows: Sequence,
    fractions: Sequence[float],
    seed: int = 0,
    *,
    labels: Optional[Sequence[str]] = None,
) -> list[list]:
    """Partition ``rows`` into len(fractions) subsets preserving per-class
    proportions to within one sample per class per subset.

    ``labels`` defaults to each row's ``label`` attribute. Deterministic
    under ``seed``; allocation uses largest remainders per class.
    """
    if not fractions or any(f <= 0 for f in fractions):
        raise ValueError(f"fractions must be positive: {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1: {fractions}")
    if labels is None:
        labels = [row.label for row in rows]
    by_class: dict[str, list[int]] = {}
    for idx, label in enumerate(labels):
        by_class.setdefault(label, []).append(idx)

    rng = random.Random(f"split:{seed}")
    subsets: list[list] = [[] for _ in fractions]
    for label in sorted(by_class):
        indices = by_class[label]
        rng.shuffle(indices)
        n = len(indices)
        quotas = [int(n * f) for f in fractions]
        remainders = [n * f - q for f, q in zip(fractions, quotas)]
        for _ in range(n - sum(quotas)):
            best = max(range(len(fractions)), key=lambda j: (remainders[j], -j))
            quotas[best] += 1
            remainders[best] = -1.0
        cursor = 0
        for j, quota in enumerate(quotas):
            subsets[j].extend(indices[cursor : cursor + quota])
            cursor += quota
    return [[rows[i] for i in sorted(chunk)] for chunk in subsets]


def write_csv(path, rows: Sequence[ProcessedRow], pipeline: FeaturePipeline) -> None:
    """Processed rows to CSV: exact schema names, expanded OHE columns,
    Label last. Min-Max cells carry three decimals; indicators are ints."""
    columns = pipeline.columns
    minmax = set(pipeline.schema.minmax)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns + [LABEL_COLUMN])
        for row in rows:
            out = []
            for col in columns:
                value = row.values[col]
                out.append(f"{value:.3f}" if col in minmax else str(int(value)))
            out.append(row.label)
            writer.writerow(out)


def read_csv(path, pipeline: Optional[FeaturePipeline] = None) -> tuple[list[str], list[ProcessedRow]]:
    """Inverse of :func:`write_csv`; returns (columns, rows).

    With a pipeline, the header is checked against its expanded columns.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != LABEL_COLUMN:
            raise SchemaError(f"{path}: Label column must come last")
        columns = header[:-1]
        if pipeline is not None and columns != pipeline.columns:
            raise SchemaError(f"{path}: header does not match the fitted schema")
        rows = []
        for line in reader:
            if len(line) != len(header):
                raise SchemaError(f"{path}: row width {len(line)} != header width {len(header)}")
            values = {col: float(cell) for col, cell in zip(columns, line[:-1])}
            rows.append(ProcessedRow(values=values, label=line[-1]))
    return columns, rows
