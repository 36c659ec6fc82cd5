"""h3forge: attack-traffic generation, labeled dataset synthesis, and
detection baselines for HTTP/3, QUIC, and HTTP/2 endpoints."""

__version__ = "0.1.0"
