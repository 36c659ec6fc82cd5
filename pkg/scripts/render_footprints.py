#!/usr/bin/env python3
"""Render PPS footprint plots for every campaign in a corpus directory.

    python scripts/render_footprints.py --data data/
"""

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from h3forge.campaign import load_manifest
from h3forge.capture import events_to_packets, footprint, label_packets
from h3forge.engine import read_events


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", default="data")
    parser.add_argument("--bucket", type=float, default=1.0)
    args = parser.parse_args(argv)

    for manifest_path in sorted(Path(args.data).glob("*/manifest.json")):
        campaign_dir = manifest_path.parent
        manifest = load_manifest(manifest_path)
        events = read_events(campaign_dir / "events.ndjson")
        labeled = label_packets(events_to_packets(events), manifest)
        series = footprint(labeled, bucket=args.bucket)
        series.write_csv(campaign_dir / "footprint.csv")
        rows = series.rows()
        fig, ax = plt.subplots(figsize=(10, 3.2))
        ax.plot([r[0] for r in rows], [r[1] for r in rows], label="normal", color="tab:blue", lw=0.9)
        ax.plot([r[0] for r in rows], [r[2] for r in rows], label="malicious", color="tab:red", lw=0.9)
        ax.set_title(manifest["attack"])
        ax.set_xlabel("time (s)")
        ax.set_ylabel(f"packets / {series.bucket:g}s")
        ax.legend(loc="upper left")
        fig.tight_layout()
        fig.savefig(campaign_dir / "footprint.png", dpi=120)
        plt.close(fig)
        print(f"{manifest['attack']}: footprint.csv + footprint.png")
    return 0


if __name__ == "__main__":
    sys.exit(main())
