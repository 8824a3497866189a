"""Mock trainer plugin: one-shot fine-tune command.

Invoked as ``<cmd> --dataset <root> --base-weights <path> --out-weights <path>``.
Exit 0 plus an existing output file signals success. The output bytes are a
pure function of the base weights and the dataset manifest, so repeated runs
are byte-identical. ``--fail`` forces a nonzero exit (failure-path tests),
``--fail-once <marker>`` fails only while the marker file exists and consumes
it (fail-then-retry tests), ``--log`` appends one line per invocation
(invocation-count assertions), ``--sleep`` holds the training window open
(single-flight tests).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", required=True)
    parser.add_argument("--base-weights", default="")
    parser.add_argument("--out-weights", required=True)
    parser.add_argument("--fail", action="store_true")
    parser.add_argument("--fail-once", default="")
    parser.add_argument("--log", default="")
    parser.add_argument("--sleep", type=float, default=0.0)
    args = parser.parse_args(argv)
    if args.sleep > 0:
        time.sleep(args.sleep)
    if args.log:
        with open(args.log, "a", encoding="utf-8") as fh:
            fh.write(f"trained dataset={args.dataset} out={args.out_weights}\n")
    if args.fail:
        sys.stderr.write("mock trainer: forced failure\n")
        return 3
    if args.fail_once:
        marker = Path(args.fail_once)
        if marker.exists():
            marker.unlink()
            sys.stderr.write("mock trainer: failing once\n")
            return 3
    manifest = json.loads((Path(args.dataset) / "manifest.json").read_text("utf-8"))
    trained = sum(1 for s in manifest["samples"] if s["round_assigned"] != "pending")
    if args.base_weights and Path(args.base_weights).exists():
        base = Path(args.base_weights).read_bytes()
    else:
        base = b"hitloop-mock-weights\n"
    out = Path(args.out_weights)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(base + f"finetuned samples={trained}\n".encode("utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
