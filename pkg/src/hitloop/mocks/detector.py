"""Mock detector plugin: frame lines in on stdin, prediction lines out.

Boxes are pseudo-random but a pure function of (seed, frame_id), so replays
are reproducible regardless of arrival timing. The weights file is read only
to prove the contract (a real wrapper would load it); its content does not
affect the output.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

from .. import protocol


def predictions_for(frame_id: str, seed: int, classes: list[str]) -> list[dict]:
    rng = random.Random(f"{seed}:{frame_id}")
    boxes = []
    for _ in range(rng.randint(0, 3)):
        class_id = rng.randrange(len(classes))
        w = round(rng.uniform(0.05, 0.30), 6)
        h = round(rng.uniform(0.05, 0.30), 6)
        cx = round(rng.uniform(w / 2, 1 - w / 2), 6)
        cy = round(rng.uniform(h / 2, 1 - h / 2), 6)
        boxes.append(
            {
                "class_id": class_id,
                "class_name": classes[class_id],
                "cx": cx,
                "cy": cy,
                "w": w,
                "h": h,
                "confidence": round(rng.uniform(0.30, 0.99), 6),
            }
        )
    return boxes


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--weights", default="")
    parser.add_argument("--version", default="")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--classes", default="door,handle")
    args = parser.parse_args(argv)
    classes = [c for c in args.classes.split(",") if c]
    if args.weights:
        Path(args.weights).read_bytes()  # contract check: weights must exist
    seq = protocol.Sequencer()
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            message = protocol.parse_line(line)
        except protocol.ProtocolError as exc:
            sys.stderr.write(f"mock detector: skipping bad line: {exc}\n")
            continue
        if message["type"] != "frame":
            continue
        reply = protocol.make(
            "predictions",
            seq.take(),
            message["ts"],  # echo the frame's ts; keeps replays byte-stable
            frame_id=message["frame_id"],
            model_version=args.version,
            boxes=predictions_for(message["frame_id"], args.seed, classes),
        )
        sys.stdout.write(protocol.encode(reply))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
