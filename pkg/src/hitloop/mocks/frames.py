"""Deterministic scene fixture generator for simulation and tests.

Writes an import-style directory: ``classes.txt``, ``images/frame-NNNN.png``,
``labels/frame-NNNN.txt``. Each scene is a flat-colored background with one
or two large "door" rectangles and small "handle" rectangles painted on it;
labels are the exact painted extents. Everything derives from the seed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from ..annotations import PixelBox, pixel_to_normalized, serialize_label_file
from ..pngio import encode_rgb_png

DOOR, HANDLE = 0, 1


def _paint(img: np.ndarray, box: PixelBox, color: np.ndarray) -> None:
    img[int(box.y_min):int(box.y_max), int(box.x_min):int(box.x_max)] = color


def make_scene(rng: np.random.Generator, width: int, height: int):
    """One (png_bytes, normalized_boxes) pair."""
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:] = rng.integers(60, 200, size=3, dtype=np.uint8)
    pixel_boxes = []
    for _ in range(int(rng.integers(1, 3))):
        dw = int(rng.integers(width // 6, width // 3))
        dh = int(rng.integers(height // 3, height * 2 // 3))
        x0 = int(rng.integers(0, width - dw))
        y0 = int(rng.integers(0, height - dh))
        door = PixelBox(DOOR, x0, y0, x0 + dw, y0 + dh)
        _paint(img, door, rng.integers(0, 255, size=3, dtype=np.uint8))
        pixel_boxes.append(door)
        if rng.random() < 0.8:
            hw = max(6, dw // 8)
            hh = max(6, dh // 10)
            hx = x0 + int(rng.integers(2, max(3, dw - hw - 2)))
            hy = y0 + int(rng.integers(2, max(3, dh - hh - 2)))
            handle = PixelBox(HANDLE, hx, hy, hx + hw, hy + hh)
            _paint(img, handle, rng.integers(0, 255, size=3, dtype=np.uint8))
            pixel_boxes.append(handle)
    boxes = [pixel_to_normalized(b, width, height) for b in pixel_boxes]
    return encode_rgb_png(img), boxes


def generate(out_dir, count: int, seed: int, width: int = 640, height: int = 480) -> list[str]:
    """Write `count` scenes; returns the frame basenames in order."""
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    (out / "classes.txt").write_text("door\nhandle\n", encoding="utf-8")
    rng = np.random.Generator(np.random.PCG64(seed))
    names = []
    for i in range(1, count + 1):
        name = f"frame-{i:04d}"
        png, boxes = make_scene(rng, width, height)
        (out / "images" / f"{name}.png").write_bytes(png)
        (out / "labels" / f"{name}.txt").write_text(
            serialize_label_file(boxes), encoding="utf-8"
        )
        names.append(name)
    return names


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--count", type=int, default=30)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--width", type=int, default=640)
    parser.add_argument("--height", type=int, default=480)
    args = parser.parse_args(argv)
    names = generate(args.out, args.count, args.seed, args.width, args.height)
    sys.stdout.write(f"wrote {len(names)} frames under {args.out}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
