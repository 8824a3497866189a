"""Mock embedder plugin: hashes image bytes into fixed-dim feature vectors.

Invoked as ``<cmd> --inputs <list-file> --out <embeddings-file>`` where the
inputs file holds one "sample_id <image-path>" pair per line. Vectors are a
pure function of the image bytes (sha256 digest bytes scaled to [0,1]), so
distinct images spread across bins while reruns stay deterministic.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from pathlib import Path

import numpy as np

from ..diversity import format_embeddings


def embed_bytes(data: bytes, dim: int) -> np.ndarray:
    digest = hashlib.sha256(data).digest()
    while len(digest) < dim:
        digest += hashlib.sha256(digest).digest()
    return np.frombuffer(digest[:dim], dtype=np.uint8).astype(np.float64) / 255.0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--inputs", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--dim", type=int, default=8)
    args = parser.parse_args(argv)
    vectors: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(Path(args.inputs).read_text("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            sample_id, path = line.split(" ", 1)
        except ValueError:
            sys.stderr.write(f"mock embedder: bad input line {lineno}\n")
            return 2
        vectors[sample_id] = embed_bytes(Path(path).read_bytes(), args.dim)
    Path(args.out).write_text(format_embeddings(vectors), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
