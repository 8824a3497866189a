"""Diversity scoring for collected sample sets.

A sample set is scored by the harmonic mean of two entropies: binned
feature entropy over embedding vectors and label entropy over its box
classes. Scores are min-max normalized across the sets being compared.
Embeddings come precomputed from a pluggable provider; nothing here runs
a feature extractor.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels

DEFAULT_BIN_COUNT = 10


class DiversityError(ValueError):
    pass


class InvalidBinCount(DiversityError):
    pass


class NonFiniteFeature(DiversityError):
    pass


class EmptyLabelSet(DiversityError):
    pass


class NegativeEntropy(DiversityError):
    pass


class MalformedEmbedding(DiversityError):
    """Embedding file does not follow the ``dim`` header / row format."""


class DimensionMismatch(MalformedEmbedding):
    pass


class DuplicateId(MalformedEmbedding):
    pass


@dataclass(frozen=True)
class BinHistogram:
    """Equal-width histogram of one feature dimension."""

    k: int
    edges: tuple[float, ...]
    counts: tuple[int, ...]


@dataclass(frozen=True)
class HadesScore:
    """Entropy components and harmonic score for one sample set, in nats."""

    feature_entropy: float
    label_entropy: float
    harmonic: float
    normalized: float | None = None


def as_feature_matrix(features) -> np.ndarray:
    """Coerce vectors to a validated (N, d) float64 matrix."""
    mat = np.asarray(features, dtype=np.float64)
    if mat.ndim == 1:
        mat = mat.reshape(-1, 1)
    if mat.ndim != 2 or mat.shape[0] < 1 or mat.shape[1] < 1:
        raise DiversityError(f"feature set must be a nonempty (N, d) matrix, got shape {mat.shape}")
    if not np.isfinite(mat).all():
        raise NonFiniteFeature("feature values must be finite")
    return mat


def bin_features(features, k: int) -> list[BinHistogram]:
    """Histogram each dimension into k equal-width bins over its range."""
    if k < 1:
        raise InvalidBinCount(f"bin count must be >= 1, got {k}")
    mat = as_feature_matrix(features)
    hists = []
    for j in range(mat.shape[1]):
        edges, counts = _kernels.bin_column(np.ascontiguousarray(mat[:, j]), k)
        hists.append(BinHistogram(len(counts), tuple(edges.tolist()), tuple(int(c) for c in counts)))
    return hists


def feature_entropy(features, k: int = DEFAULT_BIN_COUNT) -> float:
    """Mean over dimensions of the per-dimension binned entropy, in nats."""
    if k < 1:
        raise InvalidBinCount(f"bin count must be >= 1, got {k}")
    mat = as_feature_matrix(features)
    return float(_kernels.perdim_entropy(mat, k).mean())


def label_entropy(labels: Sequence[str]) -> float:
    """Entropy of the label distribution, in nats."""
    if len(labels) == 0:
        raise EmptyLabelSet("label entropy is undefined for an empty label set")
    m = len(labels)
    h = 0.0
    for count in Counter(labels).values():
        p = count / m
        h -= p * math.log(p)
    return max(h, 0.0)


def harmonic_diversity(f: float, l: float) -> float:
    """Harmonic mean of feature and label entropy; zero if either is zero."""
    if f < 0 or l < 0:
        raise NegativeEntropy(f"entropies must be nonnegative, got F={f} L={l}")
    if f == 0 or l == 0:
        return 0.0
    return 2 * f * l / (f + l)


def normalize_scores(raw: Sequence[float]) -> list[float]:
    """Min-max normalize: min -> 0, max -> 1; all zeros when the list is flat."""
    if len(raw) == 0:
        raise DiversityError("cannot normalize an empty score list")
    lo, hi = min(raw), max(raw)
    if hi == lo:
        return [0.0] * len(raw)
    return [(v - lo) / (hi - lo) for v in raw]


def score_sample_sets(
    sets: Sequence[tuple[object, Sequence[str]]],
    k: int = DEFAULT_BIN_COUNT,
) -> list[HadesScore]:
    """Score each (features, labels) set and normalize across the batch.

    An empty label set scores zero label entropy (and hence zero harmonic
    score) instead of raising: a batch with no boxes has no label diversity.
    """
    raw = []
    for features, labels in sets:
        f = feature_entropy(features, k)
        l = label_entropy(labels) if len(labels) > 0 else 0.0
        raw.append((f, l, harmonic_diversity(f, l)))
    norm = normalize_scores([h for _, _, h in raw])
    return [HadesScore(f, l, h, n) for (f, l, h), n in zip(raw, norm)]


def parse_embeddings(text: str) -> dict[str, np.ndarray]:
    """Parse an embedding file: ``dim <d>`` header then ``<id> v1 .. vd`` rows."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise MalformedEmbedding("missing 'dim <d>' header")
    header = lines[0].split()
    if len(header) != 2 or header[0] != "dim":
        raise MalformedEmbedding(f"bad header {lines[0]!r}, expected 'dim <d>'")
    try:
        dim = int(header[1])
    except ValueError:
        raise MalformedEmbedding(f"bad dimension {header[1]!r}") from None
    if dim < 1:
        raise MalformedEmbedding(f"dimension must be >= 1, got {dim}")
    out: dict[str, np.ndarray] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        sample_id = fields[0]
        if len(fields) != dim + 1:
            raise DimensionMismatch(
                f"line {lineno}: {sample_id} has {len(fields) - 1} values, expected {dim}"
            )
        if sample_id in out:
            raise DuplicateId(f"line {lineno}: duplicate sample id {sample_id}")
        try:
            vec = np.array([float(f) for f in fields[1:]], dtype=np.float64)
        except ValueError:
            raise MalformedEmbedding(f"line {lineno}: non-numeric value") from None
        if not np.isfinite(vec).all():
            raise NonFiniteFeature(f"line {lineno}: non-finite value")
        out[sample_id] = vec
    return out


def load_embeddings(path) -> dict[str, np.ndarray]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_embeddings(fh.read())


def format_embeddings(vectors: dict[str, np.ndarray]) -> str:
    """Inverse of parse_embeddings; vectors must share one dimension."""
    if not vectors:
        raise MalformedEmbedding("cannot format an empty embedding map")
    dims = {np.asarray(v).size for v in vectors.values()}
    if len(dims) != 1:
        raise DimensionMismatch(f"mixed dimensions {sorted(dims)}")
    lines = [f"dim {dims.pop()}\n"]
    for sample_id, vec in vectors.items():
        values = " ".join(f"{float(x):.8g}" for x in np.asarray(vec).ravel())
        lines.append(f"{sample_id} {values}\n")
    return "".join(lines)
