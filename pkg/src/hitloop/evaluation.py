"""Detection scoring: IoU, greedy matching, PR curves, per-class AP, mAP50.

Everything operates on normalized coordinates; a pixel-space IoU exists
for callers that already have pixel boxes. AP uses all-point
interpolation over the PR staircase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .annotations import ClassMap, Detection, NormalizedBox, PixelBox


class EvaluationError(ValueError):
    pass


class MixedCoordinateKinds(EvaluationError):
    pass


class UnknownSceneId(EvaluationError):
    pass


@dataclass(frozen=True)
class GroundTruthScene:
    sample_id: str
    boxes: tuple[NormalizedBox, ...]


@dataclass(frozen=True)
class DetectionScene:
    sample_id: str
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class PrCurve:
    """Cumulative (recall, precision) points in descending-confidence order."""

    points: tuple[tuple[float, float], ...]
    total_gt: int


@dataclass(frozen=True)
class ApResult:
    per_class: dict[str, float]
    mean: float


def _corners(box) -> tuple[float, float, float, float]:
    if isinstance(box, NormalizedBox):
        return box.corners()
    return (box.x_min, box.y_min, box.x_max, box.y_max)


def iou(a, b) -> float:
    """Intersection-over-union of two boxes of the same coordinate kind."""
    if isinstance(a, NormalizedBox) != isinstance(b, NormalizedBox):
        raise MixedCoordinateKinds("cannot mix normalized and pixel boxes")
    if not isinstance(a, (NormalizedBox, PixelBox)) or not isinstance(b, (NormalizedBox, PixelBox)):
        raise MixedCoordinateKinds(f"unsupported box types {type(a)} / {type(b)}")
    return float(_kernels.iou_matrix([_corners(a)], [_corners(b)])[0, 0])


def match_greedy(
    dets: Sequence[Detection],
    gts: Sequence[NormalizedBox],
    class_id: int,
    threshold: float = 0.5,
) -> list[tuple[float, bool]]:
    """Flag each detection of one class as TP or FP against the ground truth.

    Detections are taken in descending confidence (ties keep input order);
    each claims the highest-IoU still-unmatched ground truth of the class,
    a TP iff that IoU reaches the threshold. Returns (confidence, is_tp)
    pairs in the order the detections were matched.
    """
    if not 0 < threshold <= 1:
        raise EvaluationError(f"threshold must be in (0, 1], got {threshold}")
    cls_dets = [d for d in dets if d.box.class_id == class_id]
    cls_dets.sort(key=lambda d: -d.confidence)
    cls_gts = [g for g in gts if g.class_id == class_id]
    if not cls_dets:
        return []
    if not cls_gts:
        return [(d.confidence, False) for d in cls_dets]
    ious = _kernels.iou_matrix(
        [_corners(d.box) for d in cls_dets], [_corners(g) for g in cls_gts]
    )
    taken = [False] * len(cls_gts)
    flags = []
    for i, det in enumerate(cls_dets):
        best_j, best_iou = -1, 0.0
        for j in range(len(cls_gts)):
            if not taken[j] and ious[i, j] > best_iou:
                best_j, best_iou = j, ious[i, j]
        if best_j >= 0 and best_iou >= threshold:
            taken[best_j] = True
            flags.append((det.confidence, True))
        else:
            flags.append((det.confidence, False))
    return flags


def pr_curve(matches: Sequence[tuple[float, bool]], total_gt: int) -> PrCurve:
    """Cumulative precision/recall over matches sorted by confidence."""
    if total_gt < 0:
        raise EvaluationError(f"total_gt must be >= 0, got {total_gt}")
    ordered = sorted(matches, key=lambda m: -m[0])
    points = []
    tp = fp = 0
    for _, is_tp in ordered:
        tp, fp = tp + is_tp, fp + (not is_tp)
        recall = tp / total_gt if total_gt else 0.0
        points.append((recall, tp / (tp + fp)))
    return PrCurve(tuple(points), total_gt)


def average_precision(matches: Sequence[tuple[float, bool]], total_gt: int) -> float:
    """All-point interpolated AP; 0 when there is nothing to score."""
    curve = pr_curve(matches, total_gt)
    if total_gt == 0 or not curve.points:
        return 0.0
    rec = np.array([r for r, _ in curve.points])
    prec = np.array([p for _, p in curve.points])
    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    mpre = np.flip(np.maximum.accumulate(np.flip(mpre)))
    changed = np.where(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def map50(
    pred_scenes: Sequence[DetectionScene],
    gt_scenes: Sequence[GroundTruthScene],
    class_map: ClassMap,
    threshold: float = 0.5,
) -> ApResult:
    """Per-class AP pooled across scenes, mean over classes with ground truth.

    Matching is per scene; (confidence, flag) pairs are pooled per class
    before PR integration. Classes absent from the ground truth are left
    out of the mean instead of scored zero.
    """
    gt_by_id = {s.sample_id: s for s in gt_scenes}
    preds_by_id: dict[str, tuple[Detection, ...]] = {}
    for scene in pred_scenes:
        if scene.sample_id not in gt_by_id:
            raise UnknownSceneId(f"predictions for unknown scene {scene.sample_id!r}")
        preds_by_id[scene.sample_id] = scene.detections
    per_class: dict[str, float] = {}
    for class_id, name in enumerate(class_map.names):
        total_gt = sum(1 for s in gt_scenes for b in s.boxes if b.class_id == class_id)
        if total_gt == 0:
            continue
        pooled: list[tuple[float, bool]] = []
        for scene in gt_scenes:
            dets = preds_by_id.get(scene.sample_id, ())
            pooled.extend(match_greedy(dets, scene.boxes, class_id, threshold))
        per_class[name] = average_precision(pooled, total_gt)
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return ApResult(per_class, mean)
