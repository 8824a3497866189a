"""Independent reference implementations used to cross-check the package.

Everything here is written as plain loops from the definitions, on purpose:
no shared helpers with the package, no numpy vectorization tricks. Slow is
fine; these exist to disagree when the package is wrong.
"""

from __future__ import annotations

import math
from collections import Counter


def entropy_from_probs(probs) -> float:
    h = 0.0
    for p in probs:
        if p > 0:
            h -= p * math.log(p)
    return h


def bin_scalar_column(values, k: int):
    """Equal-width histogram over [min, max]; last bin inclusive."""
    lo = min(values)
    hi = max(values)
    if lo == hi:
        return [len(values)]
    width = (hi - lo) / k
    counts = [0] * k
    for v in values:
        idx = int((v - lo) / width)
        if idx >= k:
            idx = k - 1
        counts[idx] += 1
    return counts


def feature_entropy(matrix, k: int) -> float:
    """Mean over dimensions of the binned entropy of each column."""
    rows = [list(map(float, row)) for row in matrix]
    n = len(rows)
    d = len(rows[0])
    total = 0.0
    for j in range(d):
        counts = bin_scalar_column([row[j] for row in rows], k)
        total += entropy_from_probs([c / n for c in counts])
    return total / d


def label_entropy(labels) -> float:
    m = len(labels)
    return entropy_from_probs([c / m for c in Counter(labels).values()])


def harmonic(f: float, l: float) -> float:
    if f == 0 or l == 0:
        return 0.0
    return 2 * f * l / (f + l)


def minmax(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        return [0.0] * len(values)
    return [(v - lo) / (hi - lo) for v in values]


def iou_corners(a, b) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    iw = min(ax1, bx1) - max(ax0, bx0)
    ih = min(ay1, by1) - max(ay0, by0)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    return inter / union


def match_scene(dets, gts, threshold: float):
    """Greedy matching for one class in one scene.

    dets: list of (confidence, corners); gts: list of corners.
    Returns (confidence, is_tp) per detection, descending confidence,
    confidence ties kept in input order.
    """
    order = sorted(range(len(dets)), key=lambda i: -dets[i][0])
    taken = [False] * len(gts)
    out = []
    for i in order:
        conf, corners = dets[i]
        best_iou = -1.0
        best_j = -1
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            value = iou_corners(corners, gt)
            if value > best_iou:
                best_iou = value
                best_j = j
        if best_j >= 0 and best_iou >= threshold:
            taken[best_j] = True
            out.append((conf, True))
        else:
            out.append((conf, False))
    return out


def average_precision(matches, total_gt: int) -> float:
    """PR staircase enumerated explicitly from the definition:
    AP = sum over distinct achieved recalls of (R_i - R_{i-1}) * max
    precision at any recall >= R_i."""
    if total_gt == 0 or not matches:
        return 0.0
    ordered = sorted(range(len(matches)), key=lambda i: -matches[i][0])
    points = []
    tp = fp = 0
    for i in ordered:
        if matches[i][1]:
            tp += 1
        else:
            fp += 1
        points.append((tp / total_gt, tp / (tp + fp)))
    ap = 0.0
    prev_recall = 0.0
    for i, (recall, _) in enumerate(points):
        if recall > prev_recall:
            best = max(prec for rec, prec in points[i:])
            ap += (recall - prev_recall) * best
            prev_recall = recall
    return ap


def map50(scenes, num_classes: int, threshold: float = 0.5):
    """scenes: list of (gt, dets) where gt is list of (class_id, corners)
    and dets is list of (class_id, confidence, corners). Returns
    (per_class dict, mean over classes with ground truth)."""
    per_class = {}
    for cls in range(num_classes):
        total_gt = sum(1 for gt, _ in scenes for c, _ in gt if c == cls)
        if total_gt == 0:
            continue
        pooled = []
        for gt, dets in scenes:
            gt_c = [corners for c, corners in gt if c == cls]
            det_c = [(conf, corners) for c, conf, corners in dets if c == cls]
            pooled.extend(match_scene(det_c, gt_c, threshold))
        per_class[cls] = average_precision(pooled, total_gt)
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return per_class, mean
