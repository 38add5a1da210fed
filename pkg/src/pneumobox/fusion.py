"""Combining detections from several folds/checkpoints before NMS.

Detections pooled across sources are greedily clustered by IoU against each
cluster's founding (highest-confidence) member. Each cluster then fuses to a
single box: the center is the confidence-weighted mean of member centers,
while the sizes shrink to compensate for consensus-labelled evaluation sets
that favour smaller boxes. Two shrink rules are supported:

* percentile: size = P_low(sizes) - (P_high(sizes) - P_low(sizes)) / scale,
  a low order statistic reduced further by the interpercentile spread;
* fixed-rescale: size = rescale_factor * mean(sizes).

Fused sizes are floored so the reduction cannot produce negative boxes.
"""

import math
from dataclasses import dataclass

from .geometry import Box, iou
from .metric import Detection
from .nms import nms

__all__ = ["ShrinkConfig", "Cluster", "cluster", "fuse_cluster", "ensemble"]

SHRINK_MODES = ("percentile", "fixed-rescale")


@dataclass(frozen=True)
class ShrinkConfig:
    low_percentile: float = 20.0
    high_percentile: float = 80.0
    scale: float = 1.6
    mode: str = "percentile"
    rescale_factor: float = 0.875
    min_size: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.low_percentile < self.high_percentile < 100.0:
            raise ValueError(
                f"percentiles must satisfy 0 < low < high < 100, got "
                f"{self.low_percentile!r} and {self.high_percentile!r}"
            )
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale!r}")
        if not 0.0 < self.rescale_factor <= 1.0:
            raise ValueError(f"rescale_factor must lie in (0, 1], got {self.rescale_factor!r}")
        if self.mode not in SHRINK_MODES:
            raise ValueError(f"mode must be one of {SHRINK_MODES}, got {self.mode!r}")
        if not self.min_size > 0:
            raise ValueError(f"min_size must be positive, got {self.min_size!r}")


@dataclass(frozen=True)
class Cluster:
    """Detections grouped across sources, led by their founding member."""

    members: tuple[Detection, ...]
    representative: Detection

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("a cluster needs at least one member")


def cluster(dets_by_source, cluster_iou: float = 0.5) -> list[Cluster]:
    """Greedy confidence-ordered IoU clustering of pooled detections.

    Detections from all sources are visited in descending confidence (ties
    keep pooled order). Each joins the first cluster whose representative it
    overlaps with IoU > cluster_iou, otherwise it founds a new cluster.
    """
    if not 0.0 < cluster_iou < 1.0:
        raise ValueError(f"cluster_iou must lie in (0, 1), got {cluster_iou!r}")
    pooled = [d for source in dets_by_source for d in source]
    order = sorted(range(len(pooled)), key=lambda i: -pooled[i].confidence)
    representatives = []
    member_lists = []
    for i in order:
        det = pooled[i]
        for k, rep in enumerate(representatives):
            if iou(det.box, rep.box) > cluster_iou:
                member_lists[k].append(det)
                break
        else:
            representatives.append(det)
            member_lists.append([det])
    return [Cluster(tuple(m), rep) for m, rep in zip(member_lists, representatives)]


def _pivot_mean(values, weights=None):
    # Summing offsets from the first value keeps the mean bit-exact for
    # singletons and for identical members, which the fusion invariants need.
    anchor = values[0]
    if weights is not None:
        total = math.fsum(weights)
        if total > 0:
            offsets = math.fsum(w * (v - anchor) for v, w in zip(values, weights))
            return anchor + offsets / total
    return anchor + math.fsum(v - anchor for v in values) / len(values)


def _percentile(sorted_values, p):
    """Order-statistic percentile with linear interpolation."""
    n = len(sorted_values)
    if n == 1:
        return sorted_values[0]
    pos = p / 100.0 * (n - 1)
    i = int(pos)
    lo = sorted_values[i]
    return lo + (pos - i) * (sorted_values[i + 1] - lo)


def _fused_size(sizes, cfg: ShrinkConfig):
    if cfg.mode == "fixed-rescale":
        base = _pivot_mean(sizes)
        fused = cfg.rescale_factor * base
    else:
        ordered = sorted(sizes)
        base = _percentile(ordered, cfg.low_percentile)
        high = _percentile(ordered, cfg.high_percentile)
        fused = base - (high - base) / cfg.scale
    # The floor is capped at the pre-shrink base so degenerate-spread
    # clusters (all sizes equal) fuse back to exactly that size.
    return max(fused, min(cfg.min_size, base))


def fuse_cluster(c: Cluster, cfg: ShrinkConfig = ShrinkConfig()) -> Detection:
    """Collapse a cluster to one detection with a shrunk box.

    The fused center is the confidence-weighted mean of member centers (the
    shrink only touches w and h); the fused confidence is the plain mean of
    member confidences.
    """
    members = c.members
    confidences = [m.confidence for m in members]
    mean_x = _pivot_mean([m.box.x for m in members], confidences)
    mean_y = _pivot_mean([m.box.y for m in members], confidences)
    mean_w = _pivot_mean([m.box.w for m in members], confidences)
    mean_h = _pivot_mean([m.box.h for m in members], confidences)
    fused_w = _fused_size([m.box.w for m in members], cfg)
    fused_h = _fused_size([m.box.h for m in members], cfg)
    # x = weighted center minus half the fused width, written so the size
    # correction vanishes exactly when fused_w == mean_w.
    box = Box(
        mean_x + (mean_w - fused_w) / 2,
        mean_y + (mean_h - fused_h) / 2,
        fused_w,
        fused_h,
    )
    confidence = min(1.0, max(0.0, _pivot_mean(confidences)))
    return Detection(box, confidence, members[0].source_id)


def ensemble(
    dets_by_source,
    cluster_iou: float = 0.5,
    shrink: ShrinkConfig = ShrinkConfig(),
    nms_threshold: float = 0.5,
) -> list[Detection]:
    """Full per-image fusion pipeline: cluster, fuse each cluster, then NMS.

    Sources are combined first and suppression runs last, on the fused boxes.
    """
    clusters = cluster(dets_by_source, cluster_iou)
    fused = [fuse_cluster(c, shrink) for c in clusters]
    return nms(fused, nms_threshold)
