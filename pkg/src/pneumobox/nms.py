"""Greedy non-maximum suppression and mAP sweeps over NMS thresholds.

Suppression is class-agnostic (the pipeline has a single positive class) and
uses a strictly-greater comparator, so a threshold of 1.0 keeps every box.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .geometry import iou
from .metric import ApConfig, mean_average_precision

__all__ = ["nms", "SweepCell", "SweepResult", "sweep", "threshold_range"]


def threshold_range(low: float, high: float, step: float) -> tuple[float, ...]:
    """Inclusive threshold ladder low, low+step, ... rounded to 10 decimals."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step!r}")
    values = []
    i = 0
    while True:
        t = round(low + i * step, 10)
        if t > high + 1e-9:
            break
        values.append(t)
        i += 1
    return tuple(values)


def nms(detections, iou_threshold: float) -> list:
    """Greedy NMS: keep the most confident box, drop overlapping ones, repeat.

    A detection is suppressed when its IoU with an already kept detection
    exceeds iou_threshold. Equal confidences are visited in input order.
    Returns the survivors sorted by descending confidence.
    """
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must lie in (0, 1], got {iou_threshold!r}")
    detections = list(detections)
    order = sorted(range(len(detections)), key=lambda i: -detections[i].confidence)
    suppressed = [False] * len(detections)
    kept = []
    for pos, i in enumerate(order):
        if suppressed[i]:
            continue
        kept.append(detections[i])
        box = detections[i].box
        for j in order[pos + 1:]:
            if not suppressed[j] and iou(box, detections[j].box) > iou_threshold:
                suppressed[j] = True
    return kept


@dataclass(frozen=True)
class SweepCell:
    run_label: str
    nms_threshold: float
    mean_ap: float


@dataclass(frozen=True)
class SweepResult:
    """Full (run, threshold) -> mAP grid plus its argmax cell."""

    cells: tuple[SweepCell, ...]
    best: SweepCell

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))


def _evaluate_cell(label, records, threshold, cfg):
    suppressed = [replace(r, predictions=tuple(nms(r.predictions, threshold))) for r in records]
    return SweepCell(label, threshold, mean_average_precision(suppressed, cfg))


def sweep(runs, thresholds, cfg: ApConfig = ApConfig(), max_workers: int = 1) -> SweepResult:
    """Apply NMS at every threshold to every run and score each combination.

    Args:
        runs: sequence of (label, records) pairs; records carry raw
            (pre-suppression) predictions.
        thresholds: NMS thresholds to scan, each in (0, 1].
        max_workers: evaluate grid cells in a thread pool when > 1; the grid
            is assembled in run-major order either way, so results are
            deterministic.

    The best cell is the highest mAP; ties resolve to the earliest cell in
    grid order.
    """
    runs = [(label, tuple(records)) for label, records in runs]
    thresholds = tuple(thresholds)
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    tasks = [(label, records, t) for label, records in runs for t in thresholds]
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            cells = list(pool.map(lambda a: _evaluate_cell(*a, cfg), tasks))
    else:
        cells = [_evaluate_cell(label, records, t, cfg) for label, records, t in tasks]
    best = max(cells, key=lambda c: c.mean_ap)
    return SweepResult(tuple(cells), best)
