"""Per-image average precision over an IoU-threshold ladder, and its mean.

The score of one image is AP = mean over thresholds t of
TP(t) / (TP(t) + FP(t) + FN(t)), where counts come from greedy one-to-one
matching: predictions are visited in descending confidence and each one
claims the unmatched truth box of highest IoU that passes the comparator
against t. The dataset score is the plain mean of per-image APs.

Matching tie-breaks are deterministic: equal confidences keep input order,
equal IoUs prefer the lowest truth index.
"""

import math
from dataclasses import dataclass

from .geometry import Box, iou

__all__ = [
    "Detection",
    "ImageRecord",
    "ApConfig",
    "DEFAULT_THRESHOLDS",
    "COMPARATORS",
    "EMPTY_IMAGE_POLICIES",
    "match_at_threshold",
    "average_precision",
    "mean_average_precision",
]

DEFAULT_THRESHOLDS = (0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75)

#: "gt" counts a hit only when IoU is strictly greater than the threshold;
#: "ge" also accepts exact equality.
COMPARATORS = ("gt", "ge")

#: "exclude" drops images with neither truth nor predictions from the mean;
#: "count-as-one" scores them as a perfect 1.0 instead.
EMPTY_IMAGE_POLICIES = ("exclude", "count-as-one")


@dataclass(frozen=True)
class Detection:
    """One predicted box with its confidence and originating source.

    source_id tags the fold/checkpoint a prediction came from; it is 0 for
    single-source pipelines and never affects scoring.
    """

    box: Box
    confidence: float
    source_id: int = 0

    def __post_init__(self):
        if not math.isfinite(self.confidence) or not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class ImageRecord:
    """Ground-truth boxes and predictions for one image, keyed by patient id."""

    image_id: str
    truth: tuple[Box, ...] = ()
    predictions: tuple[Detection, ...] = ()

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be a non-empty string")
        object.__setattr__(self, "truth", tuple(self.truth))
        object.__setattr__(self, "predictions", tuple(self.predictions))


@dataclass(frozen=True)
class ApConfig:
    """Threshold ladder plus the two convention switches the score depends on."""

    thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS
    comparator: str = "gt"
    empty_image_policy: str = "exclude"

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(self.thresholds))
        if not self.thresholds:
            raise ValueError("thresholds must be non-empty")
        for i, t in enumerate(self.thresholds):
            if not 0.0 < t < 1.0:
                raise ValueError(f"thresholds must lie in (0, 1), got {t!r}")
            if i > 0 and t <= self.thresholds[i - 1]:
                raise ValueError("thresholds must be strictly increasing")
        if self.comparator not in COMPARATORS:
            raise ValueError(f"comparator must be one of {COMPARATORS}, got {self.comparator!r}")
        if self.empty_image_policy not in EMPTY_IMAGE_POLICIES:
            raise ValueError(
                f"empty_image_policy must be one of {EMPTY_IMAGE_POLICIES}, got {self.empty_image_policy!r}"
            )


def _candidate_table(truth, predictions):
    """Per prediction (in descending confidence), truth indices by descending IoU.

    Candidates with IoU 0 are pruned: they can never pass a threshold in (0, 1).
    """
    order = sorted(range(len(predictions)), key=lambda i: -predictions[i].confidence)
    table = []
    for i in order:
        box = predictions[i].box
        pairs = []
        for j, t in enumerate(truth):
            v = iou(box, t)
            if v > 0.0:
                pairs.append((v, j))
        pairs.sort(key=lambda p: (-p[0], p[1]))
        table.append(pairs)
    return table


def _counts(table, n_truth, threshold, accept_equal):
    matched = [False] * n_truth
    tp = 0
    for pairs in table:
        for v, j in pairs:
            if matched[j]:
                continue
            if v > threshold or (accept_equal and v == threshold):
                matched[j] = True
                tp += 1
            break  # highest-IoU unmatched candidate failed; lower ones fail too
    return tp, len(table) - tp, n_truth - tp


def match_at_threshold(truth, predictions, threshold: float, cfg: ApConfig = ApConfig()):
    """Greedy TP/FP/FN counts for one image at a single IoU threshold.

    Returns:
        (tp, fp, fn) with tp + fn == len(truth) and tp + fp == len(predictions).
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold!r}")
    truth = tuple(truth)
    table = _candidate_table(truth, tuple(predictions))
    return _counts(table, len(truth), threshold, cfg.comparator == "ge")


def average_precision(record: ImageRecord, cfg: ApConfig = ApConfig()) -> float | None:
    """Score one image over the configured threshold ladder.

    Returns None when the image has neither truth nor predictions and the
    policy excludes such images from the mean.
    """
    if not record.truth and not record.predictions:
        return 1.0 if cfg.empty_image_policy == "count-as-one" else None
    table = _candidate_table(record.truth, record.predictions)
    n_truth = len(record.truth)
    accept_equal = cfg.comparator == "ge"
    total = 0.0
    for t in cfg.thresholds:
        tp, fp, fn = _counts(table, n_truth, t, accept_equal)
        total += tp / (tp + fp + fn)
    return total / len(cfg.thresholds)


def mean_average_precision(records, cfg: ApConfig = ApConfig()) -> float:
    """Mean of per-image APs over all records that contribute under the policy.

    Raises:
        ValueError: when no record contributes a value.
    """
    values = []
    for record in records:
        ap = average_precision(record, cfg)
        if ap is not None:
            values.append(ap)
    if not values:
        raise ValueError("no image contributes to the mean under the configured empty-image policy")
    return math.fsum(values) / len(values)
