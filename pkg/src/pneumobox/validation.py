"""Input validation and conversion helpers.

The estimator layer accepts either domain objects (Box, Detection,
ImageRecord) or plain nested sequences/mappings mirroring them, so callers
can hand over raw Python data: boxes as (x, y, w, h), detections as
(conf, x, y, w, h), records as {"image_id", "truth", "predictions"}.
Conversion is lossless and errors name the offending item.
"""

from collections.abc import Mapping, Sequence

import numpy as np

from .geometry import Box
from .metric import Detection, ImageRecord

__all__ = [
    "as_box",
    "as_detection",
    "check_detections",
    "check_detection_lists",
    "check_source_lists",
    "as_record",
    "check_records",
    "check_image",
]


def as_box(value) -> Box:
    if isinstance(value, Box):
        return value
    if isinstance(value, Sequence) and not isinstance(value, str) and len(value) == 4:
        return Box(*(float(v) for v in value))
    raise ValueError(f"expected a Box or an (x, y, w, h) sequence, got {value!r}")


def as_detection(value) -> Detection:
    if isinstance(value, Detection):
        return value
    if isinstance(value, Sequence) and not isinstance(value, str) and len(value) == 5:
        conf, x, y, w, h = (float(v) for v in value)
        return Detection(Box(x, y, w, h), conf)
    raise ValueError(f"expected a Detection or a (conf, x, y, w, h) sequence, got {value!r}")


def check_detections(values) -> list[Detection]:
    out = []
    for i, value in enumerate(values):
        try:
            out.append(as_detection(value))
        except ValueError as exc:
            raise ValueError(f"detection {i}: {exc}") from None
    return out


def check_detection_lists(X) -> list[list[Detection]]:
    """Validate a per-image sequence of detection lists."""
    out = []
    for i, dets in enumerate(X):
        try:
            out.append(check_detections(dets))
        except (ValueError, TypeError) as exc:
            raise ValueError(f"image {i}: {exc}") from None
    return out


def check_source_lists(X) -> list[list[list[Detection]]]:
    """Validate a per-image sequence of per-source detection lists."""
    out = []
    for i, sources in enumerate(X):
        try:
            out.append([check_detections(dets) for dets in sources])
        except (ValueError, TypeError) as exc:
            raise ValueError(f"image {i}: {exc}") from None
    return out


def as_record(value) -> ImageRecord:
    if isinstance(value, ImageRecord):
        return value
    if isinstance(value, Mapping):
        extra = set(value) - {"image_id", "truth", "predictions"}
        if extra:
            raise ValueError(f"record has unknown keys {sorted(extra)}")
        image_id = value.get("image_id")
        if not image_id or not isinstance(image_id, str):
            raise ValueError("record needs a non-empty string 'image_id'")
        try:
            truth = tuple(as_box(b) for b in value.get("truth", ()))
            predictions = tuple(as_detection(d) for d in value.get("predictions", ()))
        except ValueError as exc:
            raise ValueError(f"record {image_id!r}: {exc}") from None
        return ImageRecord(image_id, truth, predictions)
    raise ValueError(f"expected an ImageRecord or a mapping, got {value!r}")


def check_records(values) -> list[ImageRecord]:
    out = [as_record(v) for v in values]
    if not out:
        raise ValueError("expected at least one record")
    return out


def check_image(img) -> np.ndarray:
    """Accept a 2-D array-like with finite intensities in [0, 1]."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image intensities must be finite")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("image intensities must lie in [0, 1]")
    return arr
