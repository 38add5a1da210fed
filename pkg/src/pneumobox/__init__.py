"""Post-network toolkit for lung-opacity detection pipelines.

Covers bounding-box geometry (including edge-point "custom" rotation),
the per-image average-precision metric over an IoU-threshold ladder,
greedy NMS with threshold sweeps, multi-source box fusion with
percentile-shrink or fixed-rescale postprocessing, deterministic image
augmentation, and the challenge CSV formats.
"""

from .augment import (
    AugmentPreset,
    PRESET_NAMES,
    TransformParams,
    augment_sample,
    apply,
    params_to_affine,
    pixel_ops,
    preset,
    resize,
    sample_params,
    sample_transform,
)
from .fusion import Cluster, ShrinkConfig, cluster, ensemble, fuse_cluster
from .geometry import (
    Affine,
    Box,
    Point,
    area,
    clip_box,
    iou,
    transform_box_corners,
    transform_box_custom,
)
from .metric import (
    ApConfig,
    DEFAULT_THRESHOLDS,
    Detection,
    ImageRecord,
    average_precision,
    match_at_threshold,
    mean_average_precision,
)
from .nms import SweepCell, SweepResult, nms, sweep, threshold_range

__version__ = "0.1.0"

# The sklearn-backed estimator layer loads lazily so CLI runs do not pay
# the scikit-learn import cost.
_ESTIMATOR_EXPORTS = ("ImageAugmenter", "NmsThresholdSweep", "NonMaxSuppression", "SourceFusion")


def __getattr__(name):
    if name in _ESTIMATOR_EXPORTS:
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_ESTIMATOR_EXPORTS))

__all__ = [
    "Affine",
    "ApConfig",
    "AugmentPreset",
    "Box",
    "Cluster",
    "DEFAULT_THRESHOLDS",
    "Detection",
    "ImageAugmenter",
    "ImageRecord",
    "NmsThresholdSweep",
    "NonMaxSuppression",
    "PRESET_NAMES",
    "Point",
    "ShrinkConfig",
    "SourceFusion",
    "SweepCell",
    "SweepResult",
    "TransformParams",
    "apply",
    "area",
    "augment_sample",
    "average_precision",
    "clip_box",
    "cluster",
    "ensemble",
    "fuse_cluster",
    "iou",
    "match_at_threshold",
    "mean_average_precision",
    "nms",
    "params_to_affine",
    "pixel_ops",
    "preset",
    "resize",
    "sample_params",
    "sample_transform",
    "sweep",
    "threshold_range",
    "transform_box_corners",
    "transform_box_custom",
]
