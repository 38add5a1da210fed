"""Scikit-learn style wrappers around the functional pipeline stages.

The suppression, fusion and augmentation stages are stateless transformers
(fit validates and returns self), while the NMS threshold sweep is a search
estimator that exposes its grid and argmax through fitted attributes. All
classes follow the BaseEstimator contract (get_params / set_params / clone),
so they compose with sklearn pipelines and model-selection tooling.
"""

from sklearn.base import BaseEstimator, TransformerMixin

from . import validation
from .augment import AugmentPreset, augment_sample
from .augment import preset as load_preset
from .fusion import ShrinkConfig, ensemble
from .metric import ApConfig, DEFAULT_THRESHOLDS
from .nms import nms, sweep, threshold_range

__all__ = ["NonMaxSuppression", "SourceFusion", "NmsThresholdSweep", "ImageAugmenter", "threshold_range"]


class NonMaxSuppression(BaseEstimator, TransformerMixin):
    """Per-image greedy NMS as a stateless transformer.

    transform takes a sequence of per-image detection lists (Detection
    objects or (conf, x, y, w, h) tuples) and returns the suppressed lists.
    """

    def __init__(self, iou_threshold: float = 0.5):
        self.iou_threshold = iou_threshold

    def fit(self, X, y=None):
        validation.check_detection_lists(X)
        return self

    def transform(self, X):
        return [nms(dets, self.iou_threshold) for dets in validation.check_detection_lists(X)]


class SourceFusion(BaseEstimator, TransformerMixin):
    """Multi-source fusion pipeline (cluster, shrink-fuse, NMS) per image.

    transform takes, per image, a list of per-source detection lists and
    returns one fused detection list per image.
    """

    def __init__(
        self,
        cluster_iou: float = 0.5,
        mode: str = "percentile",
        low_percentile: float = 20.0,
        high_percentile: float = 80.0,
        scale: float = 1.6,
        rescale_factor: float = 0.875,
        min_size: float = 1.0,
        nms_threshold: float = 0.5,
    ):
        self.cluster_iou = cluster_iou
        self.mode = mode
        self.low_percentile = low_percentile
        self.high_percentile = high_percentile
        self.scale = scale
        self.rescale_factor = rescale_factor
        self.min_size = min_size
        self.nms_threshold = nms_threshold

    def _shrink_config(self) -> ShrinkConfig:
        return ShrinkConfig(
            low_percentile=self.low_percentile,
            high_percentile=self.high_percentile,
            scale=self.scale,
            mode=self.mode,
            rescale_factor=self.rescale_factor,
            min_size=self.min_size,
        )

    def fit(self, X, y=None):
        validation.check_source_lists(X)
        self._shrink_config()
        return self

    def transform(self, X):
        shrink = self._shrink_config()
        return [
            ensemble(sources, self.cluster_iou, shrink, self.nms_threshold)
            for sources in validation.check_source_lists(X)
        ]


class NmsThresholdSweep(BaseEstimator):
    """Grid search over NMS thresholds scored by mean average precision.

    fit takes a sequence of (label, records) runs, where records carry raw
    predictions, and exposes the scored grid via result_ plus the argmax
    cell via best_label_ / best_threshold_ / best_score_.
    """

    def __init__(
        self,
        thresholds=None,
        ap_thresholds=DEFAULT_THRESHOLDS,
        comparator: str = "gt",
        empty_image_policy: str = "exclude",
        max_workers: int = 1,
    ):
        self.thresholds = thresholds
        self.ap_thresholds = ap_thresholds
        self.comparator = comparator
        self.empty_image_policy = empty_image_policy
        self.max_workers = max_workers

    def fit(self, X, y=None):
        runs = [(label, validation.check_records(records)) for label, records in X]
        thresholds = self.thresholds
        if thresholds is None:
            thresholds = threshold_range(0.1, 1.0, 0.05)
        cfg = ApConfig(tuple(self.ap_thresholds), self.comparator, self.empty_image_policy)
        self.result_ = sweep(runs, thresholds, cfg, max_workers=self.max_workers)
        self.best_label_ = self.result_.best.run_label
        self.best_threshold_ = self.result_.best.nms_threshold
        self.best_score_ = self.result_.best.mean_ap
        return self


class ImageAugmenter(BaseEstimator, TransformerMixin):
    """Deterministic augmentation over (image, boxes) pairs.

    Item i is augmented with seed + i, so a fixed seed reproduces the whole
    batch while items still draw independently.
    """

    def __init__(self, preset: str | AugmentPreset = "none", seed: int = 0):
        self.preset = preset
        self.seed = seed

    def _preset(self) -> AugmentPreset:
        if isinstance(self.preset, AugmentPreset):
            return self.preset
        return load_preset(self.preset)

    def fit(self, X, y=None):
        self._preset()
        return self

    def transform(self, X):
        chosen = self._preset()
        out = []
        for i, (img, boxes) in enumerate(X):
            arr = validation.check_image(img)
            out.append(augment_sample(arr, [validation.as_box(b) for b in boxes], chosen, self.seed + i))
        return out
