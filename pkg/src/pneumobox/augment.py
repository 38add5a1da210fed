"""Image and box augmentation pipelines with deterministic seeding.

Images are single-channel, row-major float64 arrays with intensities in
[0, 1] (shape (height, width)); pixel i occupies the unit square
[i, i+1) so its center sits at i + 0.5 in the continuous coordinates
shared with boxes. All sampling uses numpy's PCG64 bit generator, so a
given (preset, seed) pair reproduces the same augmentation everywhere.

Five named presets cover the ablation ladder from no augmentation up to
heavy augmentation with either corner-based or edge-point ("custom") box
rotation.
"""

from dataclasses import dataclass, replace

import numpy as np

from .geometry import Affine, Box, clip_box, transform_box_corners, transform_box_custom

__all__ = [
    "AugmentPreset",
    "TransformParams",
    "PRESET_NAMES",
    "ROTATION_MODES",
    "preset",
    "sample_params",
    "params_to_affine",
    "sample_transform",
    "resize",
    "apply",
    "pixel_ops",
    "augment_sample",
]

ROTATION_MODES = ("corners", "custom", "off")

#: Working resolution the pipelines were tuned for.
DEFAULT_SIZE = 512


@dataclass(frozen=True)
class AugmentPreset:
    """Parameter bundle for one augmentation configuration.

    Magnitudes are upper bounds for uniform jitter draws; each pixel op
    fires independently with op_probability when its toggle is on.
    """

    name: str
    scale_jitter: float = 0.0
    shear_deg: float = 0.0
    max_rotation_deg: float = 0.0
    rotation_mode: str = "off"
    hflip: bool = False
    pixel_noise: bool = False
    blur: bool = False
    gamma_jitter: bool = False
    shift_frac: float = 0.0
    noise_sigma: float = 0.05
    blur_sigma: float = 1.5
    gamma_low: float = 0.8
    gamma_high: float = 1.25
    op_probability: float = 0.5

    def __post_init__(self):
        for name in ("scale_jitter", "shear_deg", "max_rotation_deg", "shift_frac"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.rotation_mode not in ROTATION_MODES:
            raise ValueError(f"rotation_mode must be one of {ROTATION_MODES}")
        if not 0.0 <= self.op_probability <= 1.0:
            raise ValueError("op_probability must lie in [0, 1]")


_HEAVY = AugmentPreset(
    name="heavy",
    scale_jitter=0.15,
    shear_deg=4.0,
    max_rotation_deg=6.0,
    rotation_mode="corners",
    hflip=True,
    pixel_noise=True,
    blur=True,
    gamma_jitter=True,
    shift_frac=0.05,
)

_PRESETS = {
    "none": AugmentPreset(name="none"),
    "light": AugmentPreset(
        name="light",
        scale_jitter=0.1,
        shear_deg=2.5,
        max_rotation_deg=5.0,
        rotation_mode="corners",
        shift_frac=0.05,
    ),
    "heavy": _HEAVY,
    "heavy_no_rotation": replace(_HEAVY, name="heavy_no_rotation", rotation_mode="off"),
    "heavy_custom_rotation": replace(_HEAVY, name="heavy_custom_rotation", rotation_mode="custom"),
}

PRESET_NAMES = tuple(_PRESETS)


def preset(name: str) -> AugmentPreset:
    """Look up one of the named presets."""
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; valid presets: {', '.join(PRESET_NAMES)}") from None


@dataclass(frozen=True)
class TransformParams:
    """Raw per-sample geometric draws, before composition into an affine."""

    angle_deg: float = 0.0
    scale: float = 1.0
    shear_deg: float = 0.0
    shift_x: float = 0.0
    shift_y: float = 0.0
    hflip: bool = False


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def sample_params(
    preset: AugmentPreset, seed: int, width: int = DEFAULT_SIZE, height: int = DEFAULT_SIZE
) -> TransformParams:
    """Draw the geometric jitter for one sample.

    Rotation is uniform in [-max_rotation_deg, +max_rotation_deg], scale in
    [1 - scale_jitter, 1 + scale_jitter], shear in [-shear_deg, +shear_deg],
    shift in +/- shift_frac of the canvas, and the flip is a fair coin when
    enabled. Draws only happen for enabled components, so presets differing
    solely in rotation_mode consume the seed identically.
    """
    rng = _rng(seed)
    angle = 0.0
    if preset.rotation_mode != "off" and preset.max_rotation_deg > 0:
        angle = rng.uniform(-preset.max_rotation_deg, preset.max_rotation_deg)
    scale = 1.0
    if preset.scale_jitter > 0:
        scale = rng.uniform(1.0 - preset.scale_jitter, 1.0 + preset.scale_jitter)
    shear = 0.0
    if preset.shear_deg > 0:
        shear = rng.uniform(-preset.shear_deg, preset.shear_deg)
    shift_x = shift_y = 0.0
    if preset.shift_frac > 0:
        shift_x = rng.uniform(-preset.shift_frac, preset.shift_frac) * width
        shift_y = rng.uniform(-preset.shift_frac, preset.shift_frac) * height
    flip = bool(preset.hflip and rng.random() < 0.5)
    return TransformParams(angle, scale, shear, shift_x, shift_y, flip)


def params_to_affine(params: TransformParams, width: int, height: int) -> Affine:
    """Compose draws about the canvas center: flip, scale, shear, rotate, shift."""
    cx, cy = width / 2, height / 2
    t = Affine.identity()
    if params.hflip:
        t = Affine.horizontal_flip(width) @ t
    if params.scale != 1.0:
        t = Affine.scaling(params.scale, params.scale, cx, cy) @ t
    if params.shear_deg != 0.0:
        t = Affine.shear(params.shear_deg, cx, cy) @ t
    if params.angle_deg != 0.0:
        t = Affine.rotation(params.angle_deg, cx, cy) @ t
    if params.shift_x != 0.0 or params.shift_y != 0.0:
        t = Affine.translation(params.shift_x, params.shift_y) @ t
    return t


def sample_transform(
    preset: AugmentPreset, seed: int, width: int = DEFAULT_SIZE, height: int = DEFAULT_SIZE
) -> Affine:
    """Sampled affine for one image; the "none" preset yields the exact identity."""
    return params_to_affine(sample_params(preset, seed, width, height), width, height)


def _sample_bilinear(img, x, y, border):
    """Bilinear lookup at pixel-center coordinates.

    border "zero" treats everything outside the canvas as 0; "clamp"
    replicates edge pixels (used by resize so constants stay constant).
    The lerp form a + f*(b - a) keeps flat regions bit-exact.
    """
    h, w = img.shape
    if border == "clamp":
        x = np.clip(x, 0.0, w - 1.0)
        y = np.clip(y, 0.0, h - 1.0)
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)

    def fetch(yy, xx):
        vals = img[np.clip(yy, 0, h - 1), np.clip(xx, 0, w - 1)]
        if border == "zero":
            inside = (xx >= 0) & (xx < w) & (yy >= 0) & (yy < h)
            vals = np.where(inside, vals, 0.0)
        return vals

    v00 = fetch(y0, x0)
    v01 = fetch(y0, x0 + 1)
    v10 = fetch(y0 + 1, x0)
    v11 = fetch(y0 + 1, x0 + 1)
    top = v00 + fx * (v01 - v00)
    bottom = v10 + fx * (v11 - v10)
    return top + fy * (bottom - top)


def resize(img, boxes, target: int):
    """Bilinear resample to target x target; boxes scale by the same factors."""
    if target <= 0:
        raise ValueError(f"target size must be positive, got {target!r}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    xs = (np.arange(target) + 0.5) * (w / target) - 0.5
    ys = (np.arange(target) + 0.5) * (h / target) - 0.5
    grid_x, grid_y = np.meshgrid(xs, ys)
    out = _sample_bilinear(img, grid_x, grid_y, border="clamp")
    sx, sy = target / w, target / h
    scaled = [Box(b.x * sx, b.y * sy, b.w * sx, b.h * sy) for b in boxes]
    return out, scaled


def apply(img, boxes, t: Affine, rotation_mode: str = "corners"):
    """Warp pixels by t (bilinear, zero padding) and map boxes along.

    Boxes go through the 4-corner hull or, in "custom" mode, the 8
    edge-point hull; they are then clipped to the canvas and dropped when
    nothing remains.
    """
    if rotation_mode not in ROTATION_MODES:
        raise ValueError(f"rotation_mode must be one of {ROTATION_MODES}")
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    inv = t.invert()
    grid_x, grid_y = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    src_x = inv.a * grid_x + inv.b * grid_y + inv.c - 0.5
    src_y = inv.d * grid_x + inv.e * grid_y + inv.f - 0.5
    out = _sample_bilinear(img, src_x, src_y, border="zero")
    mapper = transform_box_custom if rotation_mode == "custom" else transform_box_corners
    kept = []
    for b in boxes:
        clipped = clip_box(mapper(b, t), w, h)
        if clipped is not None:
            kept.append(clipped)
    return out, kept


def pixel_ops(img, preset: AugmentPreset, seed: int):
    """Seeded intensity augmentation: additive noise, Gaussian blur, gamma.

    Each enabled op fires with op_probability; intensities are clamped back
    to [0, 1] after every op.
    """
    from scipy.ndimage import gaussian_filter  # deferred: keeps CLI start-up lean

    rng = _rng(seed)
    out = np.array(img, dtype=np.float64, copy=True)
    if preset.pixel_noise and rng.random() < preset.op_probability:
        sigma = rng.uniform(0.0, preset.noise_sigma)
        out = np.clip(out + rng.normal(0.0, sigma, size=out.shape), 0.0, 1.0)
    if preset.blur and rng.random() < preset.op_probability:
        sigma = rng.uniform(0.0, preset.blur_sigma)
        if sigma > 0:
            out = np.clip(gaussian_filter(out, sigma, mode="nearest"), 0.0, 1.0)
    if preset.gamma_jitter and rng.random() < preset.op_probability:
        gamma = rng.uniform(preset.gamma_low, preset.gamma_high)
        out = np.clip(out ** gamma, 0.0, 1.0)
    return out


def augment_sample(img, boxes, preset: AugmentPreset, seed: int):
    """Full pipeline for one image: sampled affine, box mapping, pixel ops.

    The geometric stage consumes seed and the pixel stage seed + 1, so the
    two draw streams stay decoupled but equally reproducible.
    """
    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape
    t = sample_transform(preset, seed, w, h)
    warped, mapped = apply(img, boxes, t, preset.rotation_mode)
    return pixel_ops(warped, preset, seed + 1), mapped
