"""Axis-aligned box algebra and planar affine transforms.

Boxes are (x, y, w, h) in pixel coordinates with the origin at the top-left
corner and y growing downwards; corners are derived as [x, x+w] x [y, y+h].
Coordinates are continuous floats; rounding to a pixel grid happens only at
serialization. Zero-area boxes are legal values (IoU 0 against everything)
and are dropped when clipped.

All types are immutable and all operations are pure functions.
"""

import math
from dataclasses import dataclass

__all__ = [
    "Box",
    "Point",
    "Affine",
    "area",
    "iou",
    "transform_box_corners",
    "transform_box_custom",
    "clip_box",
]


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle anchored at its top-left corner."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Box.{name} must be finite, got {value!r}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"Box sides must be non-negative, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def center(self) -> "Point":
        return Point(self.x + self.w / 2, self.y + self.h / 2)


@dataclass(frozen=True)
class Point:
    px: float
    py: float

    def __post_init__(self):
        if not (math.isfinite(self.px) and math.isfinite(self.py)):
            raise ValueError(f"Point coordinates must be finite, got ({self.px!r}, {self.py!r})")


@dataclass(frozen=True)
class Affine:
    """Planar affine map x' = a*x + b*y + c, y' = d*x + e*y + f.

    Composition follows matrix semantics: (m1 @ m2) applies m2 first,
    then m1.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e", "f"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"Affine.{name} must be finite, got {value!r}")

    def apply_xy(self, x: float, y: float) -> tuple[float, float]:
        return (self.a * x + self.b * y + self.c, self.d * x + self.e * y + self.f)

    def apply(self, p: Point) -> Point:
        return Point(*self.apply_xy(p.px, p.py))

    def __matmul__(self, other: "Affine") -> "Affine":
        return Affine(
            self.a * other.a + self.b * other.d,
            self.a * other.b + self.b * other.e,
            self.a * other.c + self.b * other.f + self.c,
            self.d * other.a + self.e * other.d,
            self.d * other.b + self.e * other.e,
            self.d * other.c + self.e * other.f + self.f,
        )

    @property
    def is_translation(self) -> bool:
        return self.a == 1.0 and self.b == 0.0 and self.d == 0.0 and self.e == 1.0

    def invert(self) -> "Affine":
        det = self.a * self.e - self.b * self.d
        if det == 0:
            raise ValueError("Affine map is singular and cannot be inverted")
        ia, ib = self.e / det, -self.b / det
        id_, ie = -self.d / det, self.a / det
        return Affine(ia, ib, -(ia * self.c + ib * self.f), id_, ie, -(id_ * self.c + ie * self.f))

    @classmethod
    def identity(cls) -> "Affine":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def translation(cls, dx: float, dy: float) -> "Affine":
        return cls(1.0, 0.0, dx, 0.0, 1.0, dy)

    @classmethod
    def rotation(cls, degrees: float, cx: float = 0.0, cy: float = 0.0) -> "Affine":
        """Rotation about (cx, cy); positive angles turn x toward +y."""
        t = math.radians(degrees)
        cos, sin = math.cos(t), math.sin(t)
        return cls(cos, -sin, cx - cos * cx + sin * cy, sin, cos, cy - sin * cx - cos * cy)

    @classmethod
    def scaling(cls, sx: float, sy: float, cx: float = 0.0, cy: float = 0.0) -> "Affine":
        return cls(sx, 0.0, cx - sx * cx, 0.0, sy, cy - sy * cy)

    @classmethod
    def shear(cls, degrees: float, cx: float = 0.0, cy: float = 0.0) -> "Affine":
        """Horizontal shear: x is displaced proportionally to (y - cy)."""
        t = math.tan(math.radians(degrees))
        return cls(1.0, t, -t * cy, 0.0, 1.0, 0.0)

    @classmethod
    def horizontal_flip(cls, width: float) -> "Affine":
        return cls(-1.0, 0.0, width, 0.0, 1.0, 0.0)


def area(b: Box) -> float:
    return b.w * b.h


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0 when the union is empty."""
    # min(right edges) - max(left edges), expanded into the four pairwise
    # differences so identical boxes yield their exact width (never (x+w)-x).
    ix = min(a.w, b.w, (a.x - b.x) + a.w, (b.x - a.x) + b.w)
    if ix <= 0:
        return 0.0
    iy = min(a.h, b.h, (a.y - b.y) + a.h, (b.y - a.y) + b.h)
    if iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0:
        return 0.0
    value = inter / union
    return 1.0 if value > 1.0 else value


def _hull_box(t: Affine, points) -> Box:
    xs = []
    ys = []
    for px, py in points:
        x, y = t.apply_xy(px, py)
        xs.append(x)
        ys.append(y)
    x1, y1 = min(xs), min(ys)
    return Box(x1, y1, max(xs) - x1, max(ys) - y1)


def transform_box_corners(b: Box, t: Affine) -> Box:
    """Map the 4 corners through t and return their axis-aligned hull."""
    if t.is_translation:
        # Pure shifts commute with the hull; shifting fields directly keeps
        # w and h bit-exact.
        return Box(b.x + t.c, b.y + t.f, b.w, b.h)
    x2, y2 = b.x + b.w, b.y + b.h
    return _hull_box(t, ((b.x, b.y), (x2, b.y), (b.x, y2), (x2, y2)))


def transform_box_custom(b: Box, t: Affine) -> Box:
    """Map 8 edge points (at 1/3 and 2/3 along each edge) and take their hull.

    The edge points lie in the convex hull of the corners, so the resulting
    box is always contained in the transform_box_corners result; under mild
    rotations it is strictly tighter.
    """
    if t.is_translation:
        return Box(b.x + t.c, b.y + t.f, b.w, b.h)
    x2, y2 = b.x + b.w, b.y + b.h
    u1, u2 = b.x + b.w * (1 / 3), b.x + b.w * (2 / 3)
    v1, v2 = b.y + b.h * (1 / 3), b.y + b.h * (2 / 3)
    points = (
        (u1, b.y), (u2, b.y),
        (u1, y2), (u2, y2),
        (b.x, v1), (b.x, v2),
        (x2, v1), (x2, v2),
    )
    return _hull_box(t, points)


def clip_box(b: Box, width: float, height: float) -> Box | None:
    """Intersect b with the [0, width] x [0, height] canvas.

    Returns None when the intersection has zero area (this is also where
    degenerate zero-area boxes are dropped).
    """
    if not (width > 0 and height > 0):
        raise ValueError(f"canvas must have positive size, got {width} x {height}")
    x2, y2 = min(b.x + b.w, width), min(b.y + b.h, height)
    x1, y1 = max(b.x, 0.0), max(b.y, 0.0)
    if x2 <= x1 or y2 <= y1:
        return None
    if x1 == b.x and y1 == b.y and x2 == b.x + b.w and y2 == b.y + b.h:
        return b
    return Box(x1, y1, x2 - x1, y2 - y1)
