"""Axis-aligned box arithmetic on the integer pixel grid.

A box covers the half-open pixel span [x, x+w) x [y, y+h), so areas compose
additively and boxes that merely touch intersect with area 0. Everything
stays in integer arithmetic until the single final ratio division, which
makes results directly comparable against pixel-counting oracles.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass


def round_half_away(value: float) -> int:
    """Round to the nearest integer, ties going away from zero."""
    if value >= 0:
        return math.floor(value + 0.5)
    return -math.floor(-value + 0.5)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box: top-left corner, size, and category index."""

    x: int
    y: int
    w: int
    h: int
    class_id: int = 0

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h", "class_id"):
            object.__setattr__(self, name, operator.index(getattr(self, name)))
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box size must be at least 1x1, got {self.w}x{self.h}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box corner must be non-negative, got ({self.x}, {self.y})")
        if self.class_id < 0:
            raise ValueError(f"class_id must be non-negative, got {self.class_id}")

    @property
    def x2(self) -> int:
        """Exclusive right edge."""
        return self.x + self.w

    @property
    def y2(self) -> int:
        """Exclusive bottom edge."""
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class ImageSize:
    """Strictly positive pixel dimensions of an image."""

    width: int
    height: int

    def __post_init__(self) -> None:
        for name in ("width", "height"):
            object.__setattr__(self, name, operator.index(getattr(self, name)))
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")

    def contains(self, box: BBox) -> bool:
        return box.x2 <= self.width and box.y2 <= self.height


def intersect_area(a: BBox, b: BBox) -> int:
    """Intersection area of two boxes in pixels; 0 when disjoint."""
    iw = min(a.x2, b.x2) - max(a.x, b.x)
    ih = min(a.y2, b.y2) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0
    return iw * ih


def overlap_ratio(pasted: BBox, existing: BBox) -> float:
    """Fraction of `existing` covered by `pasted`.

    Note this divides by the existing box's own area, not the union: a small
    box fully inside a large pasted region scores 1.0 even though its IoU is
    small. That is the quantity the paste-rejection rule thresholds.
    """
    return intersect_area(pasted, existing) / existing.area


def clamp_to_image(box: BBox, size: ImageSize) -> BBox:
    """Translate `box` by the minimal amount so it lies inside `size`.

    The size is preserved; boxes larger than the image are rejected because
    no translation can make them fit.
    """
    if box.w > size.width or box.h > size.height:
        raise ValueError(
            f"box {box.w}x{box.h} does not fit in image {size.width}x{size.height}"
        )
    x = min(box.x, size.width - box.w)
    y = min(box.y, size.height - box.h)
    if x == box.x and y == box.y:
        return box
    return BBox(x, y, box.w, box.h, box.class_id)
