"""Cross-domain object paste planning and application.

Ground-truth crops from one domain are pasted into the other domain's
image. Planning gates each candidate box by size, draws a scale and a
placement, and rejects placements that would cover too much of any
protected box (the destination's ground truth plus pastes already accepted
into it). Application copies pixels and merges the annotation lists.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .datasets import AnnotatedImage, BatchSample
from .geometry import BBox, ImageSize, overlap_ratio, round_half_away
from .imaging import bilinear_resize, crop, match_channels, quantize_u8
from .seeding import SeededStream


class Position(str, Enum):
    FIXED = "fixed"
    RANDOM = "random"


class Scaling(str, Enum):
    FIXED = "fixed"
    RANDOM = "random"


class PasteDirection(str, Enum):
    TARGET_INTO_SOURCE = "target_into_source"
    SOURCE_INTO_TARGET = "source_into_target"


class SkipReason(str, Enum):
    TOO_SMALL = "too_small"
    TOO_LARGE = "too_large"
    ATTEMPTS_EXHAUSTED = "attempts_exhausted"


@dataclass(frozen=True)
class PasteStrategy:
    """Knobs controlling candidate selection and placement.

    The fixed/fixed default keeps each crop at its original position and
    scale, which preserves the position/scale statistics a detector sees at
    inference time. `jitter` optionally displaces a fixed position by a
    uniform integer offset in [-jitter, jitter] per axis.
    """

    position: Position = Position.FIXED
    scaling: Scaling = Scaling.FIXED
    scale_min: float = 0.7
    scale_max: float = 1.3
    gamma: float = 0.25
    max_attempts: int = 50
    min_box_side: int = 16
    jitter: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "position", Position(self.position))
        object.__setattr__(self, "scaling", Scaling(self.scaling))
        if not 0.0 < self.scale_min <= self.scale_max:
            raise ValueError(
                f"need 0 < scale_min <= scale_max, got [{self.scale_min}, {self.scale_max}]"
            )
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be at least 1")
        if self.min_box_side < 0:
            raise ValueError("min_box_side must be non-negative")
        if self.jitter < 0:
            raise ValueError("jitter must be non-negative")

    @property
    def smallest_scale(self) -> float:
        return 1.0 if self.scaling == Scaling.FIXED else self.scale_min


@dataclass(frozen=True)
class PasteRecord:
    """One accepted paste: where the crop came from and where it landed."""

    src_image_id: str
    src_box: BBox
    dst_rect: BBox
    scale_factor: float
    direction: PasteDirection

    def __post_init__(self) -> None:
        object.__setattr__(self, "direction", PasteDirection(self.direction))
        if self.scale_factor <= 0:
            raise ValueError(f"scale_factor must be positive, got {self.scale_factor}")
        expect_w = scaled_side(self.src_box.w, self.scale_factor)
        expect_h = scaled_side(self.src_box.h, self.scale_factor)
        if (self.dst_rect.w, self.dst_rect.h) != (expect_w, expect_h):
            raise ValueError(
                f"dst_rect is {self.dst_rect.w}x{self.dst_rect.h} but src box "
                f"{self.src_box.w}x{self.src_box.h} at scale {self.scale_factor} "
                f"gives {expect_w}x{expect_h}"
            )
        if self.dst_rect.class_id != self.src_box.class_id:
            raise ValueError("dst_rect must carry the source box's class_id")


@dataclass(frozen=True)
class PastePlan:
    """Accepted records plus the boxes that were skipped and why."""

    records: tuple[PasteRecord, ...]
    skipped: tuple[tuple[BBox, SkipReason], ...]


def scaled_side(side: int, scale: float) -> int:
    return max(1, round_half_away(side * scale))


def plan_pastes(
    src_boxes: Sequence[BBox],
    dst_boxes: Sequence[BBox],
    dst_size: ImageSize,
    strategy: PasteStrategy,
    rng: SeededStream,
    *,
    direction: PasteDirection = PasteDirection.TARGET_INTO_SOURCE,
    src_image_id: str = "",
) -> PastePlan:
    """Decide which source boxes get pasted where in the destination.

    Boxes are visited in order. A box whose original sides do not strictly
    exceed `min_box_side` is skipped as too small; one whose smallest
    achievable scaled footprint cannot fit strictly inside the destination
    is skipped as too large. Otherwise placements are drawn until one
    covers at most `gamma` of every protected box, where the protected set
    is the destination ground truth plus previously accepted placements.
    With fixed position and fixed scale the draw is deterministic, so a
    single failed attempt skips the box immediately.
    """
    protected = list(dst_boxes)
    records: list[PasteRecord] = []
    skipped: list[tuple[BBox, SkipReason]] = []

    for box in src_boxes:
        if box.w <= strategy.min_box_side or box.h <= strategy.min_box_side:
            skipped.append((box, SkipReason.TOO_SMALL))
            continue
        min_w = scaled_side(box.w, strategy.smallest_scale)
        min_h = scaled_side(box.h, strategy.smallest_scale)
        if min_w >= dst_size.width or min_h >= dst_size.height:
            skipped.append((box, SkipReason.TOO_LARGE))
            continue

        deterministic = (
            strategy.position == Position.FIXED
            and strategy.scaling == Scaling.FIXED
            and strategy.jitter == 0
        )
        attempts = 1 if deterministic else strategy.max_attempts

        accepted = None
        for _ in range(attempts):
            if strategy.scaling == Scaling.RANDOM:
                scale = rng.uniform(strategy.scale_min, strategy.scale_max)
            else:
                scale = 1.0
            w = scaled_side(box.w, scale)
            h = scaled_side(box.h, scale)
            if w >= dst_size.width or h >= dst_size.height:
                continue
            if strategy.position == Position.RANDOM:
                x = rng.randint(0, dst_size.width - w)
                y = rng.randint(0, dst_size.height - h)
            else:
                x = min(box.x, dst_size.width - w)
                y = min(box.y, dst_size.height - h)
                if strategy.jitter > 0:
                    x = min(max(x + rng.randint(-strategy.jitter, strategy.jitter), 0),
                            dst_size.width - w)
                    y = min(max(y + rng.randint(-strategy.jitter, strategy.jitter), 0),
                            dst_size.height - h)
            candidate = BBox(x, y, w, h, box.class_id)
            if all(overlap_ratio(candidate, p) <= strategy.gamma for p in protected):
                accepted = PasteRecord(src_image_id, box, candidate, scale, direction)
                break

        if accepted is None:
            skipped.append((box, SkipReason.ATTEMPTS_EXHAUSTED))
        else:
            records.append(accepted)
            protected.append(accepted.dst_rect)

    return PastePlan(tuple(records), tuple(skipped))


def apply_pastes(dst: AnnotatedImage, src: AnnotatedImage, plan: PastePlan) -> AnnotatedImage:
    """Write the planned crops into a copy of `dst` and merge annotations.

    Crops are bilinearly resized to their destination rectangle; a 1- vs
    3-channel mismatch is bridged by replicating or averaging channels.
    The original boxes are preserved verbatim and each record's dst_rect is
    appended with the source box's class.
    """
    for i, rec in enumerate(plan.records):
        if not src.size.contains(rec.src_box):
            raise ValueError(
                f"record {i}: src_box ({rec.src_box.x},{rec.src_box.y},"
                f"{rec.src_box.w},{rec.src_box.h}) lies outside source image "
                f"{src.size.width}x{src.size.height}"
            )
        if not dst.size.contains(rec.dst_rect):
            raise ValueError(
                f"record {i}: dst_rect ({rec.dst_rect.x},{rec.dst_rect.y},"
                f"{rec.dst_rect.w},{rec.dst_rect.h}) lies outside destination "
                f"{dst.size.width}x{dst.size.height}"
            )

    out = np.array(dst.pixels)
    boxes = list(dst.boxes)
    for rec in plan.records:
        patch = crop(src.pixels, rec.src_box).astype(np.float64)
        patch = match_channels(patch, dst.channels)
        resized = quantize_u8(bilinear_resize(patch, rec.dst_rect.w, rec.dst_rect.h))
        r = rec.dst_rect
        out[r.y : r.y2, r.x : r.x2] = resized
        boxes.append(r)
    return AnnotatedImage(dst.image_id, out, tuple(boxes), dst.domain)


def augment_pair(
    sample: BatchSample, strategy: PasteStrategy, rng: SeededStream
) -> tuple[AnnotatedImage, AnnotatedImage, list[PasteRecord], list[PasteRecord]]:
    """Run the paste exchange in both directions for one iteration.

    Both directions plan against the original, pre-paste counterpart: the
    target-into-source pastes never protect or cut boxes created by the
    source-into-target direction within the same call. The target-into-
    source direction consumes the random stream first.
    """
    source, target = sample.source_item, sample.target_item
    rng_into_source = rng.fork()
    rng_into_target = rng.fork()
    plan_into_source = plan_pastes(
        target.boxes, source.boxes, source.size, strategy, rng_into_source,
        direction=PasteDirection.TARGET_INTO_SOURCE, src_image_id=target.image_id,
    )
    plan_into_target = plan_pastes(
        source.boxes, target.boxes, target.size, strategy, rng_into_target,
        direction=PasteDirection.SOURCE_INTO_TARGET, src_image_id=source.image_id,
    )
    augmented_source = apply_pastes(source, target, plan_into_source)
    augmented_target = apply_pastes(target, source, plan_into_target)
    return (
        augmented_source,
        augmented_target,
        list(plan_into_source.records),
        list(plan_into_target.records),
    )
