"""Per-cell domain identification label maps at feature stride.

A discriminator that sees pasted content from the other domain needs its
supervision to follow the paste: cells whose receptive tile touches a
pasted rectangle are relabeled with the pasted content's domain. Labels
are hard values, 0 for source and 1 for target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cutmix import PasteDirection, PasteRecord
from .datasets import Domain
from .geometry import ImageSize

LABEL_SOURCE = 0
LABEL_TARGET = 1


def domain_label(domain: Domain) -> int:
    return LABEL_SOURCE if domain == Domain.SOURCE else LABEL_TARGET


def pasted_domain(direction: PasteDirection) -> Domain:
    """Domain of the content a record pastes (not the destination)."""
    if direction == PasteDirection.TARGET_INTO_SOURCE:
        return Domain.TARGET
    return Domain.SOURCE


def grid_shape(image_size: ImageSize, stride: int) -> tuple[int, int]:
    """(rows, cols) of the label grid for an image at a given stride."""
    if stride < 1:
        raise ValueError(f"stride must be at least 1, got {stride}")
    return (
        math.ceil(image_size.height / stride),
        math.ceil(image_size.width / stride),
    )


@dataclass(frozen=True, eq=False)
class DomainLabelMap:
    """Grid of {0, 1} domain labels covering an image at feature stride."""

    cells: np.ndarray
    stride: int
    image_size: ImageSize
    domain: Domain

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be at least 1, got {self.stride}")
        expected = grid_shape(self.image_size, self.stride)
        if self.cells.shape != expected:
            raise ValueError(
                f"cells shape {self.cells.shape} does not match grid {expected} for "
                f"{self.image_size.width}x{self.image_size.height} at stride {self.stride}"
            )
        if self.cells.dtype != np.uint8:
            raise ValueError(f"cells must be uint8, got {self.cells.dtype}")
        if not np.isin(self.cells, (LABEL_SOURCE, LABEL_TARGET)).all():
            raise ValueError("cells must contain only 0 and 1")
        self.cells.setflags(write=False)


def base_label_map(domain: Domain, image_size: ImageSize, stride: int = 16) -> DomainLabelMap:
    """Uniform label map before any pasting: all 0 (source) or all 1 (target)."""
    shape = grid_shape(image_size, stride)
    cells = np.full(shape, domain_label(domain), dtype=np.uint8)
    return DomainLabelMap(cells, stride, image_size, domain)


def switch_labels(label_map: DomainLabelMap, records: Sequence[PasteRecord]) -> DomainLabelMap:
    """Relabel every cell whose tile intersects a pasted rectangle.

    The affected column span of a rect at (x, y, w, h) is
    [floor(x/stride), ceil((x+w)/stride)) and rows follow the same rule, so
    any cell with positive-area contact is switched. Cells are set, not
    toggled: duplicate or overlapping records are idempotent.
    """
    stride = label_map.stride
    cells = np.array(label_map.cells)
    for i, rec in enumerate(records):
        if not label_map.image_size.contains(rec.dst_rect):
            raise ValueError(
                f"record {i}: dst_rect ({rec.dst_rect.x},{rec.dst_rect.y},"
                f"{rec.dst_rect.w},{rec.dst_rect.h}) lies outside the labeled image "
                f"{label_map.image_size.width}x{label_map.image_size.height}"
            )
        content = pasted_domain(rec.direction)
        if content == label_map.domain:
            raise ValueError(
                f"record {i}: direction {rec.direction.value} does not paste into a "
                f"{label_map.domain.value}-domain image"
            )
        r = rec.dst_rect
        c0, c1 = r.x // stride, -(-r.x2 // stride)
        r0, r1 = r.y // stride, -(-r.y2 // stride)
        cells[r0:r1, c0:c1] = domain_label(content)
    return DomainLabelMap(cells, stride, label_map.image_size, label_map.domain)
