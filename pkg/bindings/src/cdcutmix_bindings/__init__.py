"""Array-level bindings for driving the cdcutmix engine from a training loop.

Everything crosses the boundary as plain numpy arrays by copy: inputs are
never mutated and every returned array is owned by the caller. No files
are touched, so the functions are safe to call inside a data-loading hot
path. A call with the same (inputs, config, seed) reproduces, element for
element, what the cdcutmix CLI writes to disk for the matching iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cdcutmix import (
    AnnotatedImage,
    BatchSample,
    BBox,
    Domain,
    DomainLabelMap,
    ImageSize,
    PasteDirection,
    PasteRecord,
    PasteStrategy,
    PredictedDomainMap,
    SeededStream,
    adversarial_loss,
    augment_pair,
    base_label_map,
    switch_labels,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentConfig",
    "BoundBatch",
    "bound_adversarial_loss",
    "bound_augment_pair",
    "bound_switch_labels",
    "__version__",
]


@dataclass(frozen=True)
class AugmentConfig:
    """Paste strategy plus label-map stride, as plain values."""

    gamma: float = 0.25
    position: str = "fixed"
    scaling: str = "fixed"
    scale_min: float = 0.7
    scale_max: float = 1.3
    max_attempts: int = 50
    min_box_side: int = 16
    jitter: int = 0
    stride: int = 16

    def strategy(self) -> PasteStrategy:
        return PasteStrategy(
            position=self.position,
            scaling=self.scaling,
            scale_min=self.scale_min,
            scale_max=self.scale_max,
            gamma=self.gamma,
            max_attempts=self.max_attempts,
            min_box_side=self.min_box_side,
            jitter=self.jitter,
        )


@dataclass
class BoundBatch:
    """One augmented pair as caller-owned arrays.

    Box arrays are N x 5 int64 rows of (x, y, w, h, class index); label
    maps are Hf x Wf uint8 grids of {0, 1} at the configured stride.
    """

    augmented_source_pixels: np.ndarray
    augmented_target_pixels: np.ndarray
    source_boxes: np.ndarray
    target_boxes: np.ndarray
    source_label_map: np.ndarray
    target_label_map: np.ndarray


def _boxes_from_array(name: str, raw) -> tuple[BBox, ...]:
    arr = np.asarray(raw)
    if arr.size == 0:
        return ()
    if arr.ndim != 2 or arr.shape[1] != 5:
        raise ValueError(
            f"{name} boxes must be an N x 5 array of (x, y, w, h, class), got shape {arr.shape}"
        )
    boxes = []
    for i, row in enumerate(arr.tolist()):
        if any(float(v) != int(v) for v in row):
            raise ValueError(f"{name} box row {i}: values must be integers, got {row}")
        try:
            boxes.append(BBox(int(row[0]), int(row[1]), int(row[2]), int(row[3]), int(row[4])))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"{name} box row {i}: {exc}") from exc
    return tuple(boxes)


def _item_from_arrays(name: str, item, domain: Domain) -> AnnotatedImage:
    try:
        pixels, raw_boxes = item
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name} item must be a (pixels, boxes) pair") from exc
    pixels = np.array(np.asarray(pixels), dtype=np.uint8)  # private copy
    boxes = _boxes_from_array(name, raw_boxes)
    try:
        return AnnotatedImage(name, pixels, boxes, domain)
    except ValueError as exc:
        raise ValueError(f"{name} item: {exc}") from exc


def _boxes_to_array(boxes) -> np.ndarray:
    return np.array(
        [[b.x, b.y, b.w, b.h, b.class_id] for b in boxes], dtype=np.int64
    ).reshape(-1, 5)


def bound_augment_pair(
    source_item, target_item, config: AugmentConfig = AugmentConfig(), seed: int = 0
) -> BoundBatch:
    """Run one paste-exchange iteration entirely in memory.

    `source_item` and `target_item` are (pixels, boxes) pairs: an HxWxC
    uint8 array with C in (1, 3), and an N x 5 integer array. `seed` is
    the iteration's stream seed; feeding `cdcutmix.iteration_seed(master,
    index)` reproduces the CLI run with master seed `master` at iteration
    `index` exactly.
    """
    source = _item_from_arrays("source", source_item, Domain.SOURCE)
    target = _item_from_arrays("target", target_item, Domain.TARGET)
    sample = BatchSample(source, target, 0)
    aug_source, aug_target, into_source, into_target = augment_pair(
        sample, config.strategy(), SeededStream(seed)
    )
    source_map = switch_labels(
        base_label_map(Domain.SOURCE, aug_source.size, config.stride), into_source
    )
    target_map = switch_labels(
        base_label_map(Domain.TARGET, aug_target.size, config.stride), into_target
    )
    return BoundBatch(
        augmented_source_pixels=np.array(aug_source.pixels),
        augmented_target_pixels=np.array(aug_target.pixels),
        source_boxes=_boxes_to_array(aug_source.boxes),
        target_boxes=_boxes_to_array(aug_target.boxes),
        source_label_map=np.array(source_map.cells),
        target_label_map=np.array(target_map.cells),
    )


def bound_switch_labels(
    domain: str, image_height: int, image_width: int, pasted_rects, stride: int = 16
) -> np.ndarray:
    """Label grid for an image of `domain` with regions pasted from the
    other domain.

    `pasted_rects` is an N x 4 integer array of (x, y, w, h) rectangles in
    pixel coordinates; the returned Hf x Wf uint8 grid holds 0 for source
    and 1 for target content.
    """
    dom = Domain(domain)
    direction = (
        PasteDirection.TARGET_INTO_SOURCE if dom == Domain.SOURCE
        else PasteDirection.SOURCE_INTO_TARGET
    )
    arr = np.asarray(pasted_rects)
    if arr.size == 0:
        rects: list[BBox] = []
    elif arr.ndim == 2 and arr.shape[1] == 4:
        rects = []
        for i, row in enumerate(arr.tolist()):
            if any(float(v) != int(v) for v in row):
                raise ValueError(f"rect row {i}: values must be integers, got {row}")
            try:
                rects.append(BBox(int(row[0]), int(row[1]), int(row[2]), int(row[3])))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"rect row {i}: {exc}") from exc
    else:
        raise ValueError(f"pasted_rects must be an N x 4 array, got shape {arr.shape}")
    records = [
        PasteRecord("other", BBox(0, 0, r.w, r.h, r.class_id), r, 1.0, direction)
        for r in rects
    ]
    label_map = switch_labels(
        base_label_map(dom, ImageSize(image_width, image_height), stride), records
    )
    return np.array(label_map.cells)


def bound_adversarial_loss(
    pred, labels, stride: int = 16, mean: bool = False
) -> tuple[float, np.ndarray]:
    """Adversarial loss and prediction gradient from bare grids.

    `pred` is an Hf x Wf float array in [0, 1]; `labels` an Hf x Wf array
    of {0, 1}. Returns (loss, grad) with grad as a caller-owned array.
    """
    label_arr = np.asarray(labels)
    if label_arr.ndim != 2:
        raise ValueError(f"labels must be a 2-D grid, got shape {label_arr.shape}")
    rows, cols = label_arr.shape
    # synthetic extent whose grid at this stride is exactly (rows, cols)
    size = ImageSize(cols * stride, rows * stride)
    label_map = DomainLabelMap(
        label_arr.astype(np.uint8), stride, size, Domain.SOURCE
    )
    pred_map = PredictedDomainMap(np.asarray(pred, dtype=np.float64), size, stride)
    loss, grad = adversarial_loss(pred_map, label_map, mean=mean)
    return loss, np.array(grad)
