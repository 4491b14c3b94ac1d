"""Annotated-image datasets: loading, training-resolution resize,
seeded subsampling, and source/target batch pairing.

The on-disk annotation schema is a minimal JSON document:

    {"images": [{"id": str, "file": str, "width": int, "height": int,
                 "domain": "source"|"target",
                 "boxes": [{"x": int, "y": int, "w": int, "h": int,
                            "class": str}, ...]}, ...],
     "classes": [str, ...]}

Box classes are names resolved against the `classes` list; in memory a box
carries the class index. Image files are PNG or JPEG, resolved relative to
the images directory.
"""

from __future__ import annotations

import json
import random
import warnings
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from .geometry import BBox, ImageSize, round_half_away
from .imaging import quantize_u8, bilinear_resize
from .seeding import derive_seed

TRAIN_HEIGHT = 600
TRAIN_MAX_WIDTH = 1000

_ALLOWED_DENOMINATORS = (2, 4, 8, 16, 32, 64)


class Domain(str, Enum):
    SOURCE = "source"
    TARGET = "target"


class AnnotationError(ValueError):
    """Raised when an annotation file or record is invalid."""


@dataclass(frozen=True, eq=False)
class AnnotatedImage:
    """A pixel buffer with its ground-truth boxes and domain tag."""

    image_id: str
    pixels: np.ndarray
    boxes: tuple[BBox, ...]
    domain: Domain

    def __post_init__(self) -> None:
        object.__setattr__(self, "boxes", tuple(self.boxes))
        px = self.pixels
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(
                f"image {self.image_id!r}: pixels must be HxWxC with C in (1, 3), "
                f"got shape {px.shape}"
            )
        if px.dtype != np.uint8:
            raise ValueError(f"image {self.image_id!r}: pixels must be uint8, got {px.dtype}")
        size = self.size
        for i, box in enumerate(self.boxes):
            if not size.contains(box):
                raise ValueError(
                    f"image {self.image_id!r}: box {i} "
                    f"({box.x},{box.y},{box.w},{box.h}) exceeds image bounds "
                    f"{size.width}x{size.height}"
                )
        px.setflags(write=False)

    @property
    def size(self) -> ImageSize:
        return ImageSize(self.pixels.shape[1], self.pixels.shape[0])

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of annotated images from one domain.

    Items are kept in lexicographic image_id order so that seeded
    subsampling and pairing are reproducible.
    """

    items: tuple[AnnotatedImage, ...]
    domain: Domain
    class_names: tuple[str, ...]

    def __post_init__(self) -> None:
        items = tuple(sorted(self.items, key=lambda it: it.image_id))
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "class_names", tuple(self.class_names))
        seen: set[str] = set()
        for item in items:
            if item.image_id in seen:
                raise ValueError(f"duplicate image_id {item.image_id!r}")
            seen.add(item.image_id)
            if item.domain != self.domain:
                raise ValueError(
                    f"image {item.image_id!r} has domain {item.domain.value}, "
                    f"dataset is {self.domain.value}"
                )

    def __len__(self) -> int:
        return len(self.items)


@dataclass(frozen=True)
class BatchSample:
    """One training iteration's source/target image pair."""

    source_item: AnnotatedImage
    target_item: AnnotatedImage
    iteration_index: int

    def __post_init__(self) -> None:
        if self.source_item.domain != Domain.SOURCE:
            raise ValueError("source_item must come from the source domain")
        if self.target_item.domain != Domain.TARGET:
            raise ValueError("target_item must come from the target domain")
        if self.iteration_index < 0:
            raise ValueError("iteration_index must be non-negative")


def read_image(path: Path) -> np.ndarray:
    """Decode an image file to an HxWxC uint8 array (C = 1 or 3)."""
    with Image.open(path) as img:
        if img.mode == "L":
            arr = np.asarray(img, dtype=np.uint8)[:, :, np.newaxis]
        elif img.mode == "RGB":
            arr = np.asarray(img, dtype=np.uint8)
        else:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
    return arr


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise AnnotationError(message)


def load_annotations(images_dir: Path | str, annotations_file: Path | str, domain: Domain) -> Dataset:
    """Load and validate one domain's dataset.

    Every box is checked against the declared image dimensions, the class
    vocabulary, and the decoded image itself; any violation is a hard error
    naming the image id and box index.
    """
    images_dir = Path(images_dir)
    annotations_file = Path(annotations_file)
    if not annotations_file.is_file():
        raise AnnotationError(f"annotations file not found: {annotations_file}")
    try:
        doc = json.loads(annotations_file.read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{annotations_file}: invalid JSON: {exc}") from exc

    _require(isinstance(doc, dict), f"{annotations_file}: top level must be an object")
    classes = doc.get("classes")
    _require(
        isinstance(classes, list) and all(isinstance(c, str) for c in classes),
        f"{annotations_file}: 'classes' must be a list of strings",
    )
    _require(len(set(classes)) == len(classes), f"{annotations_file}: duplicate class names")
    class_index = {name: i for i, name in enumerate(classes)}
    entries = doc.get("images")
    _require(isinstance(entries, list), f"{annotations_file}: 'images' must be a list")

    items = []
    for entry in entries:
        _require(isinstance(entry, dict), f"{annotations_file}: image entry must be an object")
        image_id = entry.get("id")
        _require(isinstance(image_id, str) and image_id != "", "image entry missing string 'id'")
        where = f"image {image_id!r}"
        file_name = entry.get("file")
        _require(isinstance(file_name, str), f"{where}: missing string 'file'")
        width = entry.get("width")
        height = entry.get("height")
        _require(
            isinstance(width, int) and isinstance(height, int) and width >= 1 and height >= 1,
            f"{where}: width/height must be positive integers",
        )
        entry_domain = entry.get("domain")
        _require(
            entry_domain in (Domain.SOURCE.value, Domain.TARGET.value),
            f"{where}: domain must be 'source' or 'target'",
        )
        _require(
            entry_domain == domain.value,
            f"{where}: declared domain {entry_domain!r} does not match requested "
            f"{domain.value!r}",
        )
        size = ImageSize(width, height)

        boxes = []
        raw_boxes = entry.get("boxes", [])
        _require(isinstance(raw_boxes, list), f"{where}: 'boxes' must be a list")
        for i, raw in enumerate(raw_boxes):
            _require(isinstance(raw, dict), f"{where}: box {i} must be an object")
            class_name = raw.get("class")
            if class_name not in class_index:
                raise AnnotationError(f"{where}: box {i}: unknown class name {class_name!r}")
            try:
                box = BBox(raw["x"], raw["y"], raw["w"], raw["h"], class_index[class_name])
            except (KeyError, TypeError, ValueError) as exc:
                raise AnnotationError(f"{where}: box {i}: {exc}") from exc
            if not size.contains(box):
                raise AnnotationError(
                    f"{where}: box {i} exceeds image bounds "
                    f"({box.x},{box.y},{box.w},{box.h} in {width}x{height})"
                )
            boxes.append(box)

        image_path = images_dir / file_name
        if not image_path.is_file():
            raise AnnotationError(f"{where}: image file not found: {image_path}")
        pixels = read_image(image_path)
        actual = ImageSize(pixels.shape[1], pixels.shape[0])
        _require(
            actual == size,
            f"{where}: file is {actual.width}x{actual.height}, "
            f"annotations declare {width}x{height}",
        )
        items.append(AnnotatedImage(image_id, pixels, tuple(boxes), domain))

    return Dataset(tuple(items), domain, tuple(classes))


def training_size(size: ImageSize) -> ImageSize:
    """Target dimensions under the training-resolution rule.

    Height is scaled to 600; if that would push the width past 1000, the
    width is pinned to 1000 instead. Aspect ratio is preserved up to
    rounding of the free dimension.
    """
    if size.width * TRAIN_HEIGHT > TRAIN_MAX_WIDTH * size.height:
        new_w = TRAIN_MAX_WIDTH
        new_h = _round_ratio(size.height * TRAIN_MAX_WIDTH, size.width)
    else:
        new_h = TRAIN_HEIGHT
        new_w = _round_ratio(size.width * TRAIN_HEIGHT, size.height)
    return ImageSize(new_w, new_h)


def _round_ratio(num: int, den: int) -> int:
    # floor(num/den + 1/2) in exact integer arithmetic
    return (2 * num + den) // (2 * den)


def resize_to_training(item: AnnotatedImage) -> AnnotatedImage:
    """Rescale an image and its boxes to the training resolution."""
    size = item.size
    new_size = training_size(size)
    if new_size == size:
        return item
    if size.width * TRAIN_HEIGHT > TRAIN_MAX_WIDTH * size.height:
        factor = TRAIN_MAX_WIDTH / size.width
    else:
        factor = TRAIN_HEIGHT / size.height
    pixels = quantize_u8(bilinear_resize(item.pixels, new_size.width, new_size.height))
    boxes = []
    for box in item.boxes:
        w = max(1, round_half_away(box.w * factor))
        h = max(1, round_half_away(box.h * factor))
        x = round_half_away(box.x * factor)
        y = round_half_away(box.y * factor)
        x = min(x, new_size.width - w)
        y = min(y, new_size.height - h)
        boxes.append(BBox(x, y, w, h, box.class_id))
    return AnnotatedImage(item.image_id, pixels, tuple(boxes), item.domain)


def subsample(dataset: Dataset, fraction: Fraction | int, seed: int) -> Dataset:
    """Keep floor(N * fraction) items chosen by a seeded shuffle.

    A fraction of 1 returns the dataset unchanged. The selection is a
    shuffle-then-prefix draw over the stable item order, so it is fully
    determined by (dataset, fraction, seed); subsets drawn at different
    fractions are independent draws, not nested.
    """
    fraction = Fraction(fraction)
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if fraction == 1:
        return dataset
    if fraction.numerator != 1 or fraction.denominator not in _ALLOWED_DENOMINATORS:
        warnings.warn(
            f"unusual target fraction {fraction}; expected 1 or 1/d with d in "
            f"{_ALLOWED_DENOMINATORS}",
            stacklevel=2,
        )
    n = len(dataset)
    keep = n * fraction.numerator // fraction.denominator
    if keep == 0:
        raise ValueError(f"fraction {fraction} too small for dataset of {n} items")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    chosen = [dataset.items[i] for i in order[:keep]]
    return Dataset(tuple(chosen), dataset.domain, dataset.class_names)


def pair_batches(source: Dataset, target: Dataset, epoch_length: int, seed: int) -> list[BatchSample]:
    """Pair one source item with one target item per iteration.

    Each domain is traversed in its own seeded shuffled cycle, reshuffled
    per pass, so the smaller dataset repeats while every item of either
    domain appears once per full pass.
    """
    if epoch_length < 0:
        raise ValueError("epoch_length must be non-negative")
    if epoch_length == 0:
        return []
    if len(source) == 0 or len(target) == 0:
        raise ValueError("cannot pair batches from an empty dataset")
    src_order = _shuffled_cycle(len(source), random.Random(derive_seed(seed, "source")))
    tgt_order = _shuffled_cycle(len(target), random.Random(derive_seed(seed, "target")))
    return [
        BatchSample(source.items[next(src_order)], target.items[next(tgt_order)], i)
        for i in range(epoch_length)
    ]


def _shuffled_cycle(n: int, rng: random.Random) -> Iterator[int]:
    while True:
        order = list(range(n))
        rng.shuffle(order)
        yield from order
