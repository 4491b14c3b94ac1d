import json
import random
from pathlib import Path

import numpy as np
from PIL import Image

from cdcutmix import AnnotatedImage, BBox, Domain


def make_pixels(rng: random.Random, width: int, height: int, channels: int = 3) -> np.ndarray:
    raw = bytes(rng.getrandbits(8) for _ in range(width * height * channels))
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width, channels).copy()


def make_item(
    rng: random.Random,
    image_id: str,
    domain: Domain,
    width: int,
    height: int,
    boxes: list[BBox] = (),
    channels: int = 3,
) -> AnnotatedImage:
    return AnnotatedImage(image_id, make_pixels(rng, width, height, channels), tuple(boxes), domain)


def random_boxes(
    rng: random.Random, width: int, height: int, count: int, max_side: int = 60, n_classes: int = 2
) -> list[BBox]:
    boxes = []
    for _ in range(count):
        w = rng.randint(4, min(max_side, width - 1))
        h = rng.randint(4, min(max_side, height - 1))
        x = rng.randint(0, width - w)
        y = rng.randint(0, height - h)
        boxes.append(BBox(x, y, w, h, rng.randint(0, n_classes - 1)))
    return boxes


def write_png(path: Path, pixels: np.ndarray) -> None:
    img = Image.fromarray(pixels[:, :, 0] if pixels.shape[2] == 1 else pixels)
    img.save(path, format="PNG")


def write_dataset(
    root: Path,
    name: str,
    domain: Domain,
    items: list[AnnotatedImage],
    classes: list[str],
) -> tuple[Path, Path]:
    """Write PNGs plus an annotations file; returns (images_dir, ann_path)."""
    images_dir = root / f"{name}_images"
    images_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for item in items:
        file_name = f"{item.image_id}.png"
        write_png(images_dir / file_name, item.pixels)
        entries.append(
            {
                "id": item.image_id,
                "file": file_name,
                "width": item.size.width,
                "height": item.size.height,
                "domain": item.domain.value,
                "boxes": [
                    {"x": b.x, "y": b.y, "w": b.w, "h": b.h, "class": classes[b.class_id]}
                    for b in item.boxes
                ],
            }
        )
    ann_path = root / f"{name}_annotations.json"
    ann_path.write_text(json.dumps({"images": entries, "classes": classes}, indent=2))
    return images_dir, ann_path


def synthetic_pair_dirs(
    root: Path,
    rng: random.Random,
    n_source: int = 4,
    n_target: int = 4,
    width: int = 64,
    height: int = 48,
    boxes_per_image: int = 2,
    classes: list[str] = ("person", "car"),
) -> dict:
    classes = list(classes)
    source_items = [
        make_item(
            rng, f"src_{i:03d}", Domain.SOURCE, width, height,
            random_boxes(rng, width, height, boxes_per_image, n_classes=len(classes)),
        )
        for i in range(n_source)
    ]
    target_items = [
        make_item(
            rng, f"tgt_{i:03d}", Domain.TARGET, width, height,
            random_boxes(rng, width, height, boxes_per_image, n_classes=len(classes)),
        )
        for i in range(n_target)
    ]
    src_images, src_ann = write_dataset(root, "source", Domain.SOURCE, source_items, classes)
    tgt_images, tgt_ann = write_dataset(root, "target", Domain.TARGET, target_items, classes)
    return {
        "source_images": src_images,
        "source_ann": src_ann,
        "target_images": tgt_images,
        "target_ann": tgt_ann,
        "source_items": source_items,
        "target_items": target_items,
        "classes": classes,
    }
