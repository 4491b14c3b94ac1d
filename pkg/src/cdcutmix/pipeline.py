"""End-to-end augmentation runs and artifact verification.

A run emits, per iteration, the two augmented images (PNG), the merged
annotations (JSON), the paste-record sidecars (JSON), and the two domain
label maps (PGM), plus a manifest with a config echo and content hashes.
Iterations derive their random streams from (seed, iteration index), so
artifact bytes are identical no matter how many workers execute them or
where the output directory lives.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image

from .cutmix import PasteDirection, PasteRecord, PasteStrategy, augment_pair
from .datasets import (
    AnnotatedImage,
    BatchSample,
    Dataset,
    Domain,
    load_annotations,
    pair_batches,
    resize_to_training,
    subsample,
)
from .domain_labels import base_label_map, grid_shape, switch_labels
from .geometry import BBox, ImageSize
from .pgm import read_pgm, write_pgm
from .seeding import SeededStream, derive_seed

MANIFEST_NAME = "manifest.json"
ITERATIONS_DIR = "iterations"
LABEL_PGM_SCALE = 255  # cell value 1 -> sample 255


@dataclass(frozen=True)
class PipelineConfig:
    """Everything that determines one augmentation run."""

    source_images: Path
    source_ann: Path
    target_images: Path
    target_ann: Path
    out_dir: Path
    epoch_length: int
    strategy: PasteStrategy = PasteStrategy()
    stride: int = 16
    target_fraction: Fraction = Fraction(1)
    seed: int = 0
    resize: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("source_images", "source_ann", "target_images", "target_ann", "out_dir"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        object.__setattr__(self, "target_fraction", Fraction(self.target_fraction))
        if self.epoch_length < 0:
            raise ValueError("epoch_length must be non-negative")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if not 0 < self.target_fraction <= 1:
            raise ValueError(f"target_fraction must be in (0, 1], got {self.target_fraction}")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def validate_paths(self) -> None:
        for name in ("source_images", "target_images"):
            path = getattr(self, name)
            if not path.is_dir():
                raise FileNotFoundError(f"{name} is not a directory: {path}")
        for name in ("source_ann", "target_ann"):
            path = getattr(self, name)
            if not path.is_file():
                raise FileNotFoundError(f"{name} is not a file: {path}")


def iteration_seed(master_seed: int, iteration_index: int) -> int:
    """Seed of the random stream feeding one iteration's paste exchange."""
    return derive_seed(master_seed, "iteration", iteration_index)


def subsample_seed(master_seed: int) -> int:
    return derive_seed(master_seed, "subsample")


def pairing_seed(master_seed: int) -> int:
    return derive_seed(master_seed, "pairing")


def config_echo(config: PipelineConfig) -> dict:
    """Manifest echo of the semantically relevant config.

    out_dir and workers are deliberately omitted: neither influences the
    artifact bytes, and including them would break byte-identity between
    runs that differ only in output location or parallelism.
    """
    strategy = config.strategy
    return {
        "source_images": str(config.source_images),
        "source_ann": str(config.source_ann),
        "target_images": str(config.target_images),
        "target_ann": str(config.target_ann),
        "epoch_length": config.epoch_length,
        "stride": config.stride,
        "target_fraction": str(config.target_fraction),
        "seed": config.seed,
        "resize": config.resize,
        "strategy": {
            "position": strategy.position.value,
            "scaling": strategy.scaling.value,
            "scale_min": strategy.scale_min,
            "scale_max": strategy.scale_max,
            "gamma": strategy.gamma,
            "max_attempts": strategy.max_attempts,
            "min_box_side": strategy.min_box_side,
            "jitter": strategy.jitter,
        },
    }


def _strategy_from_echo(echo: dict) -> PasteStrategy:
    s = echo["strategy"]
    return PasteStrategy(
        position=s["position"],
        scaling=s["scaling"],
        scale_min=s["scale_min"],
        scale_max=s["scale_max"],
        gamma=s["gamma"],
        max_attempts=s["max_attempts"],
        min_box_side=s["min_box_side"],
        jitter=s["jitter"],
    )


def _encode_png(pixels: np.ndarray) -> bytes:
    img = Image.fromarray(pixels[:, :, 0] if pixels.shape[2] == 1 else pixels)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _json_bytes(doc) -> bytes:
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _box_json(box: BBox, class_names: tuple[str, ...]) -> dict:
    return {"x": box.x, "y": box.y, "w": box.w, "h": box.h, "class": class_names[box.class_id]}


def _image_entry(item: AnnotatedImage, file_name: str, class_names: tuple[str, ...]) -> dict:
    return {
        "id": item.image_id,
        "file": file_name,
        "width": item.size.width,
        "height": item.size.height,
        "domain": item.domain.value,
        "boxes": [_box_json(b, class_names) for b in item.boxes],
    }


def _record_json(rec: PasteRecord, class_names: tuple[str, ...]) -> dict:
    return {
        "src_image_id": rec.src_image_id,
        "src_box": _box_json(rec.src_box, class_names),
        "dst_rect": {
            "x": rec.dst_rect.x,
            "y": rec.dst_rect.y,
            "w": rec.dst_rect.w,
            "h": rec.dst_rect.h,
        },
        "scale_factor": rec.scale_factor,
        "direction": rec.direction.value,
    }


def _record_from_json(doc: dict, class_index: dict[str, int]) -> PasteRecord:
    src = doc["src_box"]
    class_id = class_index[src["class"]]
    src_box = BBox(src["x"], src["y"], src["w"], src["h"], class_id)
    d = doc["dst_rect"]
    dst_rect = BBox(d["x"], d["y"], d["w"], d["h"], class_id)
    return PasteRecord(
        doc["src_image_id"], src_box, dst_rect, doc["scale_factor"], doc["direction"]
    )


def _label_pgm_bytes(cells: np.ndarray) -> bytes:
    return write_pgm(cells.astype(np.uint16) * LABEL_PGM_SCALE, maxval=255)


def _run_iteration(
    config: PipelineConfig, sample: BatchSample, class_names: tuple[str, ...]
) -> dict[str, str]:
    index = sample.iteration_index
    rng = SeededStream(iteration_seed(config.seed, index))
    aug_source, aug_target, into_source, into_target = augment_pair(
        sample, config.strategy, rng
    )
    source_map = switch_labels(
        base_label_map(Domain.SOURCE, aug_source.size, config.stride), into_source
    )
    target_map = switch_labels(
        base_label_map(Domain.TARGET, aug_target.size, config.stride), into_target
    )

    rel_dir = f"{ITERATIONS_DIR}/{index:06d}"
    out_dir = config.out_dir / ITERATIONS_DIR / f"{index:06d}"
    out_dir.mkdir(parents=True, exist_ok=True)

    annotations = {
        "images": [
            _image_entry(aug_source, "source.png", class_names),
            _image_entry(aug_target, "target.png", class_names),
        ],
        "classes": list(class_names),
    }
    records = {
        "into_source": [_record_json(r, class_names) for r in into_source],
        "into_target": [_record_json(r, class_names) for r in into_target],
    }
    files = {
        "source.png": _encode_png(aug_source.pixels),
        "target.png": _encode_png(aug_target.pixels),
        "annotations.json": _json_bytes(annotations),
        "records.json": _json_bytes(records),
        "source_labels.pgm": _label_pgm_bytes(source_map.cells),
        "target_labels.pgm": _label_pgm_bytes(target_map.cells),
    }
    hashes = {}
    for name, data in files.items():
        _atomic_write(out_dir / name, data)
        hashes[f"{rel_dir}/{name}"] = hashlib.sha256(data).hexdigest()
    return hashes


def run_augment(config: PipelineConfig) -> dict:
    """Execute one augmentation run; returns the manifest that was written."""
    config.validate_paths()
    source = load_annotations(config.source_images, config.source_ann, Domain.SOURCE)
    target = load_annotations(config.target_images, config.target_ann, Domain.TARGET)
    if source.class_names != target.class_names:
        raise ValueError(
            f"source and target class lists differ: {list(source.class_names)} vs "
            f"{list(target.class_names)}"
        )
    if config.target_fraction != 1:
        target = subsample(target, config.target_fraction, subsample_seed(config.seed))
    if config.resize:
        source = Dataset(
            tuple(resize_to_training(it) for it in source.items), source.domain, source.class_names
        )
        target = Dataset(
            tuple(resize_to_training(it) for it in target.items), target.domain, target.class_names
        )
    samples = pair_batches(source, target, config.epoch_length, pairing_seed(config.seed))

    out_dir = config.out_dir
    if out_dir.exists() and any(out_dir.iterdir()):
        raise FileExistsError(f"output directory is not empty: {out_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    artifacts: dict[str, str] = {}
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        for hashes in pool.map(
            lambda s: _run_iteration(config, s, source.class_names), samples
        ):
            artifacts.update(hashes)

    manifest = {
        "config": config_echo(config),
        "classes": list(source.class_names),
        "iteration_count": config.epoch_length,
        "artifacts": dict(sorted(artifacts.items())),
    }
    _atomic_write(out_dir / MANIFEST_NAME, _json_bytes(manifest))
    return manifest


@dataclass(frozen=True)
class Issue:
    path: str
    check: str
    message: str


@dataclass
class VerifyReport:
    ok: bool
    issues: list[Issue] = field(default_factory=list)
    files_checked: int = 0
    iterations_checked: int = 0


def _expected_cells(
    image_size: ImageSize, stride: int, records: list[PasteRecord], domain: Domain
) -> np.ndarray:
    """Oracle label grid: a cell switches iff its tile overlaps a paste.

    Uses direct interval intersection per cell axis rather than the index
    formula the production path uses, so the two can disagree if either is
    wrong.
    """
    rows, cols = grid_shape(image_size, stride)
    base = 0 if domain == Domain.SOURCE else 1
    cells = np.full((rows, cols), base, dtype=np.uint8)
    col_start = np.arange(cols) * stride
    row_start = np.arange(rows) * stride
    for rec in records:
        r = rec.dst_rect
        cover_c = (np.minimum(col_start + stride, r.x2) - np.maximum(col_start, r.x)) > 0
        cover_r = (np.minimum(row_start + stride, r.y2) - np.maximum(row_start, r.y)) > 0
        cells[np.ix_(cover_r, cover_c)] = 1 - base
    return cells


def _verify_side(
    base_rel: str,
    domain: Domain,
    entry: dict,
    records: list[PasteRecord],
    run_dir: Path,
    strategy: PasteStrategy,
    stride: int,
    class_names: list[str],
    issues: list[Issue],
) -> None:
    from .geometry import overlap_ratio  # local import keeps module top uncluttered

    name = domain.value
    png_rel = f"{base_rel}/{name}.png"
    pgm_rel = f"{base_rel}/{name}_labels.pgm"
    ann_rel = f"{base_rel}/annotations.json"

    width, height = entry["width"], entry["height"]
    size = ImageSize(width, height)

    boxes: list[BBox] = []
    for i, raw in enumerate(entry["boxes"]):
        if raw["class"] not in class_names:
            issues.append(Issue(ann_rel, "class", f"{name} box {i}: unknown class {raw['class']!r}"))
            return
        try:
            box = BBox(raw["x"], raw["y"], raw["w"], raw["h"], class_names.index(raw["class"]))
        except ValueError as exc:
            issues.append(Issue(ann_rel, "box", f"{name} box {i}: {exc}"))
            return
        if not size.contains(box):
            issues.append(
                Issue(ann_rel, "box-bounds", f"{name} box {i} exceeds image bounds {width}x{height}")
            )
        boxes.append(box)

    png_path = run_dir / png_rel
    if png_path.is_file():
        with Image.open(png_path) as img:
            if img.size != (width, height):
                issues.append(
                    Issue(
                        png_rel,
                        "image-size",
                        f"file is {img.size[0]}x{img.size[1]}, annotations declare {width}x{height}",
                    )
                )
    else:
        issues.append(Issue(png_rel, "missing", "file not found"))

    expected_direction = (
        PasteDirection.TARGET_INTO_SOURCE if domain == Domain.SOURCE
        else PasteDirection.SOURCE_INTO_TARGET
    )
    k = len(records)
    originals = boxes[: len(boxes) - k]
    appended = boxes[len(boxes) - k :]
    protected = list(originals)
    for i, rec in enumerate(records):
        rec_name = f"{name} record {i}"
        if rec.direction != expected_direction:
            issues.append(Issue(f"{base_rel}/records.json", "direction", f"{rec_name}: {rec.direction.value}"))
        if not size.contains(rec.dst_rect):
            issues.append(Issue(f"{base_rel}/records.json", "rect-bounds", f"{rec_name}: dst_rect outside image"))
            continue
        if min(rec.src_box.w, rec.src_box.h) <= strategy.min_box_side:
            issues.append(
                Issue(f"{base_rel}/records.json", "size-gate", f"{rec_name}: source box side <= {strategy.min_box_side}")
            )
        if strategy.scaling.value == "fixed":
            if rec.scale_factor != 1.0:
                issues.append(
                    Issue(f"{base_rel}/records.json", "scale", f"{rec_name}: scale {rec.scale_factor} with fixed scaling")
                )
        elif not strategy.scale_min <= rec.scale_factor <= strategy.scale_max:
            issues.append(
                Issue(f"{base_rel}/records.json", "scale", f"{rec_name}: scale {rec.scale_factor} outside range")
            )
        worst = max((overlap_ratio(rec.dst_rect, p) for p in protected), default=0.0)
        if worst > strategy.gamma:
            issues.append(
                Issue(
                    f"{base_rel}/records.json",
                    "overlap",
                    f"{rec_name}: overlap ratio {worst:.6f} exceeds gamma {strategy.gamma}",
                )
            )
        protected.append(rec.dst_rect)
        if i < len(appended):
            merged = appended[i]
            if (merged.x, merged.y, merged.w, merged.h, merged.class_id) != (
                rec.dst_rect.x, rec.dst_rect.y, rec.dst_rect.w, rec.dst_rect.h, rec.dst_rect.class_id,
            ):
                issues.append(
                    Issue(ann_rel, "merge", f"{rec_name}: appended box does not match dst_rect")
                )
    if len(appended) != k:
        issues.append(
            Issue(ann_rel, "merge", f"{name}: {k} records but only {len(boxes)} boxes in total")
        )

    pgm_path = run_dir / pgm_rel
    if not pgm_path.is_file():
        issues.append(Issue(pgm_rel, "missing", "file not found"))
        return
    try:
        samples, maxval = read_pgm(pgm_path.read_bytes())
    except ValueError as exc:
        issues.append(Issue(pgm_rel, "parse", str(exc)))
        return
    if maxval != 255 or not np.isin(samples, (0, LABEL_PGM_SCALE)).all():
        issues.append(Issue(pgm_rel, "values", "label map samples must be 0 or 255"))
        return
    cells = (samples // LABEL_PGM_SCALE).astype(np.uint8)
    expected_shape = grid_shape(size, stride)
    if cells.shape != expected_shape:
        issues.append(
            Issue(pgm_rel, "grid-shape", f"grid {cells.shape} does not match {expected_shape}")
        )
        return
    expected = _expected_cells(size, stride, records, domain)
    if not np.array_equal(cells, expected):
        row, col = np.argwhere(cells != expected)[0]
        issues.append(
            Issue(
                pgm_rel,
                "cells",
                f"cell ({row}, {col}) = {cells[row, col]}, expected {expected[row, col]}",
            )
        )


def run_verify(run_dir: Path | str) -> VerifyReport:
    """Re-check every artifact in a run directory against the invariants.

    Failures are collected per file rather than raised, so one corrupt
    artifact does not mask others.
    """
    run_dir = Path(run_dir)
    report = VerifyReport(ok=True)
    manifest_path = run_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        report.issues.append(Issue(MANIFEST_NAME, "missing", "manifest not found"))
        report.ok = False
        return report
    try:
        manifest = json.loads(manifest_path.read_text())
        strategy = _strategy_from_echo(manifest["config"])
        stride = int(manifest["config"]["stride"])
        class_names = list(manifest["classes"])
        artifacts = dict(manifest["artifacts"])
        iteration_count = int(manifest["iteration_count"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        report.issues.append(Issue(MANIFEST_NAME, "parse", f"corrupt manifest: {exc}"))
        report.ok = False
        return report

    for rel, digest in artifacts.items():
        path = run_dir / rel
        if not path.is_file():
            report.issues.append(Issue(rel, "missing", "file listed in manifest not found"))
            continue
        actual = hashlib.sha256(path.read_bytes()).hexdigest()
        report.files_checked += 1
        if actual != digest:
            report.issues.append(Issue(rel, "hash", "content hash does not match manifest"))

    class_index = {name: i for i, name in enumerate(class_names)}
    for index in range(iteration_count):
        base_rel = f"{ITERATIONS_DIR}/{index:06d}"
        ann_rel = f"{base_rel}/annotations.json"
        rec_rel = f"{base_rel}/records.json"
        try:
            annotations = json.loads((run_dir / ann_rel).read_text())
            records_doc = json.loads((run_dir / rec_rel).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            report.issues.append(Issue(base_rel, "parse", f"cannot read iteration artifacts: {exc}"))
            continue
        try:
            entries = {e["domain"]: e for e in annotations["images"]}
            sides = {
                Domain.SOURCE: [ _record_from_json(r, class_index) for r in records_doc["into_source"] ],
                Domain.TARGET: [ _record_from_json(r, class_index) for r in records_doc["into_target"] ],
            }
        except (KeyError, TypeError, ValueError) as exc:
            report.issues.append(Issue(rec_rel, "parse", f"malformed records or annotations: {exc}"))
            continue
        for domain in (Domain.SOURCE, Domain.TARGET):
            if domain.value not in entries:
                report.issues.append(Issue(ann_rel, "schema", f"missing {domain.value} image entry"))
                continue
            _verify_side(
                base_rel, domain, entries[domain.value], sides[domain],
                run_dir, strategy, stride, class_names, report.issues,
            )
        report.iterations_checked += 1

    report.ok = not report.issues
    return report
