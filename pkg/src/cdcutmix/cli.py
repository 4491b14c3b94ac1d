"""Command-line interface: augment, subsample, verify, loss-check.

Flags mirror the pipeline config one to one; a key = value config file can
supply any of them, with explicit flags taking precedence. On failure a
single machine-readable JSON line is printed to stderr and the exit code
is nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cutmix import PasteStrategy
from .datasets import Domain, load_annotations, subsample
from .domain_labels import DomainLabelMap
from .geometry import ImageSize
from .losses import PredictedDomainMap, adversarial_loss
from .pgm import read_pgm
from .pipeline import PipelineConfig, run_augment, run_verify

_CONFIG_KEYS = {
    "source_images": str,
    "source_ann": str,
    "target_images": str,
    "target_ann": str,
    "out_dir": str,
    "epoch_length": int,
    "gamma": float,
    "position": str,
    "scaling": str,
    "scale_min": float,
    "scale_max": float,
    "max_attempts": int,
    "min_box_side": int,
    "jitter": int,
    "stride": int,
    "target_fraction": Fraction,
    "seed": int,
    "resize": None,  # parsed as a boolean word
    "workers": int,
}

_DEFAULTS = {
    "gamma": 0.25,
    "position": "fixed",
    "scaling": "fixed",
    "scale_min": 0.7,
    "scale_max": 1.3,
    "max_attempts": 50,
    "min_box_side": 16,
    "jitter": 0,
    "stride": 16,
    "target_fraction": Fraction(1),
    "seed": 0,
    "resize": True,
    "workers": 1,
}


class CliError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage mistakes as JSON error lines."""

    def error(self, message):
        _error_line("usage", message)
        raise SystemExit(2)


def _parse_bool(word: str) -> bool:
    lowered = word.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise CliError(f"expected a boolean, got {word!r}")


def parse_config_file(path: Path) -> dict:
    """Parse a key = value file into typed config values."""
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip().strip("\"'")
        if key not in _CONFIG_KEYS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        converter = _CONFIG_KEYS[key]
        try:
            values[key] = _parse_bool(value) if converter is None else converter(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise CliError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _resolve(args: argparse.Namespace, file_values: dict, key: str):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in file_values:
        return file_values[key]
    return _DEFAULTS.get(key)


def _cmd_augment(args: argparse.Namespace) -> int:
    file_values = parse_config_file(Path(args.config)) if args.config else {}

    def pick(key):
        return _resolve(args, file_values, key)

    for key in ("source_images", "source_ann", "target_images", "target_ann", "out_dir"):
        if pick(key) is None:
            raise CliError(f"missing required option --{key.replace('_', '-')}")
    if pick("epoch_length") is None:
        raise CliError("missing required option --epoch-length")

    strategy = PasteStrategy(
        position=pick("position"),
        scaling=pick("scaling"),
        scale_min=pick("scale_min"),
        scale_max=pick("scale_max"),
        gamma=pick("gamma"),
        max_attempts=pick("max_attempts"),
        min_box_side=pick("min_box_side"),
        jitter=pick("jitter"),
    )
    config = PipelineConfig(
        source_images=pick("source_images"),
        source_ann=pick("source_ann"),
        target_images=pick("target_images"),
        target_ann=pick("target_ann"),
        out_dir=pick("out_dir"),
        epoch_length=pick("epoch_length"),
        strategy=strategy,
        stride=pick("stride"),
        target_fraction=Fraction(pick("target_fraction")),
        seed=pick("seed"),
        resize=pick("resize"),
        workers=pick("workers"),
    )
    manifest = run_augment(config)
    print(
        f"augment: wrote {manifest['iteration_count']} iterations "
        f"({len(manifest['artifacts'])} artifacts) to {config.out_dir}"
    )
    return 0


def _cmd_subsample(args: argparse.Namespace) -> int:
    domain = Domain(args.domain)
    dataset = load_annotations(args.images, args.ann, domain)
    kept = subsample(dataset, Fraction(args.fraction), args.seed)
    kept_ids = {item.image_id for item in kept.items}
    doc = json.loads(Path(args.ann).read_text())
    entries = sorted(
        (e for e in doc["images"] if e["id"] in kept_ids), key=lambda e: e["id"]
    )
    out = {"images": entries, "classes": doc["classes"]}
    Path(args.out).write_text(json.dumps(out, sort_keys=True, indent=2) + "\n")
    print(f"subsample: kept {len(entries)} of {len(dataset)} images -> {args.out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    report = run_verify(args.run_dir)
    for issue in report.issues:
        print(f"FAIL {issue.path} [{issue.check}] {issue.message}")
    if report.ok:
        print(
            f"PASS: {report.files_checked} files, "
            f"{report.iterations_checked} iterations checked"
        )
        return 0
    print(f"FAIL: {len(report.issues)} issues found")
    _error_line("verification_failed", f"{len(report.issues)} issues in {args.run_dir}")
    return 1


def _cmd_loss_check(args: argparse.Namespace) -> int:
    pred_samples, pred_maxval = read_pgm(Path(args.pred).read_bytes())
    label_samples, label_maxval = read_pgm(Path(args.labels).read_bytes())
    if label_maxval != 255 or not np.isin(label_samples, (0, 255)).all():
        raise CliError("label map must be a P5 PGM with samples 0 or 255")
    if pred_samples.shape != label_samples.shape:
        raise CliError(
            f"prediction grid {pred_samples.shape} does not match labels {label_samples.shape}"
        )
    rows, cols = label_samples.shape
    size = ImageSize(cols * args.stride, rows * args.stride)
    labels = DomainLabelMap(
        (label_samples // 255).astype(np.uint8), args.stride, size, Domain.SOURCE
    )
    pred = PredictedDomainMap(pred_samples.astype(np.float64) / pred_maxval, size, args.stride)
    loss, _ = adversarial_loss(pred, labels, mean=args.mean)
    print(json.dumps({"loss": loss, "cells": rows * cols, "grid": [rows, cols]}))
    return 0


def _error_line(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="cdcutmix",
        description="Deterministic cross-domain object CutMix augmentation engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    aug = sub.add_parser("augment", help="run a seeded augmentation epoch")
    aug.add_argument("--config", help="key = value config file; flags take precedence")
    aug.add_argument("--source-images", dest="source_images")
    aug.add_argument("--source-ann", dest="source_ann")
    aug.add_argument("--target-images", dest="target_images")
    aug.add_argument("--target-ann", dest="target_ann")
    aug.add_argument("--out-dir", dest="out_dir")
    aug.add_argument("--epoch-length", dest="epoch_length", type=int)
    aug.add_argument("--gamma", type=float)
    aug.add_argument("--position", choices=["fixed", "random"])
    aug.add_argument("--scaling", choices=["fixed", "random"])
    aug.add_argument("--scale-min", dest="scale_min", type=float)
    aug.add_argument("--scale-max", dest="scale_max", type=float)
    aug.add_argument("--max-attempts", dest="max_attempts", type=int)
    aug.add_argument("--min-box-side", dest="min_box_side", type=int)
    aug.add_argument("--jitter", type=int)
    aug.add_argument("--stride", type=int)
    aug.add_argument("--target-fraction", dest="target_fraction", type=Fraction)
    aug.add_argument("--seed", type=int)
    aug.add_argument("--resize", dest="resize", action=argparse.BooleanOptionalAction)
    aug.add_argument("--workers", type=int)
    aug.set_defaults(func=_cmd_augment)

    ss = sub.add_parser("subsample", help="write a seeded subsample of a dataset")
    ss.add_argument("--images", required=True)
    ss.add_argument("--ann", required=True)
    ss.add_argument("--domain", choices=["source", "target"], required=True)
    ss.add_argument("--fraction", required=True)
    ss.add_argument("--seed", type=int, default=0)
    ss.add_argument("--out", required=True)
    ss.set_defaults(func=_cmd_subsample)

    ver = sub.add_parser("verify", help="re-check all invariants of a run directory")
    ver.add_argument("run_dir")
    ver.set_defaults(func=_cmd_verify)

    lc = sub.add_parser("loss-check", help="adversarial loss of a prediction map vs a label map")
    lc.add_argument("--pred", required=True, help="prediction PGM (samples/maxval in [0,1])")
    lc.add_argument("--labels", required=True, help="label map PGM (0 or 255)")
    lc.add_argument("--stride", type=int, default=16)
    lc.add_argument("--mean", action="store_true", help="divide by cell count")
    lc.set_defaults(func=_cmd_loss_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        _error_line(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
