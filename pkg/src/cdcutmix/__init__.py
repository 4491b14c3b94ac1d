"""Deterministic cross-domain object CutMix augmentation engine.

Pastes ground-truth object crops between a source-domain and a
target-domain dataset under an overlap-rejection rule, merges the
annotations, emits stride-aligned domain identification label maps, and
provides the matching adversarial / total loss pieces as pure functions.
"""

from .cutmix import (
    PasteDirection,
    PastePlan,
    PasteRecord,
    PasteStrategy,
    Position,
    Scaling,
    SkipReason,
    apply_pastes,
    augment_pair,
    plan_pastes,
)
from .datasets import (
    AnnotatedImage,
    AnnotationError,
    BatchSample,
    Dataset,
    Domain,
    load_annotations,
    pair_batches,
    resize_to_training,
    subsample,
    training_size,
)
from .domain_labels import DomainLabelMap, base_label_map, grid_shape, switch_labels
from .geometry import BBox, ImageSize, clamp_to_image, intersect_area, overlap_ratio
from .losses import (
    EPSILON,
    LossBreakdown,
    PredictedDomainMap,
    adversarial_loss,
    total_loss,
)
from .pipeline import (
    PipelineConfig,
    VerifyReport,
    iteration_seed,
    run_augment,
    run_verify,
)
from .seeding import SeededStream, derive_seed

__version__ = "0.1.0"

__all__ = [
    "AnnotatedImage",
    "AnnotationError",
    "BBox",
    "BatchSample",
    "Dataset",
    "Domain",
    "DomainLabelMap",
    "EPSILON",
    "ImageSize",
    "LossBreakdown",
    "PasteDirection",
    "PastePlan",
    "PasteRecord",
    "PasteStrategy",
    "PipelineConfig",
    "Position",
    "PredictedDomainMap",
    "Scaling",
    "SeededStream",
    "SkipReason",
    "VerifyReport",
    "adversarial_loss",
    "apply_pastes",
    "augment_pair",
    "base_label_map",
    "clamp_to_image",
    "derive_seed",
    "grid_shape",
    "intersect_area",
    "iteration_seed",
    "load_annotations",
    "overlap_ratio",
    "pair_batches",
    "plan_pastes",
    "resize_to_training",
    "run_augment",
    "run_verify",
    "subsample",
    "switch_labels",
    "total_loss",
    "training_size",
    "__version__",
]
