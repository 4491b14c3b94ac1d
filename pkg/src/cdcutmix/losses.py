"""Adversarial domain loss over per-cell labels, and the total-loss combiner.

The adversarial term is a summed binary cross-entropy between the
discriminator's per-cell probabilities and the (possibly paste-switched)
domain label map:

    loss = -sum_{h,w} [ d * ln(p) + (1 - d) * ln(1 - p) ]

Predictions are clamped to [EPSILON, 1 - EPSILON] before the logarithms so
the loss stays finite at saturated outputs; the returned gradient is the
derivative of the loss with respect to each clamped prediction. Under the
combined objective (minimized over the feature path, maximized over the
discriminator path) the discriminator ascends this gradient; consumers
implementing the reversal on the feature path flip the sign themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .domain_labels import DomainLabelMap, grid_shape
from .geometry import ImageSize

EPSILON = 1e-7


@dataclass(frozen=True, eq=False)
class PredictedDomainMap:
    """Per-cell domain probabilities paired with a label map's geometry."""

    values: np.ndarray
    image_size: ImageSize
    stride: int

    def __post_init__(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be at least 1, got {self.stride}")
        expected = grid_shape(self.image_size, self.stride)
        if self.values.shape != expected:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {expected}"
            )
        values = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(values).all():
            raise ValueError("prediction values must be finite")
        if (values < 0.0).any() or (values > 1.0).any():
            raise ValueError("prediction values must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        self.values.setflags(write=False)


@dataclass(frozen=True)
class LossBreakdown:
    """Detection and adversarial components with their weighted total."""

    det_source: float
    det_target: float
    adv_source: float
    adv_target: float
    lambda_adv: float
    total: float = field(init=False)

    def __post_init__(self) -> None:
        if self.det_source < 0 or self.det_target < 0:
            raise ValueError("detection losses must be non-negative")
        if self.lambda_adv < 0:
            raise ValueError("lambda_adv must be non-negative")
        object.__setattr__(
            self,
            "total",
            self.det_source + self.det_target
            + self.lambda_adv * (self.adv_source + self.adv_target),
        )


def adversarial_loss(
    pred: PredictedDomainMap, labels: DomainLabelMap, mean: bool = False
) -> tuple[float, np.ndarray]:
    """Summed per-cell binary cross-entropy and its prediction gradient.

    Returns (loss, grad) where grad[h, w] = -d/p + (1-d)/(1-p) evaluated at
    the clamped predictions. With mean=True both are divided by the cell
    count; the default matches the summed formulation.
    """
    if pred.values.shape != labels.cells.shape:
        raise ValueError(
            f"prediction grid {pred.values.shape} does not match label grid "
            f"{labels.cells.shape}"
        )
    if pred.stride != labels.stride or pred.image_size != labels.image_size:
        raise ValueError("prediction and label maps describe different images")
    p = np.clip(pred.values, EPSILON, 1.0 - EPSILON)
    d = labels.cells.astype(np.float64)
    terms = d * np.log(p) + (1.0 - d) * np.log(1.0 - p)
    loss = -math.fsum(terms.ravel().tolist())
    grad = -d / p + (1.0 - d) / (1.0 - p)
    if mean:
        n = p.size
        loss /= n
        grad = grad / n
    return loss, grad


def total_loss(
    det_source: float,
    det_target: float,
    adv_source: float,
    adv_target: float,
    lambda_adv: float = 0.1,
) -> LossBreakdown:
    """Combine detection and adversarial components into the training total."""
    return LossBreakdown(det_source, det_target, adv_source, adv_target, lambda_adv)
