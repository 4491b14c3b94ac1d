import math
import random

import numpy as np
import pytest

from cdcutmix import (
    Domain,
    DomainLabelMap,
    ImageSize,
    LossBreakdown,
    PredictedDomainMap,
    adversarial_loss,
    total_loss,
)
from cdcutmix.losses import EPSILON


def make_maps(values, labels, stride=16):
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.uint8)
    rows, cols = values.shape
    size = ImageSize(cols * stride, rows * stride)
    return (
        PredictedDomainMap(values, size, stride),
        DomainLabelMap(labels, stride, size, Domain.SOURCE),
    )


def scalar_sum_oracle(values, labels):
    """Per-cell reference: clamp, take both log terms, sum exactly."""
    terms = []
    for p, d in zip(np.ravel(values).tolist(), np.ravel(labels).tolist()):
        p = min(max(p, EPSILON), 1.0 - EPSILON)
        terms.append(d * math.log(p) + (1 - d) * math.log(1.0 - p))
    return -math.fsum(terms)


class TestAdversarialLoss:
    def test_symmetric_point(self):
        pred, labels = make_maps([[0.5]], [[0]])
        loss, grad = adversarial_loss(pred, labels)
        assert abs(loss - math.log(2)) < 1e-12
        assert grad.shape == (1, 1)
        assert abs(grad[0, 0] - 2.0) < 1e-12

    def test_perfect_prediction_limit(self):
        pred, labels = make_maps([[1.0 - EPSILON]], [[1]])
        loss, grad = adversarial_loss(pred, labels)
        assert 0.0 < loss < 2e-7
        assert abs(grad[0, 0] + 1.0) < 1e-6

    def test_two_by_two_matches_scalar_sum(self):
        values = [[0.2, 0.8], [0.4, 0.9]]
        labels = [[0, 1], [1, 0]]
        pred, label_map = make_maps(values, labels)
        loss, _ = adversarial_loss(pred, label_map)
        assert abs(loss - scalar_sum_oracle(values, labels)) < 1e-12

    def test_saturated_inputs_are_clamped(self):
        pred, labels = make_maps([[0.0, 1.0]], [[1, 0]])
        loss, grad = adversarial_loss(pred, labels)
        assert math.isfinite(loss)
        assert np.isfinite(grad).all()
        assert loss == pytest.approx(2 * -math.log(EPSILON), rel=1e-9)

    def test_shape_mismatch_rejected(self):
        pred, _ = make_maps([[0.5]], [[0]])
        _, labels = make_maps([[0.5, 0.5]], [[0, 0]])
        with pytest.raises(ValueError, match="does not match"):
            adversarial_loss(pred, labels)

    def test_geometry_mismatch_rejected(self):
        pred, _ = make_maps([[0.5]], [[0]], stride=16)
        _, labels = make_maps([[0.5]], [[0]], stride=8)
        with pytest.raises(ValueError, match="different images"):
            adversarial_loss(pred, labels)

    def test_label_prediction_swap_invariance(self):
        rng = random.Random(5)
        for _ in range(50):
            rows, cols = rng.randint(1, 8), rng.randint(1, 8)
            values = np.array(
                [[rng.uniform(0.01, 0.99) for _ in range(cols)] for _ in range(rows)]
            )
            labels = np.array(
                [[rng.randint(0, 1) for _ in range(cols)] for _ in range(rows)], dtype=np.uint8
            )
            pred_a, lab_a = make_maps(values, labels)
            pred_b, lab_b = make_maps(1.0 - values, 1 - labels)
            loss_a, _ = adversarial_loss(pred_a, lab_a)
            loss_b, _ = adversarial_loss(pred_b, lab_b)
            # 1 - (1 - p) re-rounds, so equality holds only up to float noise
            assert math.isclose(loss_a, loss_b, rel_tol=1e-12, abs_tol=1e-12)

    def test_loss_nonnegative_and_small_when_confident(self):
        rng = random.Random(9)
        for _ in range(20):
            rows, cols = rng.randint(1, 6), rng.randint(1, 6)
            values = np.array(
                [[rng.uniform(0.0, 1.0) for _ in range(cols)] for _ in range(rows)]
            )
            labels = np.array(
                [[rng.randint(0, 1) for _ in range(cols)] for _ in range(rows)], dtype=np.uint8
            )
            pred, lab = make_maps(values, labels)
            loss, _ = adversarial_loss(pred, lab)
            assert loss >= 0.0
        # cells predicting their labels at the clamp boundary
        pred, lab = make_maps([[1.0 - EPSILON, EPSILON]], [[1, 0]])
        loss, _ = adversarial_loss(pred, lab)
        assert loss <= 2 * 1.1e-7

    def test_gradient_matches_finite_differences(self):
        rng = random.Random(77)
        step = 1e-6
        for _ in range(10):
            rows, cols = rng.randint(1, 8), rng.randint(1, 8)
            values = np.array(
                [[rng.uniform(0.01, 0.99) for _ in range(cols)] for _ in range(rows)]
            )
            labels = np.array(
                [[rng.randint(0, 1) for _ in range(cols)] for _ in range(rows)], dtype=np.uint8
            )
            pred, lab = make_maps(values, labels)
            _, grad = adversarial_loss(pred, lab)
            for r in range(rows):
                for c in range(cols):
                    up = values.copy()
                    up[r, c] += step
                    down = values.copy()
                    down[r, c] -= step
                    loss_up, _ = adversarial_loss(make_maps(up, labels)[0], lab)
                    loss_down, _ = adversarial_loss(make_maps(down, labels)[0], lab)
                    numeric = (loss_up - loss_down) / (2 * step)
                    assert abs(numeric - grad[r, c]) <= 1e-4 * max(1.0, abs(grad[r, c]))

    def test_mean_reduction_flag(self):
        values = [[0.2, 0.8], [0.4, 0.9]]
        labels = [[0, 1], [1, 0]]
        pred, lab = make_maps(values, labels)
        loss_sum, grad_sum = adversarial_loss(pred, lab)
        loss_mean, grad_mean = adversarial_loss(pred, lab, mean=True)
        assert loss_mean == pytest.approx(loss_sum / 4)
        assert np.allclose(grad_mean, grad_sum / 4)


class TestPredictedDomainMap:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="in \\[0, 1\\]"):
            make_maps([[1.5]], [[0]])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="finite"):
            make_maps([[math.nan]], [[0]])

    def test_rejects_wrong_shape(self):
        with pytest.raises(ValueError, match="does not match grid"):
            PredictedDomainMap(np.full((2, 2), 0.5), ImageSize(64, 64), 16)


class TestTotalLoss:
    def test_reference_values(self):
        out = total_loss(1.0, 2.0, 3.0, 4.0, 0.1)
        assert out.total == 3.7
        assert (out.det_source, out.det_target) == (1.0, 2.0)
        assert (out.adv_source, out.adv_target, out.lambda_adv) == (3.0, 4.0, 0.1)

    def test_zero_lambda_disables_adversarial_term(self):
        rng = random.Random(1)
        for _ in range(20):
            x, y = rng.uniform(-50, 50), rng.uniform(-50, 50)
            assert total_loss(0.0, 0.0, x, y, 0.0).total == 0.0

    def test_zero_adversarial_reduces_to_detection(self):
        out = total_loss(1.25, 2.5, 0.0, 0.0, 0.3)
        assert out.total == 1.25 + 2.5

    def test_default_lambda(self):
        assert total_loss(0.0, 0.0, 1.0, 1.0).lambda_adv == 0.1

    def test_invariant_holds(self):
        out = total_loss(0.5, 1.5, -2.0, 3.0, 0.25)
        assert out.total == out.det_source + out.det_target + out.lambda_adv * (
            out.adv_source + out.adv_target
        )

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            total_loss(-1.0, 0.0, 0.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            total_loss(0.0, 0.0, 0.0, 0.0, -0.1)

    def test_breakdown_total_not_settable(self):
        out = LossBreakdown(1.0, 1.0, 1.0, 1.0, 0.5)
        assert out.total == 3.0
