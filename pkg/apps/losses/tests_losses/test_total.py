import numpy as np
import pytest
import torch

from apps.fusion.models import LayerOutput, ModelOutput
from apps.losses.models import LossWeights
from apps.losses.services import total_loss
from apps.losses.tests_losses.conftest import N_POINTS, make_output
from apps.matcher.models import Targets
from crowdmap.exceptions import ValidationError


def test_perfect_predictions_hit_term_limits(perfect_output, targets, gt_mask):
    weights = LossWeights()
    loss = total_loss(perfect_output, [targets], gt_mask.unsqueeze(0), weights)
    assert float(loss.cls) == pytest.approx(0.0, abs=1e-12)
    assert float(loss.p2p) == pytest.approx(0.0, abs=1e-12)
    assert float(loss.seg) == pytest.approx(0.0, abs=1e-12)
    assert float(loss.dir) == pytest.approx(-1.0, abs=1e-9)
    assert float(loss.total) == pytest.approx(-weights.alpha_dir, abs=1e-9)


def test_cls_only_weights(rng, targets, gt_mask):
    logits = torch.as_tensor(rng.normal(size=(1, 6, 4)))
    points = torch.as_tensor(rng.uniform(0.05, 0.95, size=(1, 6, N_POINTS, 2)))
    seg = torch.as_tensor(rng.normal(size=(1, 8, 8)))
    loss = total_loss(make_output(logits, points, seg), [targets], gt_mask.unsqueeze(0),
                      LossWeights(alpha_cls=1.0, alpha_p2p=0.0, alpha_dir=0.0, alpha_seg=0.0))
    assert float(loss.total) == pytest.approx(float(loss.cls), rel=1e-12)


def test_total_combines_terms_exactly(rng, targets, gt_mask):
    logits = torch.as_tensor(rng.normal(size=(1, 6, 4)))
    points = torch.as_tensor(rng.uniform(0.05, 0.95, size=(1, 6, N_POINTS, 2)))
    seg = torch.as_tensor(rng.normal(size=(1, 8, 8)))
    w = LossWeights()
    loss = total_loss(make_output(logits, points, seg), [targets], gt_mask.unsqueeze(0), w)
    expected = w.alpha_cls * loss.cls + w.alpha_p2p * loss.p2p + w.alpha_dir * loss.dir + w.alpha_seg * loss.seg
    assert float(loss.total) == pytest.approx(float(expected), rel=1e-12)
    assert float(loss.cls) >= 0 and float(loss.p2p) >= 0 and float(loss.seg) >= 0
    assert -1.0 <= float(loss.dir) <= 1.0


def test_aux_layers_add_their_own_totals(rng, targets, gt_mask):
    layers = [LayerOutput(torch.as_tensor(rng.normal(size=(1, 6, 4))),
                          torch.as_tensor(rng.uniform(0.05, 0.95, size=(1, 6, N_POINTS, 2))))
              for _ in range(3)]
    seg = torch.as_tensor(rng.normal(size=(1, 8, 8)))
    output = ModelOutput(layers[-1].class_logits, layers[-1].points, seg, layers)
    loss = total_loss(output, [targets], gt_mask.unsqueeze(0), LossWeights())
    assert len(loss.aux) == 2
    final_only = total_loss(ModelOutput(layers[-1].class_logits, layers[-1].points, seg, [layers[-1]]),
                            [targets], gt_mask.unsqueeze(0), LossWeights())
    expected = final_only.total + sum(a.total for a in loss.aux)
    assert float(loss.total) == pytest.approx(float(expected), rel=1e-12)


def test_invariant_under_prediction_and_gt_order(rng, targets, gt_mask):
    logits = torch.as_tensor(rng.normal(size=(1, 6, 4)))
    points = torch.as_tensor(rng.uniform(0.05, 0.95, size=(1, 6, N_POINTS, 2)))
    seg = torch.as_tensor(rng.normal(size=(1, 8, 8)))
    w = LossWeights()
    base = total_loss(make_output(logits, points, seg), [targets], gt_mask.unsqueeze(0), w)

    order = torch.as_tensor(rng.permutation(6))
    shuffled = total_loss(make_output(logits[:, order], points[:, order], seg), [targets],
                          gt_mask.unsqueeze(0), w)
    gt_order = [2, 0, 1]
    reordered = Targets(targets.labels[gt_order], targets.points[gt_order], targets.closed[gt_order])
    regt = total_loss(make_output(logits, points, seg), [reordered], gt_mask.unsqueeze(0), w)
    assert float(shuffled.total) == pytest.approx(float(base.total), abs=1e-9)
    assert float(regt.total) == pytest.approx(float(base.total), abs=1e-9)


def test_seg_branch_off_contributes_nothing(rng, targets, gt_mask):
    logits = torch.as_tensor(rng.normal(size=(1, 6, 4)))
    points = torch.as_tensor(rng.uniform(0.05, 0.95, size=(1, 6, N_POINTS, 2)))
    output = make_output(logits, points, torch.zeros(1, 8, 8, dtype=torch.float64), has_seg=False)
    assert float(total_loss(output, [targets], gt_mask.unsqueeze(0), LossWeights()).seg) == 0.0


def test_gradient_matches_finite_differences(rng, targets, gt_mask):
    logits = torch.as_tensor(rng.normal(size=(1, 5, 4)), dtype=torch.float64).requires_grad_()
    points = torch.as_tensor(rng.uniform(0.1, 0.9, size=(1, 5, N_POINTS, 2))).requires_grad_()
    seg = torch.as_tensor(rng.normal(size=(1, 8, 8))).requires_grad_()
    masks = gt_mask.unsqueeze(0)

    def objective(class_logits, pts, seg_logits):
        return total_loss(make_output(class_logits, pts, seg_logits), [targets], masks, LossWeights()).total

    assert torch.autograd.gradcheck(objective, (logits, points, seg), eps=1e-6, atol=1e-8, rtol=1e-4)


def test_empty_gt_batch_only_background(rng, gt_mask):
    empty = Targets(np.zeros(0, dtype=np.int64), np.zeros((0, N_POINTS, 2)), np.zeros(0, dtype=bool))
    logits = torch.as_tensor(rng.normal(size=(1, 4, 4)))
    points = torch.as_tensor(rng.uniform(0.1, 0.9, size=(1, 4, N_POINTS, 2)))
    loss = total_loss(make_output(logits, points, torch.zeros(1, 8, 8, dtype=torch.float64), has_seg=False),
                      [empty], None, LossWeights())
    assert float(loss.p2p) == 0.0 and float(loss.dir) == 0.0
    assert float(loss.cls) > 0.0


def test_loss_weights_validation():
    with pytest.raises(ValidationError):
        LossWeights(alpha_cls=-1.0)
    with pytest.raises(ValidationError):
        LossWeights(focal_alpha=1.0)
