"""
Четырёхчленная функция потерь: cls (focal) + p2p (манхэттен по точкам)
+ dir (косинус рёбер) + seg (BCE по сетке). Сопоставление — отдельно для каждого слоя декодера.
"""
import logging

import numpy as np
import torch
import torch.nn.functional as F

from apps.fusion.models import LayerOutput, ModelOutput
from apps.geometry.models import BACKGROUND
from apps.losses.focal import focal_loss
from apps.losses.models import LossBreakdown, LossWeights
from apps.matcher.models import InstanceAssignment, PointAssignment, Targets
from apps.matcher.services import match_targets

logger = logging.getLogger(__name__)

EDGE_EPS = 1e-8


# ---------- сопоставленные пары ----------

def _matched_points(pred_points: torch.Tensor, targets: Targets, assignment: InstanceAssignment,
                    point_assignments: list[PointAssignment]) -> tuple[torch.Tensor, torch.Tensor, np.ndarray]:
    """(pred (M, N_p, 2), gt, переставленный по γ̂ (M, N_p, 2), closed (M,))."""
    pred_idx = torch.as_tensor(assignment.prediction_indices, dtype=torch.long, device=pred_points.device)
    gt = np.stack([targets.points[g][pa.permutation] for g, pa in zip(assignment.gt_indices, point_assignments)])
    closed = targets.closed[assignment.gt_indices]
    return pred_points[pred_idx], torch.as_tensor(gt, dtype=pred_points.dtype, device=pred_points.device), closed


def _edges(points: torch.Tensor, closed: bool) -> torch.Tensor:
    if closed:
        points = torch.cat([points, points[:1]], dim=0)
    return points[1:] - points[:-1]


def _p2p_sum(pred: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    return (pred - gt).abs().sum()


def _dir_sum(pred: torch.Tensor, gt: torch.Tensor, closed: np.ndarray) -> tuple[torch.Tensor, int]:
    total = pred.new_zeros(())
    n_edges = 0
    for i in range(len(pred)):
        e_pred = _edges(pred[i], bool(closed[i]))
        e_gt = _edges(gt[i], bool(closed[i]))
        total = total - F.cosine_similarity(e_pred, e_gt, dim=-1, eps=EDGE_EPS).sum()
        n_edges += len(e_pred)
    return total, n_edges


# ---------- отдельные слагаемые ----------

def p2p_loss(pred_points: torch.Tensor, targets: Targets, assignment: InstanceAssignment,
             point_assignments: list[PointAssignment]) -> torch.Tensor:
    """Σ манхэттенских расстояний по сопоставленным точкам / (N_gt · N_p), нормализованные координаты."""
    if not assignment.pairs:
        return pred_points.sum() * 0.0
    pred, gt, _ = _matched_points(pred_points, targets, assignment, point_assignments)
    return _p2p_sum(pred, gt) / (len(assignment.pairs) * pred.shape[1])


def dir_loss(pred_points: torch.Tensor, targets: Targets, assignment: InstanceAssignment,
             point_assignments: list[PointAssignment]) -> torch.Tensor:
    """−Σ CosSim(ê, e) / число рёбер; диапазон [−1, 1]."""
    if not assignment.pairs:
        return pred_points.sum() * 0.0
    pred, gt, closed = _matched_points(pred_points, targets, assignment, point_assignments)
    total, n_edges = _dir_sum(pred, gt, closed)
    return total / n_edges


def seg_loss(seg_logits: torch.Tensor, gt_mask: torch.Tensor) -> torch.Tensor:
    """Средняя по ячейкам BCE с логитами."""
    return F.binary_cross_entropy_with_logits(seg_logits, gt_mask.to(seg_logits.dtype), reduction="mean")


# ---------- итог ----------

def layer_loss(layer: LayerOutput, targets: list[Targets], weights: LossWeights,
               seg_logits: torch.Tensor | None = None, seg_masks: torch.Tensor | None = None) -> LossBreakdown:
    """
    Один слой декодера: своё сопоставление, сумма по батчу, нормировка по суммарным счётчикам.
    Несопоставленные предсказания получают класс «фон».
    """
    zero = layer.points.new_zeros(())
    focal_sum, p2p_sum, dir_sum = zero, zero, zero
    n_gt, n_edges = 0, 0
    n_points = layer.points.shape[2]

    for b, item_targets in enumerate(targets):
        assignment, point_assignments = match_targets(
            layer.item(b), item_targets, weights.focal_alpha, weights.focal_gamma,
        )
        labels = torch.full((layer.class_logits.shape[1],), BACKGROUND, dtype=torch.long,
                            device=layer.class_logits.device)
        for g, p in assignment.pairs:
            labels[p] = int(item_targets.labels[g])
        focal_sum = focal_sum + focal_loss(layer.class_logits[b], labels,
                                           weights.focal_alpha, weights.focal_gamma).sum()
        if assignment.pairs:
            pred, gt, closed = _matched_points(layer.points[b], item_targets, assignment, point_assignments)
            p2p_sum = p2p_sum + _p2p_sum(pred, gt)
            item_dir, item_edges = _dir_sum(pred, gt, closed)
            dir_sum = dir_sum + item_dir
            n_edges += item_edges
        n_gt += len(assignment.pairs)

    cls = focal_sum / max(n_gt, 1)
    p2p = p2p_sum / max(n_gt * n_points, 1)
    direction = dir_sum / max(n_edges, 1)
    seg = seg_loss(seg_logits, seg_masks) if seg_logits is not None else zero

    total = (weights.alpha_cls * cls + weights.alpha_p2p * p2p
             + weights.alpha_dir * direction + weights.alpha_seg * seg)
    return LossBreakdown(cls, p2p, direction, seg, total)


def total_loss(output: ModelOutput, targets: list[Targets], seg_masks: torch.Tensor | None,
               weights: LossWeights) -> LossBreakdown:
    """
    Итоговый слой (+ сегментация) и каждый промежуточный слой декодера с равным весом.
    output.aux[-1] совпадает с итоговым слоем и повторно не считается.
    """
    use_seg = output.has_seg and seg_masks is not None
    final = layer_loss(output.final, targets, weights,
                       output.seg_logits if use_seg else None, seg_masks if use_seg else None)
    aux = [layer_loss(layer, targets, weights) for layer in output.aux[:-1]]
    total = final.total
    for breakdown in aux:
        total = total + breakdown.total
    return LossBreakdown(final.cls, final.p2p, final.dir, final.seg, total, aux)
