"""
Иерархическое сопоставление предсказаний с эталоном:
уровень экземпляров (венгерский алгоритм), затем уровень точек (лучшая перестановка из Γ).
"""
import logging
from functools import lru_cache

import numpy as np
import torch
from scipy.optimize import linear_sum_assignment

from apps.geometry.models import MapElement, NormalizationFrame
from apps.losses.focal import FOCAL_ALPHA, FOCAL_GAMMA, focal_loss
from apps.matcher.models import InstanceAssignment, InstancePredictions, PointAssignment, Targets
from crowdmap.exceptions import MatchingError

logger = logging.getLogger(__name__)


def _numpy(value) -> np.ndarray:
    if isinstance(value, torch.Tensor):
        return value.detach().cpu().double().numpy()
    return np.asarray(value, dtype=np.float64)


# ---------- уровень экземпляров ----------

def hungarian(cost) -> InstanceAssignment:
    """Оптимальное назначение для матрицы N_gt × N_pred (N_pred ≥ N_gt)."""
    cost = _numpy(cost)
    if cost.ndim != 2:
        raise MatchingError("Матрица стоимости должна быть двумерной", {"shape": cost.shape})
    n_gt, n_pred = cost.shape
    if n_pred < n_gt:
        raise MatchingError("Предсказаний меньше, чем эталонных элементов", {"n_gt": n_gt, "n_pred": n_pred})
    if n_gt == 0:
        return InstanceAssignment([], 0.0)
    if not np.all(np.isfinite(cost)):
        raise MatchingError("Матрица стоимости содержит нечисловые значения")

    rows, cols = linear_sum_assignment(cost)
    pairs = [(int(r), int(c)) for r, c in zip(rows, cols)]
    return InstanceAssignment(pairs, float(cost[rows, cols].sum()))


# ---------- уровень точек ----------

@lru_cache(maxsize=128)
def _permutations(closed: bool, n_points: int) -> np.ndarray:
    base = np.arange(n_points)
    if not closed:
        perms = np.stack([base, base[::-1]])
    else:
        forward = [np.roll(base, -shift) for shift in range(n_points)]
        backward = [np.roll(base[::-1], shift + 1) for shift in range(n_points)]
        perms = np.stack(forward + backward)
    perms.setflags(write=False)
    return perms


def allowed_permutations(closed: bool, n_points: int) -> np.ndarray:
    """
    Γ — эквивалентные порядки точек:
    open -> {тождественная, разворот}; closed -> все циклические сдвиги × 2 направления.
    Первая строка всегда тождественная.
    """
    if n_points < 1:
        raise MatchingError("n_points должно быть ≥ 1", {"n_points": n_points})
    return _permutations(bool(closed), int(n_points))


def point_match(pred_points, gt_points, closed: bool) -> PointAssignment:
    """argmin по Γ суммы манхэттенских расстояний; при равенстве — первая (тождественная)."""
    pred = _numpy(pred_points)
    gt = _numpy(gt_points)
    if pred.shape != gt.shape:
        raise MatchingError("Число точек предсказания и эталона различается",
                            {"pred": pred.shape, "gt": gt.shape})
    perms = allowed_permutations(closed, len(gt))
    costs = np.abs(pred[None] - gt[perms]).sum(axis=(1, 2))
    best = int(np.argmin(costs))
    return PointAssignment(perms[best].copy(), float(costs[best]))


def position_cost_matrix(pred_points, targets: Targets) -> np.ndarray:
    """N_gt × N_pred: min по Γ среднего манхэттенского расстояния (нормализованные координаты)."""
    pred = _numpy(pred_points)
    n_pred, n_points = pred.shape[:2]
    cost = np.zeros((len(targets), n_pred))
    for i in range(len(targets)):
        variants = targets.points[i][allowed_permutations(targets.closed[i], n_points)]
        dist = np.abs(pred[:, None] - variants[None]).sum(axis=-1).mean(axis=-1)
        cost[i] = dist.min(axis=1)
    return cost


def class_cost_matrix(class_logits, labels, alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA) -> np.ndarray:
    """N_gt × N_pred: фокальная стоимость предсказания для класса эталона."""
    logits = torch.as_tensor(_numpy(class_logits))
    n_pred = logits.shape[0]
    with torch.no_grad():
        rows = [
            focal_loss(logits, torch.full((n_pred,), int(label), dtype=torch.long), alpha, gamma).numpy()
            for label in labels
        ]
    return np.stack(rows) if rows else np.zeros((0, n_pred))


def instance_cost(pred: InstancePredictions, gt: MapElement, frame: NormalizationFrame,
                  alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA) -> float:
    """L_Focal(ĉ, c) + (1/N_p) · min_Γ Σ_j D_Mht для одного предсказания и одного эталона."""
    points = _numpy(pred.points)
    targets = Targets.from_elements([gt], frame, len(points))
    logits = _numpy(pred.class_logits).reshape(1, -1)
    focal = class_cost_matrix(logits, targets.labels, alpha, gamma)[0, 0]
    position = point_match(points, targets.points[0], gt.closed).cost / len(points)
    return float(focal + position)


def match_targets(pred: InstancePredictions, targets: Targets,
                  alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA
                  ) -> tuple[InstanceAssignment, list[PointAssignment]]:
    """Полная матрица стоимостей -> венгерский -> point_match для каждой пары."""
    points = _numpy(pred.points)
    if len(targets) == 0:
        return InstanceAssignment([], 0.0), []
    cost = class_cost_matrix(pred.class_logits, targets.labels, alpha, gamma) + position_cost_matrix(points, targets)
    assignment = hungarian(cost)
    point_assignments = [
        point_match(points[p], targets.points[g], bool(targets.closed[g])) for g, p in assignment.pairs
    ]
    return assignment, point_assignments


def match(pred: InstancePredictions, gt: list[MapElement], frame: NormalizationFrame,
          alpha: float = FOCAL_ALPHA, gamma: float = FOCAL_GAMMA
          ) -> tuple[InstanceAssignment, list[PointAssignment]]:
    n_points = _numpy(pred.points).shape[1]
    return match_targets(pred, Targets.from_elements(gt, frame, n_points), alpha, gamma)
