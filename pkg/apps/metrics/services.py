"""
Chamfer-AP: жадное сопоставление по убыванию confidence внутри сцены,
пулинг сцен по категории, AP — площадь под PR-кривой с монотонной огибающей точности.
"""
import logging

import numpy as np

from apps.geometry.models import ElementCategory, FusedScene, MapElement, NormalizationFrame, Scene
from apps.geometry.services import chamfer_matrix, clip_elements, resample_uniform
from apps.metrics.models import CategoryResult, EvalReport
from crowdmap import settings
from crowdmap.exceptions import ValidationError

logger = logging.getLogger(__name__)


# ---------- окно ----------

def eval_window(bounds: NormalizationFrame, half: float = settings.EVAL_HALF_WINDOW) -> NormalizationFrame:
    return NormalizationFrame.around(bounds.center, half)


def clip_to_window(elements: list[MapElement], window: NormalizationFrame) -> list[MapElement]:
    return clip_elements(elements, window)


# ---------- AP ----------

def average_precision(tp_flags, n_gt: int) -> float:
    """All-point интерполяция по ранжированному списку TP/FP."""
    tp_flags = np.asarray(tp_flags, dtype=bool)
    if n_gt == 0:
        return 1.0 if len(tp_flags) == 0 else 0.0
    if len(tp_flags) == 0:
        return 0.0
    tp = np.cumsum(tp_flags)
    precision = tp / np.arange(1, len(tp_flags) + 1)
    recall = tp / n_gt

    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    changed = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[changed + 1] - mrec[changed]) * mpre[changed + 1]))


def _sampled(elements: list[MapElement], n_points: int) -> list[np.ndarray]:
    return [resample_uniform(e, n_points).points for e in elements]


class _CategoryPool:
    """Предсказания и эталоны одной категории по всем сценам."""

    def __init__(self):
        self.confidences: list[float] = []
        self.owners: list[tuple[int, int]] = []  # (сцена, строка в её матрице)
        self.matrices: list[np.ndarray] = []
        self.n_gt = 0

    def add_scene(self, predictions: list[tuple[MapElement, float]], gts: list[MapElement], n_points: int):
        scene = len(self.matrices)
        self.matrices.append(chamfer_matrix(_sampled([e for e, _ in predictions], n_points),
                                             _sampled(gts, n_points)))
        for row, (_, confidence) in enumerate(predictions):
            self.confidences.append(float(confidence))
            self.owners.append((scene, row))
        self.n_gt += len(gts)

    def tp_flags(self, tau: float) -> np.ndarray:
        # стабильная сортировка: при равных confidence — порядок входа
        order = sorted(range(len(self.confidences)), key=lambda i: -self.confidences[i])
        used = [np.zeros(m.shape[1], dtype=bool) for m in self.matrices]
        flags = np.zeros(len(order), dtype=bool)
        for rank, i in enumerate(order):
            scene, row = self.owners[i]
            distances = np.where(used[scene], np.inf, self.matrices[scene][row])
            if distances.size == 0:
                continue
            best = int(np.argmin(distances))
            if distances[best] < tau:
                used[scene][best] = True
                flags[rank] = True
        return flags


def ap_single_category(predictions: list[tuple[MapElement, float]], gts: list[MapElement], tau: float,
                       n_points: int = settings.EVAL_POINTS) -> float:
    pool = _CategoryPool()
    pool.add_scene(predictions, gts, n_points)
    return average_precision(pool.tp_flags(tau), pool.n_gt)


# ---------- оценка набора сцен ----------

def evaluate(pred_scenes: list[FusedScene], gt_scenes: list[Scene],
             thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS,
             n_points: int = settings.EVAL_POINTS,
             half_window: float = settings.EVAL_HALF_WINDOW) -> EvalReport:
    """Окно ±half_window вокруг центра сцены; AP = среднее по порогам; mAP — по категориям."""
    thresholds = tuple(float(t) for t in thresholds)
    if not thresholds or any(t <= 0 for t in thresholds):
        raise ValidationError("Пороги Chamfer должны быть > 0", {"thresholds": thresholds})

    predictions_by_id = {p.scene_id: p for p in pred_scenes}
    unknown = set(predictions_by_id) - {s.scene_id for s in gt_scenes}
    if unknown:
        raise ValidationError("Предсказания для неизвестных сцен", {"scene_ids": sorted(unknown)})

    pools = {category: _CategoryPool() for category in ElementCategory}
    n_predictions = dict.fromkeys(ElementCategory, 0)
    for scene in gt_scenes:
        window = eval_window(scene.bounds, half_window)
        gts = clip_to_window(scene.gt_elements, window)
        fused = predictions_by_id.get(scene.scene_id)
        predictions = []
        if fused is not None:
            for element, confidence in fused.elements:
                predictions.extend((piece, confidence) for piece in clip_to_window([element], window))
        for category, pool in pools.items():
            category_predictions = [(e, c) for e, c in predictions if e.category == category]
            pool.add_scene(category_predictions, [e for e in gts if e.category == category], n_points)
            n_predictions[category] += len(category_predictions)

    results = {}
    for category, pool in pools.items():
        ap_by_threshold, true_positives = {}, {}
        for tau in thresholds:
            flags = pool.tp_flags(tau)
            ap_by_threshold[tau] = average_precision(flags, pool.n_gt)
            true_positives[tau] = int(flags.sum())
        results[category] = CategoryResult(
            category, ap_by_threshold, pool.n_gt, n_predictions[category], true_positives,
            absent=pool.n_gt == 0 and n_predictions[category] == 0,
        )

    report = EvalReport(thresholds, results)
    logger.info("evaluated %d scenes: mAP=%.4f", len(gt_scenes), report.mAP)
    return report


def baseline_predictions(scene: Scene, trip_index: int = 0) -> FusedScene:
    """Без fusion: элементы одного проезда как предсказания с confidence 1.0."""
    trips = sorted(scene.trips, key=lambda t: t.trip_id)
    if not 0 <= trip_index < len(trips):
        raise ValidationError("Нет проезда с таким индексом",
                              {"scene_id": scene.scene_id, "trip_index": trip_index, "trips": len(trips)})
    return FusedScene(scene.scene_id, scene.bounds, [(e, 1.0) for e in trips[trip_index].elements])


def gt_passthrough(scene: Scene) -> FusedScene:
    return FusedScene(scene.scene_id, scene.bounds, [(e, 1.0) for e in scene.gt_elements])


# ---------- отчёты ----------

def format_report(report: EvalReport) -> str:
    header = "category " + " ".join(f"AP@{t:g}".rjust(8) for t in report.thresholds) + "       AP     gt   pred"
    lines = [header, "-" * len(header)]
    for result in report.categories.values():
        cells = " ".join(f"{result.ap_by_threshold[t]:8.4f}" for t in report.thresholds)
        mark = "*" if result.absent else " "
        lines.append(f"{result.label:<8}{mark}{cells} {result.ap:8.4f} {result.n_gt:6d} {result.n_predictions:6d}")
    lines.append("-" * len(header))
    lines.append(f"mAP {report.mAP:.4f}")
    if report.excluded:
        lines.append("* нет эталона и предсказаний, не входит в mAP: " + ", ".join(report.excluded))
    return "\n".join(lines) + "\n"


def report_to_kv(report: EvalReport) -> str:
    lines = []
    for result in report.categories.values():
        lines.append(f"AP_{result.label}={result.ap:.6f}")
        for tau in report.thresholds:
            lines.append(f"AP_{result.label}@{tau:g}={result.ap_by_threshold[tau]:.6f}")
            lines.append(f"TP_{result.label}@{tau:g}={result.true_positives[tau]}")
        lines.append(f"GT_{result.label}={result.n_gt}")
        lines.append(f"PRED_{result.label}={result.n_predictions}")
    lines.append(f"mAP={report.mAP:.6f}")
    lines.append("excluded=" + ",".join(report.excluded))
    return "\n".join(lines) + "\n"
