"""
Генерация эталонных сцен и имитация краудсорсинговых проездов.
Всё детерминировано сидом; общего состояния нет.
"""
import logging
import math

import numpy as np

from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame, PerceivedTrip, Point2D, Scene
from apps.geometry.services import clip_elements, polyline_length, truncate_arc
from apps.synth.models import FRAME_MARGIN, NoiseConfig, SceneConfig

logger = logging.getLogger(__name__)

ROAD_SAMPLES = 41
CROSSWALK_DEPTH = 3.0


# ---------- геометрия дороги ----------

class _Road:
    """Осевая линия дороги: прямая + квадратичный изгиб в локальной системе (s, d)."""

    def __init__(self, center: np.ndarray, heading: float, bend: float, length: float):
        self.center = center
        self.tangent = np.array([math.cos(heading), math.sin(heading)])
        self.normal = np.array([-math.sin(heading), math.cos(heading)])
        self.bend = bend
        self.length = length

    def _lateral(self, s):
        # изгиб: суммарный поворот касательной по всей длине = bend
        return self.bend * np.square(s) / (2.0 * self.length)

    def local_frame(self, s):
        """Точка осевой, касательная и нормаль в параметре s (векторизовано)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        slope = self.bend * s / self.length
        point = self.center + s[:, None] * self.tangent + self._lateral(s)[:, None] * self.normal
        tangent = self.tangent + slope[:, None] * self.normal
        tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
        normal = np.column_stack([-tangent[:, 1], tangent[:, 0]])
        return point, tangent, normal

    def offset_line(self, offset: float, s_values) -> np.ndarray:
        point, _, normal = self.local_frame(s_values)
        return point + offset * normal


def _longest(pieces: list[MapElement]) -> MapElement | None:
    return max(pieces, key=polyline_length) if pieces else None


def generate_scene(config: SceneConfig, seed: int | None = None, scene_id: str | None = None) -> Scene:
    """
    Эталонная сцена без проездов: параллельные разделители полос (open, с изгибом),
    стоп-линии поперёк дороги, пешеходные переходы (closed-прямоугольники).
    """
    config.clean()
    seed = config.seed if seed is None else seed
    rng = np.random.default_rng(seed)

    bounds = NormalizationFrame.square(config.frame_size)
    inner = NormalizationFrame(
        bounds.min_x + FRAME_MARGIN, bounds.min_y + FRAME_MARGIN,
        bounds.max_x - FRAME_MARGIN, bounds.max_y - FRAME_MARGIN,
    )

    lanes = int(rng.integers(config.lanes[0], config.lanes[1] + 1))
    heading = float(rng.uniform(0.0, math.pi))
    bend = float(rng.uniform(-config.curvature, config.curvature))
    offsets = (np.arange(lanes) - (lanes - 1) / 2.0) * config.lane_spacing
    slack = config.frame_size / 2 - FRAME_MARGIN - float(np.abs(offsets).max())
    shift = float(rng.uniform(-1.0, 1.0)) * min(2.0, max(0.0, slack / 2))

    center = np.array(bounds.center) + shift * np.array([-math.sin(heading), math.cos(heading)])
    road = _Road(center, heading, bend, length=1.6 * config.frame_size)
    s_values = np.linspace(-road.length / 2, road.length / 2, ROAD_SAMPLES)

    elements: list[MapElement] = []

    # --- разделители полос ---
    for offset in offsets:
        line = MapElement(ElementCategory.LANE_DIVIDER, road.offset_line(float(offset), s_values))
        piece = _longest(clip_elements([line], inner))
        if piece is not None:
            elements.append(piece)

    # стоп-линия и переход покрывают всю ширину дороги
    if lanes > 1:
        lo, hi = float(offsets[0]), float(offsets[-1])
    else:
        lo, hi = -config.lane_spacing / 2, config.lane_spacing / 2

    stop_lines, crosswalks = [], []
    for side in (-1.0, 1.0):
        s_stop = side * float(rng.uniform(0.15, 0.3)) * config.frame_size
        has_stop = rng.random() < config.stop_line_prob
        has_crosswalk = rng.random() < config.crosswalk_prob
        gap = float(rng.uniform(1.0, 2.5))
        if has_stop:
            stop = MapElement(ElementCategory.STOP_LINE, np.vstack([
                road.offset_line(lo, [s_stop]), road.offset_line(hi, [s_stop]),
            ]))
            stop_lines.extend(clip_elements([stop], inner))
        if has_crosswalk:
            s_near = s_stop + side * gap
            s_far = s_near + side * CROSSWALK_DEPTH
            corners = np.vstack([
                road.offset_line(lo - 1.0, [s_near]),
                road.offset_line(hi + 1.0, [s_near]),
                road.offset_line(hi + 1.0, [s_far]),
                road.offset_line(lo - 1.0, [s_far]),
            ])
            crossing = MapElement(ElementCategory.CROSSWALK, corners, closed=True)
            crosswalks.extend(clip_elements([crossing], inner))

    elements.extend(stop_lines)
    elements.extend(crosswalks)

    scene = Scene(scene_id=scene_id or f"{seed}", bounds=bounds, gt_elements=elements)
    scene.clean(require_trips=False)
    logger.debug("scene %s: %d lanes, %d stop lines, %d crosswalks",
                 scene.scene_id, lanes, len(stop_lines), len(crosswalks))
    return scene


# ---------- шум проезда ----------

def _rigid(points: np.ndarray, angle: float, shift: np.ndarray, pivot: np.ndarray) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return (points - pivot) @ rot.T + pivot + shift


def _spurious_element(rng: np.random.Generator, frame: NormalizationFrame) -> MapElement:
    """Случайный короткий «ложный» элемент случайной категории."""
    category = ElementCategory(int(rng.integers(0, 3)))
    cx = rng.uniform(frame.min_x, frame.max_x)
    cy = rng.uniform(frame.min_y, frame.max_y)
    heading = rng.uniform(0.0, math.pi)
    t = np.array([math.cos(heading), math.sin(heading)])
    n = np.array([-t[1], t[0]])
    length = rng.uniform(1.0, 5.0)
    center = np.array([cx, cy])
    if category == ElementCategory.CROSSWALK:
        half_l, half_w = length / 2, rng.uniform(0.75, 1.5)
        corners = [center - half_l * t - half_w * n, center + half_l * t - half_w * n,
                   center + half_l * t + half_w * n, center - half_l * t + half_w * n]
        return MapElement(category, corners, closed=True, meta={"spurious": True})
    n_points = 3 if category == ElementCategory.LANE_DIVIDER else 2
    s = np.linspace(-length / 2, length / 2, n_points)
    return MapElement(category, center + s[:, None] * t, meta={"spurious": True})


def perturb_trip(gt: list[MapElement], noise: NoiseConfig, trip_seed: int,
                 frame: NormalizationFrame | None = None, trip_id: int = 0) -> PerceivedTrip:
    """
    Один проезд из эталона. Порядок фиксирован:
    жёсткий сдвиг/поворот -> dropout -> обрезка дуги -> джиттер точек -> ложные элементы.
    Если задан frame — поворот вокруг его центра и клиппинг результата по нему.
    """
    noise.clean()
    rng = np.random.default_rng(trip_seed)

    if frame is not None:
        pivot = np.array(frame.center)
    elif gt:
        all_points = np.vstack([e.points for e in gt])
        pivot = (all_points.min(axis=0) + all_points.max(axis=0)) / 2
    else:
        pivot = np.zeros(2)

    # 1) жёсткое преобразование всего проезда (дрейф GNSS)
    angle = float(rng.normal(0.0, noise.trip_rotation_sigma))
    shift = rng.normal(0.0, noise.trip_drift_sigma, size=2)
    rigid = angle != 0.0 or np.any(shift != 0.0)

    elements = []
    for element in gt:
        points = _rigid(element.points, angle, shift, pivot) if rigid else element.points.copy()
        elements.append(element.with_points(points))

    # 2) пропуск элементов
    keep = rng.random(len(elements)) >= noise.element_dropout_prob
    elements = [e for e, k in zip(elements, keep) if k]

    # 3) частичное наблюдение: непрерывный кусок ≥ 50% длины (только open)
    truncated = []
    for element in elements:
        draw = rng.random(3)
        if not element.closed and draw[0] < noise.partial_observation_prob:
            fraction = 0.5 + 0.5 * draw[1]
            start = (1.0 - fraction) * draw[2]
            element = truncate_arc(element, start, start + fraction)
        truncated.append(element)
    elements = truncated

    # 4) джиттер точек
    jittered = []
    for element in elements:
        noise_xy = rng.normal(0.0, noise.point_jitter_sigma, size=element.points.shape)
        jittered.append(element.with_points(element.points + noise_xy))
    elements = jittered

    # 5) ложные элементы
    spurious_frame = frame or NormalizationFrame(pivot[0] - 30, pivot[1] - 30, pivot[0] + 30, pivot[1] + 30)
    for _ in range(int(rng.poisson(noise.spurious_element_rate))):
        elements.append(_spurious_element(rng, spurious_frame))

    if frame is not None:
        elements = clip_elements(elements, frame)
    return PerceivedTrip(trip_id=trip_id, elements=elements)
