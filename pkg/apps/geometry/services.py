"""
Геометрические примитивы векторной карты.
Все функции чистые: без общего состояния, безопасны для вызова из разных потоков.
"""
import logging

import numpy as np
import shapely
from scipy.spatial.distance import cdist
from shapely.geometry import LineString, Polygon

from apps.geometry.models import MapElement, NormalizationFrame, Point2D
from crowdmap.exceptions import EmptyPointSetError, ValidationError

logger = logging.getLogger(__name__)

COSINE_EPS = 1e-8


# ---------- длины и ресэмплинг ----------

def _ring(points: np.ndarray, closed: bool) -> np.ndarray:
    """Точки с явно добавленной замыкающей вершиной (для closed)."""
    return np.vstack([points, points[:1]]) if closed else points


def _cumulative_length(points: np.ndarray) -> np.ndarray:
    seg = np.hypot(*np.diff(points, axis=0).T)
    return np.concatenate([[0.0], np.cumsum(seg)])


def polyline_length(element: MapElement) -> float:
    """Сумма длин сегментов; для closed — с замыкающим сегментом."""
    return float(_cumulative_length(_ring(element.points, element.closed))[-1])


def resample_uniform(element: MapElement, n_points: int) -> MapElement:
    """
    Равномерный по длине дуги ресэмплинг в n_points точек.
    - open: оба конца сохраняются точно;
    - closed: точка 0 = исходная первая вершина, шаг = периметр / n_points;
    - нулевая длина: n_points копий одной точки, meta["degenerate"] = True.
    """
    if n_points < 2:
        raise ValidationError("n_points должно быть ≥ 2", {"n_points": n_points})

    ring = _ring(element.points, element.closed)
    cum = _cumulative_length(ring)
    total = cum[-1]
    if total <= 0.0:
        logger.debug("zero-length %s resampled to %d copies", element.category.slug, n_points)
        points = np.repeat(element.points[:1], n_points, axis=0)
        return element.with_points(points, degenerate=True)

    if element.closed:
        targets = np.arange(n_points) * (total / n_points)
    else:
        targets = np.linspace(0.0, total, n_points)

    # повторяющиеся вершины дают нулевые сегменты — np.interp требует неубывающий xp, это ок
    xs = np.interp(targets, cum, ring[:, 0])
    ys = np.interp(targets, cum, ring[:, 1])
    points = np.column_stack([xs, ys])
    if not element.closed:
        points[0] = ring[0]
        points[-1] = ring[-1]
    return element.with_points(points, degenerate=False)


def truncate_arc(element: MapElement, start: float, stop: float) -> MapElement:
    """Непрерывный кусок open-элемента между долями длины [start, stop]."""
    cum = _cumulative_length(element.points)
    total = cum[-1]
    if total <= 0.0:
        return element
    lo, hi = start * total, stop * total
    inner = (cum > lo) & (cum < hi)
    xs = np.concatenate([[np.interp(lo, cum, element.points[:, 0])],
                         element.points[inner, 0],
                         [np.interp(hi, cum, element.points[:, 0])]])
    ys = np.concatenate([[np.interp(lo, cum, element.points[:, 1])],
                         element.points[inner, 1],
                         [np.interp(hi, cum, element.points[:, 1])]])
    return element.with_points(np.column_stack([xs, ys]), truncated=True)


# ---------- нормализация ----------

def normalize(point, frame: NormalizationFrame):
    """
    Min-max нормализация в [0,1]². Принимает Point2D или массив (..., 2).
    Точки вне кадра уходят за пределы [0,1] — обрезка решается вызывающим.
    """
    arr = np.asarray(point, dtype=np.float64)
    out = np.empty_like(arr)
    out[..., 0] = (arr[..., 0] - frame.min_x) / frame.width
    out[..., 1] = (arr[..., 1] - frame.min_y) / frame.height
    if isinstance(point, Point2D):
        return Point2D(float(out[0]), float(out[1]))
    return out


def denormalize(point, frame: NormalizationFrame):
    """Обратное к normalize()."""
    arr = np.asarray(point, dtype=np.float64)
    out = np.empty_like(arr)
    out[..., 0] = arr[..., 0] * frame.width + frame.min_x
    out[..., 1] = arr[..., 1] * frame.height + frame.min_y
    if isinstance(point, Point2D):
        return Point2D(float(out[0]), float(out[1]))
    return out


# ---------- расстояния ----------

def manhattan_distance(a, b) -> float:
    return float(abs(a[0] - b[0]) + abs(a[1] - b[1]))


def chamfer_distance(a, b) -> float:
    """
    Симметричная усреднённая Chamfer-дистанция:
    0.5 · (mean_a min_b ‖a−b‖ + mean_b min_a ‖a−b‖).
    """
    pa = np.asarray(a, dtype=np.float64).reshape(-1, 2)
    pb = np.asarray(b, dtype=np.float64).reshape(-1, 2)
    if len(pa) == 0 or len(pb) == 0:
        raise EmptyPointSetError("Chamfer-дистанция для пустого множества точек не определена",
                                 {"len_a": len(pa), "len_b": len(pb)})
    dist = cdist(pa, pb)
    return float(0.5 * (dist.min(axis=1).mean() + dist.min(axis=0).mean()))


def chamfer_matrix(a_sets, b_sets) -> np.ndarray:
    """Попарные chamfer_distance: (len(a_sets), len(b_sets)); пустые списки дают пустую матрицу."""
    matrix = np.zeros((len(a_sets), len(b_sets)))
    for i, a in enumerate(a_sets):
        for j, b in enumerate(b_sets):
            matrix[i, j] = chamfer_distance(a, b)
    return matrix


# ---------- рёбра ----------

def edge_vectors(element: MapElement) -> np.ndarray:
    """Векторы рёбер: n−1 для open, n для closed (включая замыкающее)."""
    return np.diff(_ring(element.points, element.closed), axis=0)


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return float(u @ v / (np.linalg.norm(u) * np.linalg.norm(v) + COSINE_EPS))


# ---------- shapely-мост ----------

def to_geometry(element: MapElement):
    """LineString для open; Polygon для closed (≥3 точек), иначе замкнутая линия."""
    if element.closed:
        if len(element.points) >= 3:
            return Polygon(element.points)
        return LineString(_ring(element.points, True))
    return LineString(element.points)


def _pieces_from_geometry(geometry, template: MapElement) -> list[MapElement]:
    """Разбираем результат пересечения shapely обратно в элементы карты."""
    pieces = []
    for part in getattr(geometry, "geoms", [geometry]):
        if part.is_empty:
            continue
        if isinstance(part, Polygon):
            coords = np.asarray(part.exterior.coords)[:-1]
            closed = True
        elif isinstance(part, LineString):
            coords = np.asarray(part.coords)
            closed = False
        else:
            # точки касания границы и пр. — не элементы
            continue
        if len(coords) < 2 or part.length <= 0.0:
            continue
        pieces.append(MapElement(template.category, coords[:, :2], closed and template.closed,
                                 {**template.meta, "clipped": True}))
    return pieces


def clip_elements(elements: list[MapElement], frame: NormalizationFrame) -> list[MapElement]:
    """
    Обрезка элементов по прямоугольнику.
    Целиком внутри — тот же объект без изменений; целиком снаружи — выбрасывается;
    open может распасться на несколько кусков; closed -> полигон пересечения.
    """
    result = []
    for element in elements:
        if frame.contains(element.points, tol=0.0):
            result.append(element)
            continue
        clipped = shapely.clip_by_rect(to_geometry(element), *frame.as_tuple())
        if clipped.is_empty:
            continue
        result.extend(_pieces_from_geometry(clipped, element))
    return result


# ---------- растеризация ----------

def cell_centers(frame: NormalizationFrame, height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """Центры ячеек сетки; строка i — ось y (i=0 у min_y), столбец j — ось x."""
    xs = frame.min_x + (np.arange(width) + 0.5) * frame.width / width
    ys = frame.min_y + (np.arange(height) + 0.5) * frame.height / height
    return np.meshgrid(xs, ys)


def rasterize(elements: list[MapElement], frame: NormalizationFrame,
              height: int, width: int, line_width: float) -> np.ndarray:
    """
    Бинарная маска H×W: ячейка = 1, если её центр в пределах line_width/2 от геометрии
    (внутренность closed-полигонов заливается). Без сглаживания.
    """
    if height < 1 or width < 1:
        raise ValidationError("Размер сетки должен быть ≥ 1", {"height": height, "width": width})
    if line_width <= 0:
        raise ValidationError("line_width должен быть > 0", {"line_width": line_width})

    mask = np.zeros((height, width), dtype=np.uint8)
    if not elements:
        return mask

    gx, gy = cell_centers(frame, height, width)
    centers = shapely.points(gx.ravel(), gy.ravel())
    half = line_width / 2.0
    hit = np.zeros(centers.shape, dtype=bool)
    for element in elements:
        hit |= shapely.distance(to_geometry(element), centers) <= half
    mask[hit.reshape(height, width)] = 1
    return mask
