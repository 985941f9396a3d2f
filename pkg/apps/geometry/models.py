from dataclasses import dataclass, field
from enum import IntEnum
from typing import NamedTuple

import numpy as np

from crowdmap.exceptions import ValidationError

BACKGROUND = 3  # код «нет объекта» для классификатора


class ElementCategory(IntEnum):
    """Категории элементов карты; код 3 зарезервирован под фон."""
    LANE_DIVIDER = 0
    STOP_LINE = 1
    CROSSWALK = 2

    @property
    def slug(self) -> str:
        return self.name.lower()

    @classmethod
    def from_slug(cls, value: str) -> "ElementCategory":
        try:
            return cls[value.upper()]
        except KeyError:
            raise ValidationError(f"Неизвестная категория: {value!r}") from None


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class NormalizationFrame:
    """Прямоугольник min-max нормализации (метры)."""
    min_x: float
    min_y: float
    max_x: float
    max_y: float

    def __post_init__(self):
        self.clean()

    def clean(self):
        values = (self.min_x, self.min_y, self.max_x, self.max_y)
        if not all(np.isfinite(v) for v in values):
            raise ValidationError("Границы кадра должны быть конечными", {"bounds": values})
        if not (self.max_x > self.min_x and self.max_y > self.min_y):
            raise ValidationError("Пустой кадр: max должен быть больше min", {"bounds": values})

    @property
    def width(self) -> float:
        return self.max_x - self.min_x

    @property
    def height(self) -> float:
        return self.max_y - self.min_y

    @property
    def center(self) -> Point2D:
        return Point2D((self.min_x + self.max_x) / 2, (self.min_y + self.max_y) / 2)

    @classmethod
    def square(cls, size: float, origin: float = 0.0) -> "NormalizationFrame":
        return cls(origin, origin, origin + size, origin + size)

    @classmethod
    def around(cls, center: Point2D, half: float) -> "NormalizationFrame":
        return cls(center.x - half, center.y - half, center.x + half, center.y + half)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return self.min_x, self.min_y, self.max_x, self.max_y

    def contains(self, points: np.ndarray, tol: float = 1e-9) -> bool:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return bool(
            np.all(pts[:, 0] >= self.min_x - tol) and np.all(pts[:, 0] <= self.max_x + tol)
            and np.all(pts[:, 1] >= self.min_y - tol) and np.all(pts[:, 1] <= self.max_y + tol)
        )


@dataclass(eq=False)
class MapElement:
    """
    Один элемент карты: упорядоченные точки + категория.
    Для closed-элементов первая точка в конце НЕ повторяется (замыкание неявное).
    """
    category: ElementCategory
    points: np.ndarray
    closed: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.category = ElementCategory(self.category)
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        self.closed = bool(self.closed)
        self.clean()

    def clean(self):
        if len(self.points) < 2:
            raise ValidationError("Элемент должен содержать минимум 2 точки",
                                  {"category": self.category.slug, "points": len(self.points)})
        if not np.all(np.isfinite(self.points)):
            raise ValidationError("Координаты элемента должны быть конечными",
                                  {"category": self.category.slug})
        # схлопнутый в точку контур (degenerate) допустим
        if (self.closed and len(self.points) > 2 and not self.meta.get("degenerate")
                and np.array_equal(self.points[0], self.points[-1])):
            raise ValidationError("Замкнутый элемент не должен повторять первую точку в конце",
                                  {"category": self.category.slug})

    def __len__(self):
        return len(self.points)

    def with_points(self, points: np.ndarray, **meta) -> "MapElement":
        """Копия с новыми точками (категория и closed сохраняются)."""
        return MapElement(self.category, points, self.closed, {**self.meta, **meta})

    def same_geometry(self, other: "MapElement") -> bool:
        return (
            self.category == other.category
            and self.closed == other.closed
            and np.array_equal(self.points, other.points)
        )


@dataclass
class PerceivedTrip:
    """Карта, восстановленная одним автомобилем за один проезд."""
    trip_id: int
    elements: list[MapElement] = field(default_factory=list)

    def clean(self):
        if self.trip_id < 0:
            raise ValidationError("trip_id не может быть отрицательным", {"trip_id": self.trip_id})
        for element in self.elements:
            element.clean()


@dataclass
class Scene:
    """Тайл: эталон (gt) + набор краудсорсинговых проездов."""
    scene_id: str
    bounds: NormalizationFrame
    gt_elements: list[MapElement] = field(default_factory=list)
    trips: list[PerceivedTrip] = field(default_factory=list)
    split: str = "train"

    def clean(self, require_trips: bool = True):
        """Проверяем инварианты сцены: N_e ≥ 1, уникальные trip_id, всё внутри bounds."""
        if require_trips and not self.trips:
            raise ValidationError("Сцена должна содержать хотя бы один проезд", {"scene_id": self.scene_id})
        ids = [t.trip_id for t in self.trips]
        if len(ids) != len(set(ids)):
            raise ValidationError("trip_id должны быть уникальны в сцене", {"scene_id": self.scene_id})
        for trip in self.trips:
            trip.clean()
        for element in self.iter_elements():
            if not self.bounds.contains(element.points):
                raise ValidationError("Элемент выходит за границы сцены",
                                      {"scene_id": self.scene_id, "category": element.category.slug})

    def iter_elements(self):
        yield from self.gt_elements
        for trip in self.trips:
            yield from trip.elements

    @property
    def n_trips(self) -> int:
        return len(self.trips)

    @property
    def n_gt(self) -> int:
        return len(self.gt_elements)


@dataclass
class FusedScene:
    """Результат fusion для одной сцены: элементы с confidence."""
    scene_id: str
    bounds: NormalizationFrame
    elements: list[tuple[MapElement, float]] = field(default_factory=list)

    def sorted_elements(self) -> list[tuple[MapElement, float]]:
        return sorted(self.elements, key=lambda pair: -pair[1])
