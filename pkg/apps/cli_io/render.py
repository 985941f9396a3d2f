"""
SVG-рендер сцены: слои gt / trips / prediction.
Цвета категорий: разделители — синий, стоп-линии — зелёный, переходы — красный.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import svgwrite

from apps.geometry.models import ElementCategory, FusedScene, MapElement, NormalizationFrame, PerceivedTrip, Scene

logger = logging.getLogger(__name__)

CATEGORY_COLORS = {
    ElementCategory.LANE_DIVIDER: "#1f4fd8",
    ElementCategory.STOP_LINE: "#1a9b3a",
    ElementCategory.CROSSWALK: "#d62728",
}


@dataclass(frozen=True)
class RenderStyle:
    size: int = 800
    stroke_width: float = 0.3  # метры
    trip_opacity: float = 0.25
    gt_opacity: float = 0.9
    prediction_opacity: float = 1.0
    background: str = "#ffffff"
    colors: dict = field(default_factory=lambda: dict(CATEGORY_COLORS))


def _path_data(element: MapElement, frame: NormalizationFrame) -> str:
    # SVG: ось y вниз, поэтому y отражаем относительно max_y
    coords = [f"{x - frame.min_x:.3f},{frame.max_y - y:.3f}" for x, y in element.points]
    data = "M " + " L ".join(coords)
    return data + " Z" if element.closed else data


def _add_elements(dwg, group, elements, frame, style: RenderStyle):
    for element in elements:
        group.add(dwg.path(
            d=_path_data(element, frame),
            stroke=style.colors[element.category],
            fill="none",
            stroke_width=style.stroke_width,
            stroke_linecap="round",
            stroke_linejoin="round",
        ))


def render_svg(bounds: NormalizationFrame, gt: list[MapElement] = (), trips: list[PerceivedTrip] = (),
               predictions: list[MapElement] = (), style: RenderStyle | None = None) -> str:
    """Детерминированный SVG-документ; viewBox — bounds сцены в метрах."""
    style = style or RenderStyle()
    aspect = bounds.height / bounds.width
    dwg = svgwrite.Drawing(size=(f"{style.size}px", f"{round(style.size * aspect)}px"), profile="full")
    dwg.attribs["viewBox"] = f"0 0 {bounds.width:.3f} {bounds.height:.3f}"
    dwg.add(dwg.rect(insert=(0, 0), size=(f"{bounds.width:.3f}", f"{bounds.height:.3f}"), fill=style.background))

    gt_group = dwg.g(id="gt", opacity=style.gt_opacity)
    _add_elements(dwg, gt_group, gt, bounds, style)
    dwg.add(gt_group)

    trips_group = dwg.g(id="trips", opacity=style.trip_opacity)
    for trip in trips:
        trip_group = dwg.g(id=f"trip-{trip.trip_id}")
        _add_elements(dwg, trip_group, trip.elements, bounds, style)
        trips_group.add(trip_group)
    dwg.add(trips_group)

    prediction_group = dwg.g(id="prediction", opacity=style.prediction_opacity)
    _add_elements(dwg, prediction_group, predictions, bounds, style)
    dwg.add(prediction_group)
    return dwg.tostring()


def render_scene(scene: Scene, fused: FusedScene | None = None, style: RenderStyle | None = None,
                 show_gt: bool = True, show_trips: bool = True) -> str:
    predictions = [element for element, _ in fused.elements] if fused is not None else []
    return render_svg(
        scene.bounds,
        gt=scene.gt_elements if show_gt else [],
        trips=scene.trips if show_trips else [],
        predictions=predictions,
        style=style,
    )


def write_svg(path, document: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document, encoding="utf-8")
    logger.info("svg written: %s", path)
    return path
