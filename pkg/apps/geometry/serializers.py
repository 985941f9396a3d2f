"""
Сериализация доменных типов в простые dict (JSON-совместимые) и обратно.
to_representation / to_internal_value — как у сериализаторов DRF, без фреймворка.
"""
from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame, PerceivedTrip, Scene
from crowdmap.exceptions import ValidationError


def _require(data: dict, *keys):
    if not isinstance(data, dict):
        raise ValidationError("Ожидался объект", {"got": type(data).__name__})
    missing = [k for k in keys if k not in data]
    if missing:
        raise ValidationError("Не хватает полей", {"missing": missing})


class MapElementSerializer:
    """{category: slug, closed: bool, points: [[x, y], ...]} (+confidence для fused-карт)."""

    @staticmethod
    def to_representation(element: MapElement, confidence: float | None = None) -> dict:
        data = {
            "category": element.category.slug,
            "closed": element.closed,
            "points": [[float(x), float(y)] for x, y in element.points],
        }
        if confidence is not None:
            data["confidence"] = float(confidence)
        return data

    @staticmethod
    def to_internal_value(data: dict) -> MapElement:
        _require(data, "category", "closed", "points")
        if not isinstance(data["closed"], bool):
            raise ValidationError("closed должен быть bool", {"closed": data["closed"]})
        points = data["points"]
        if not isinstance(points, list) or not all(isinstance(p, list) and len(p) == 2 for p in points):
            raise ValidationError("points — список пар [x, y]")
        return MapElement(ElementCategory.from_slug(data["category"]), points, data["closed"])


class FrameSerializer:
    @staticmethod
    def to_representation(frame: NormalizationFrame) -> list[float]:
        return [float(v) for v in frame.as_tuple()]

    @staticmethod
    def to_internal_value(data) -> NormalizationFrame:
        if not isinstance(data, list) or len(data) != 4:
            raise ValidationError("bounds — [min_x, min_y, max_x, max_y]", {"bounds": data})
        return NormalizationFrame(*(float(v) for v in data))


class TripSerializer:
    @staticmethod
    def to_representation(trip: PerceivedTrip) -> dict:
        return {
            "trip_id": trip.trip_id,
            "elements": [MapElementSerializer.to_representation(e) for e in trip.elements],
        }

    @staticmethod
    def to_internal_value(data: dict) -> PerceivedTrip:
        _require(data, "trip_id", "elements")
        if not isinstance(data["trip_id"], int) or data["trip_id"] < 0:
            raise ValidationError("trip_id — неотрицательное целое", {"trip_id": data["trip_id"]})
        return PerceivedTrip(data["trip_id"], [MapElementSerializer.to_internal_value(e) for e in data["elements"]])


class SceneSerializer:
    """Одна запись датасета = одна сцена."""

    @staticmethod
    def to_representation(scene: Scene) -> dict:
        return {
            "scene_id": scene.scene_id,
            "split": scene.split,
            "bounds": FrameSerializer.to_representation(scene.bounds),
            "gt": [MapElementSerializer.to_representation(e) for e in scene.gt_elements],
            "trips": [TripSerializer.to_representation(t) for t in scene.trips],
        }

    @staticmethod
    def to_internal_value(data: dict) -> Scene:
        _require(data, "scene_id", "bounds", "gt", "trips")
        split = data.get("split", "train")
        if split not in ("train", "val"):
            raise ValidationError("split — train или val", {"split": split})
        scene = Scene(
            scene_id=str(data["scene_id"]),
            bounds=FrameSerializer.to_internal_value(data["bounds"]),
            gt_elements=[MapElementSerializer.to_internal_value(e) for e in data["gt"]],
            trips=[TripSerializer.to_internal_value(t) for t in data["trips"]],
            split=split,
        )
        scene.clean()
        return scene
