import pytest

from apps.geometry.models import ElementCategory, FusedScene, MapElement, NormalizationFrame, Scene


@pytest.fixture
def frame():
    return NormalizationFrame.square(60.0)


@pytest.fixture
def lane():
    return MapElement(ElementCategory.LANE_DIVIDER, [(10, 30), (50, 30)])


@pytest.fixture
def lane_scene(frame, lane):
    """Одна линия разметки, окно оценки совпадает со сценой."""
    return Scene("m-0", frame, [lane])


@pytest.fixture
def shifted():
    def factory(element, dy):
        return element.with_points(element.points + [0.0, dy])
    return factory


@pytest.fixture
def fused(frame):
    def factory(*pairs, scene_id="m-0"):
        return FusedScene(scene_id, frame, list(pairs))
    return factory
