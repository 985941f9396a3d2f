import numpy as np
import pytest

from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame
from apps.geometry.services import chamfer_distance
from apps.synth.models import SEVERITY_ORDER, SEVERITY_PRESETS, NoiseConfig
from apps.synth.services import generate_scene, perturb_trip
from crowdmap.exceptions import ValidationError


def test_zero_noise_is_identity(scene_config, zero_noise):
    scene = generate_scene(scene_config)
    trip = perturb_trip(scene.gt_elements, zero_noise, trip_seed=99, frame=scene.bounds)
    assert len(trip.elements) == len(scene.gt_elements)
    for got, expected in zip(trip.elements, scene.gt_elements):
        assert got.same_geometry(expected)
        assert chamfer_distance(got.points, expected.points) == 0.0


def test_full_dropout_gives_empty_trip(scene_config):
    scene = generate_scene(scene_config)
    noise = NoiseConfig.zero(element_dropout_prob=1.0)
    trip = perturb_trip(scene.gt_elements, noise, trip_seed=1, frame=scene.bounds)
    assert trip.elements == []


def test_jitter_std_matches_sigma():
    xs = np.linspace(0, 50, 10_000)
    line = MapElement(ElementCategory.LANE_DIVIDER, np.column_stack([xs, np.full_like(xs, 5.0)]))
    noise = NoiseConfig.zero(point_jitter_sigma=0.2)
    trip = perturb_trip([line], noise, trip_seed=4)
    diff = trip.elements[0].points - line.points
    for axis in (0, 1):
        assert 0.19 <= diff[:, axis].std() <= 0.21


def test_trip_is_deterministic_and_inside_bounds(scene_config):
    scene = generate_scene(scene_config)
    noise = NoiseConfig.from_preset("night")
    a = perturb_trip(scene.gt_elements, noise, trip_seed=5, frame=scene.bounds)
    b = perturb_trip(scene.gt_elements, noise, trip_seed=5, frame=scene.bounds)
    assert len(a.elements) == len(b.elements)
    assert all(x.same_geometry(y) for x, y in zip(a.elements, b.elements))
    for element in a.elements:
        assert scene.bounds.contains(element.points)


def test_truncation_keeps_at_least_half():
    line = MapElement(ElementCategory.LANE_DIVIDER, [(0, 0), (20, 0)])
    noise = NoiseConfig.zero(partial_observation_prob=1.0)
    for seed in range(50):
        (piece,) = perturb_trip([line], noise, trip_seed=seed).elements
        assert piece.points[-1][0] - piece.points[0][0] >= 10.0 - 1e-9


def test_spurious_elements_appear():
    noise = NoiseConfig.zero(spurious_element_rate=5.0)
    frame = NormalizationFrame.square(60)
    trip = perturb_trip([], noise, trip_seed=3, frame=frame)
    assert len(trip.elements) > 0
    assert all(e.meta.get("spurious") for e in trip.elements)


def test_severity_presets_are_totally_ordered():
    for field_name in SEVERITY_PRESETS["normal"]:
        values = [SEVERITY_PRESETS[name][field_name] for name in SEVERITY_ORDER]
        assert values == sorted(values), field_name
    night = NoiseConfig.from_preset("night")
    normal = NoiseConfig.from_preset("normal")
    assert night.point_jitter_sigma > normal.point_jitter_sigma
    assert night.element_dropout_prob > normal.element_dropout_prob


def test_noise_validation():
    with pytest.raises(ValidationError):
        NoiseConfig(point_jitter_sigma=-0.1)
    with pytest.raises(ValidationError):
        NoiseConfig.from_preset("fog")
