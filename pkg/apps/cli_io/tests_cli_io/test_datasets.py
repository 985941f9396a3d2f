import json

import pytest
from hypothesis import given, settings, strategies as st

from apps.cli_io.datasets import DatasetHeader, read_dataset, read_fused, write_dataset, write_fused
from apps.geometry.models import FusedScene
from apps.synth.models import SEVERITY_ORDER, NoiseConfig, SceneConfig
from apps.synth.tasks import build_records
from crowdmap.exceptions import DatasetFormatError


def test_scene_survives_file(hand_scene, tmp_path):
    path = write_dataset(tmp_path / "ds.jsonl", DatasetHeader(config_hash="abc"), [hand_scene])
    header, scenes = read_dataset(path)
    assert header.config_hash == "abc"
    (scene,) = scenes
    assert scene.scene_id == hand_scene.scene_id
    assert scene.bounds == hand_scene.bounds
    assert [t.trip_id for t in scene.trips] == [0, 1]
    assert all(a.same_geometry(b) for a, b in zip(scene.gt_elements, hand_scene.gt_elements))
    assert not list(tmp_path.glob(".*.tmp"))


def test_split_filter(hand_scene, tmp_path):
    path = write_dataset(tmp_path / "ds.jsonl", DatasetHeader(config_hash="x"), [hand_scene])
    assert read_dataset(path, "val")[1] == []
    assert len(read_dataset(path, "train")[1]) == 1


def test_fused_confidences(hand_scene, tmp_path):
    fused = FusedScene(hand_scene.scene_id, hand_scene.bounds, [(e, 0.25) for e in hand_scene.gt_elements])
    (restored,) = read_fused(write_fused(tmp_path / "fused.jsonl", [fused]))
    assert [c for _, c in restored.elements] == [0.25, 0.25, 0.25]
    assert restored.elements[2][0].closed


@pytest.mark.parametrize(("lines", "record"), [
    (['{"format": "other", "format_version": 1}'], 1),
    (['{"format": "crowdmap-dataset", "format_version": 99, "config_hash": "x"}'], 1),
    (['{"format": "crowdmap-dataset", "format_version": 1, "config_hash": "x"}', "{broken"], 2),
    (['{"format": "crowdmap-dataset", "format_version": 1, "config_hash": "x"}',
      json.dumps({"scene_id": "s", "bounds": [0, 0, 10, 10], "gt": [],
                  "trips": [{"trip_id": 0, "elements": [{"category": "lane_divider", "closed": False,
                                                         "points": [[1, 1]]}]}]})], 2),
])
def test_broken_dataset_names_record(tmp_path, lines, record):
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    with pytest.raises(DatasetFormatError) as info:
        read_dataset(path)
    assert info.value.payload["record"] == record
    assert info.value.payload["file"] == str(path)


def test_missing_file(tmp_path):
    with pytest.raises(DatasetFormatError):
        read_dataset(tmp_path / "none.jsonl")


def test_rewrite_is_fixed_point(small_scenes, tmp_path):
    header = DatasetHeader(config_hash="h", trips_per_scene=3, seed=11)
    first = write_dataset(tmp_path / "a.jsonl", header, small_scenes)
    again_header, scenes = read_dataset(first)
    second = write_dataset(tmp_path / "b.jsonl", again_header, scenes)
    assert first.read_bytes() == second.read_bytes()


@settings(max_examples=1000, deadline=None)
@given(
    seed=st.integers(0, 2**31 - 1),
    preset=st.sampled_from(SEVERITY_ORDER),
    trips=st.integers(1, 4),
    val_fraction=st.sampled_from([0.0, 0.5, 1.0]),
)
def test_random_dataset_rewrite_is_fixed_point(tmp_path_factory, seed, preset, trips, val_fraction):
    scenes = build_records(2, SceneConfig(seed=seed), NoiseConfig.from_preset(preset), trips_per_scene=trips,
                           seed=seed, val_fraction=val_fraction)
    folder = tmp_path_factory.mktemp("roundtrip")
    header = DatasetHeader(config_hash=f"{seed:x}", trips_per_scene=trips, seed=seed)
    first = write_dataset(folder / "a.jsonl", header, scenes)
    again_header, restored = read_dataset(first)
    second = write_dataset(folder / "b.jsonl", again_header, restored)
    assert first.read_bytes() == second.read_bytes()
    assert [s.split for s in restored] == [s.split for s in scenes]
    for original, loaded in zip(scenes, restored):
        assert all(a.same_geometry(b) for a, b in zip(original.gt_elements, loaded.gt_elements))
        for trip_a, trip_b in zip(original.trips, loaded.trips):
            assert trip_a.trip_id == trip_b.trip_id
            assert all(a.same_geometry(b) for a, b in zip(trip_a.elements, trip_b.elements))
