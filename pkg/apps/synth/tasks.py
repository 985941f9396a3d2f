import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from apps.cli_io.datasets import DatasetHeader, write_dataset
from apps.geometry.models import Scene
from apps.synth.models import NoiseConfig, SceneConfig
from apps.synth.services import generate_scene, perturb_trip
from crowdmap.exceptions import ValidationError

logger = logging.getLogger(__name__)

DEFAULT_TRIPS_PER_SCENE = 10


def _derive_seed(*parts: int) -> int:
    """Независимый 64-битный сид для (датасет, сцена[, проезд])."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1, np.uint64)[0])


def split_for(scene_id: str, val_fraction: float) -> str:
    """train/val по хэшу scene_id — стабильно при любом порядке генерации."""
    digest = hashlib.sha256(scene_id.encode("utf-8")).hexdigest()
    bucket = int(digest[:8], 16) / 0xFFFFFFFF
    return "val" if bucket < val_fraction else "train"


def config_hash(scene_config: SceneConfig, noise: NoiseConfig, trips_per_scene: int, seed: int) -> str:
    payload = {
        "scene": scene_config.as_dict(),
        "noise": noise.as_dict(),
        "trips_per_scene": trips_per_scene,
        "seed": seed,
    }
    encoded = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(encoded.encode("utf-8")).hexdigest()


def build_scene(index: int, scene_config: SceneConfig, noise: NoiseConfig,
                trips_per_scene: int, seed: int, val_fraction: float = 0.2) -> Scene:
    """Одна сцена: эталон + trips_per_scene зашумлённых проездов."""
    scene_id = f"{seed}-{index:05d}"
    scene = generate_scene(scene_config, seed=_derive_seed(seed, index), scene_id=scene_id)
    scene.trips = [
        perturb_trip(scene.gt_elements, noise, _derive_seed(seed, index, trip_id + 1),
                     frame=scene.bounds, trip_id=trip_id)
        for trip_id in range(trips_per_scene)
    ]
    scene.split = split_for(scene_id, val_fraction)
    scene.clean()
    return scene


def build_records(scene_count: int, scene_config: SceneConfig, noise: NoiseConfig,
                  trips_per_scene: int = DEFAULT_TRIPS_PER_SCENE, seed: int = 0,
                  val_fraction: float = 0.2, workers: int = 1) -> list[Scene]:
    """Сцены в памяти; порядок — по индексу сцены независимо от workers."""
    if scene_count < 0 or trips_per_scene < 1:
        raise ValidationError("scene_count ≥ 0 и trips_per_scene ≥ 1",
                              {"scene_count": scene_count, "trips_per_scene": trips_per_scene})

    def job(index: int) -> Scene:
        return build_scene(index, scene_config, noise, trips_per_scene, seed, val_fraction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(scene_count)))
    return [job(i) for i in range(scene_count)]


def build_dataset(scene_count: int, scene_config: SceneConfig, noise: NoiseConfig,
                  trips_per_scene: int, seed: int, path: Path,
                  val_fraction: float = 0.2, workers: int = 1) -> Path:
    """Генерация + запись датасета (JSON Lines, запись через временный файл)."""
    scenes = build_records(scene_count, scene_config, noise, trips_per_scene, seed, val_fraction, workers)
    header = DatasetHeader(
        config_hash=config_hash(scene_config, noise, trips_per_scene, seed),
        scene_config=scene_config.as_dict(),
        noise=noise.as_dict(),
        trips_per_scene=trips_per_scene,
        seed=seed,
    )
    path = write_dataset(Path(path), header, scenes)
    n_val = sum(s.split == "val" for s in scenes)
    logger.info("dataset %s: %d scenes (%d val), %d trips per scene, preset=%s",
                path, len(scenes), n_val, trips_per_scene, noise.severity_preset)
    return path
