"""
Трендовые эксперименты на синтетике: число проездов, тяжесть условий, абляция компонент.
Каждая точка — обучение с нуля и оценка на val, среднее по сидам.
"""
import logging
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from apps.cli_io.run_config import RunConfig
from apps.experiments.models import ExperimentTable
from apps.fusion.services import load_checkpoint
from apps.geometry.models import Scene
from apps.synth.models import SEVERITY_ORDER, NoiseConfig
from apps.synth.tasks import build_records
from apps.trainer.services import evaluate_model
from apps.trainer.tasks import train

logger = logging.getLogger(__name__)

FUSION_TRIP_COUNTS = (1, 3, 10)

# вариант: (проездов, эмбеддинг проезда/элемента, сегментационная ветка)
ABLATION_VARIANTS = {
    "A": (3, False, False),
    "B": (10, False, False),
    "C": (10, True, False),
    "D": (10, False, True),
    "E": (10, True, True),
}


def _records(config: RunConfig, seed: int, noise: NoiseConfig | None = None,
             trips_per_scene: int | None = None) -> tuple[list[Scene], list[Scene]]:
    scenes = build_records(
        config.dataset.scene_count, replace(config.scene, seed=seed), noise or config.noise,
        trips_per_scene=trips_per_scene or config.dataset.trips_per_scene, seed=seed,
        val_fraction=config.dataset.val_fraction, workers=config.dataset.workers,
    )
    train_scenes = [s for s in scenes if s.split == "train"]
    val_scenes = [s for s in scenes if s.split == "val"]
    if not train_scenes or not val_scenes:
        logger.warning("seed %d: empty train or val split, evaluating on the full set", seed)
        return scenes, scenes
    return train_scenes, val_scenes


def _with_trips(scenes: list[Scene], n_trips: int) -> list[Scene]:
    """Первые n_trips проездов по trip_id (эталон не меняется)."""
    return [
        Scene(s.scene_id, s.bounds, s.gt_elements, sorted(s.trips, key=lambda t: t.trip_id)[:n_trips], s.split)
        for s in scenes
    ]


def train_and_evaluate(config: RunConfig, train_scenes: list[Scene], val_scenes: list[Scene],
                       seed: int, work_dir: Path) -> float:
    """Одна точка тренда: обучение с нуля -> mAP на val."""
    train_config = replace(config.train, seed=seed, eval_every=0, checkpoint_every=0)
    result = train(train_scenes, config.model, config.loss, train_config, work_dir,
                   score_threshold=config.eval.score_threshold, thresholds=config.eval.thresholds)
    model, _ = load_checkpoint(result.checkpoint)
    report = evaluate_model(model, val_scenes, config.eval.score_threshold, config.eval.thresholds)
    return report.mAP


def _work_dir(root: Path | None, *parts) -> Path:
    base = Path(root) if root is not None else Path(tempfile.mkdtemp(prefix="crowdmap-exp-"))
    path = base.joinpath(*(str(p) for p in parts))
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_fusion_trend(config: RunConfig, seeds=(0, 1, 2), trip_counts=FUSION_TRIP_COUNTS,
                     work_dir: Path | None = None) -> ExperimentTable:
    scores = {k: [] for k in trip_counts}
    for seed in seeds:
        train_scenes, val_scenes = _records(config, seed, trips_per_scene=max(trip_counts))
        for k in trip_counts:
            score = train_and_evaluate(config, _with_trips(train_scenes, k), _with_trips(val_scenes, k),
                                       seed, _work_dir(work_dir, "fusion", seed, k))
            logger.info("fusion trend: seed %d, trips %d -> mAP %.4f", seed, k, score)
            scores[k].append(score)
    rows = [{"trips": k, "mAP": float(np.mean(scores[k]))} for k in trip_counts]
    return ExperimentTable("Fusion vs number of trips", ["trips", "mAP"], rows, tuple(seeds))


def run_severity_trend(config: RunConfig, seeds=(0, 1, 2), presets=SEVERITY_ORDER,
                       work_dir: Path | None = None) -> ExperimentTable:
    fused_trips, single_trips = max(FUSION_TRIP_COUNTS), min(FUSION_TRIP_COUNTS)
    rows = []
    for preset in presets:
        noise = NoiseConfig.from_preset(preset)
        fused, single = [], []
        for seed in seeds:
            train_scenes, val_scenes = _records(config, seed, noise, trips_per_scene=fused_trips)
            fused.append(train_and_evaluate(config, train_scenes, val_scenes, seed,
                                            _work_dir(work_dir, "severity", preset, seed, "fused")))
            single.append(train_and_evaluate(config, _with_trips(train_scenes, single_trips),
                                             _with_trips(val_scenes, single_trips), seed,
                                             _work_dir(work_dir, "severity", preset, seed, "single")))
        row = {"preset": preset, "single": float(np.mean(single)), "fused": float(np.mean(fused))}
        row["gap"] = row["fused"] - row["single"]
        logger.info("severity trend: %s fused %.4f single %.4f", preset, row["fused"], row["single"])
        rows.append(row)
    return ExperimentTable("Fused vs single trip by severity", ["preset", "single", "fused", "gap"],
                           rows, tuple(seeds))


def run_ablation(config: RunConfig, seeds=(0, 1, 2), variants=tuple(ABLATION_VARIANTS),
                 work_dir: Path | None = None) -> ExperimentTable:
    max_trips = max(ABLATION_VARIANTS[v][0] for v in variants)
    scores = {v: [] for v in variants}
    for seed in seeds:
        train_scenes, val_scenes = _records(config, seed, trips_per_scene=max_trips)
        for name in variants:
            n_trips, trip_embedding, seg_branch = ABLATION_VARIANTS[name]
            variant = replace(config, model=replace(config.model, use_trip_embedding=trip_embedding,
                                                    use_seg_branch=seg_branch))
            scores[name].append(train_and_evaluate(
                variant, _with_trips(train_scenes, n_trips), _with_trips(val_scenes, n_trips), seed,
                _work_dir(work_dir, "ablation", seed, name),
            ))
    rows = []
    for name in variants:
        n_trips, trip_embedding, seg_branch = ABLATION_VARIANTS[name]
        rows.append({"variant": name, "trips": n_trips, "trip_embedding": trip_embedding,
                     "seg_branch": seg_branch, "mAP": float(np.mean(scores[name]))})
    return ExperimentTable("Ablation", ["variant", "trips", "trip_embedding", "seg_branch", "mAP"],
                           rows, tuple(seeds))


EXPERIMENTS = {
    "fusion": run_fusion_trend,
    "severity": run_severity_trend,
    "ablation": run_ablation,
}
