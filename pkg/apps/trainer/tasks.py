"""
Цикл обучения: forward -> total_loss -> backward -> clip -> AdamW -> косинусный lr.
Детерминирован при фиксированном seed: порядок батчей зависит только от (seed, эпоха).
"""
import json
import logging
import math
from pathlib import Path

import numpy as np
import torch

from apps.fusion.models import ModelConfig
from apps.fusion.services import build_model, collate, concat_batches, forward, load_checkpoint, save_checkpoint
from apps.geometry.models import Scene
from apps.losses.models import LossWeights
from apps.losses.services import total_loss
from apps.trainer.models import TrainConfig, TrainResult
from apps.trainer.services import build_optimizer, clip_gradients, evaluate_model, fit_scenes, learning_rate_at
from crowdmap import settings
from crowdmap.exceptions import TrainingDivergedError, ValidationError

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.pt"
METRICS_LOG_NAME = "metrics.jsonl"


def batch_indices(step: int, n_scenes: int, batch_size: int, seed: int) -> np.ndarray:
    """Индексы сцен для шага: перестановка на эпоху из (seed, epoch), последний батч эпохи может быть короче."""
    per_epoch = math.ceil(n_scenes / batch_size)
    epoch, position = divmod(step, per_epoch)
    order = np.random.default_rng([seed, epoch]).permutation(n_scenes)
    return order[position * batch_size:(position + 1) * batch_size]


def _dump_divergence(out_dir: Path, step: int, batch, breakdown) -> Path:
    """JSON с лоссами и ссылкой на .pt с тензорами батча, на котором loss стал нечисловым."""
    path = out_dir / f"diverged-step{step:06d}.json"
    tensors_path = path.with_suffix(".pt")
    torch.save({
        "coords": batch.coords, "categories": batch.categories, "mask": batch.mask,
        "seg_masks": batch.seg_masks,
        "target_labels": [torch.from_numpy(t.labels) for t in batch.targets],
        "target_points": [torch.from_numpy(t.points) for t in batch.targets],
        "scene_ids": batch.scene_ids,
    }, tensors_path)
    record = {
        "step": step,
        "scene_ids": batch.scene_ids,
        "tensors": tensors_path.name,
        "loss": {k: (v if math.isfinite(v) else str(v)) for k, v in breakdown.as_floats().items()},
    }
    path.write_text(json.dumps(record, ensure_ascii=False, indent=2), encoding="utf-8")
    return path


def train(scenes: list[Scene], model_config: ModelConfig, weights: LossWeights, config: TrainConfig,
          out_dir, val_scenes: list[Scene] | None = None, resume_from=None,
          dtype=torch.float32, score_threshold: float = settings.SCORE_THRESHOLD,
          thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS) -> TrainResult:
    """
    Обучение на scenes; чекпоинт и JSONL-лог метрик пишутся в out_dir.
    resume_from — чекпоинт, с шага которого продолжаем (вместе с состоянием оптимизатора).
    score_threshold и thresholds — параметры промежуточной оценки на val_scenes (как у eval).
    """
    if not scenes:
        raise ValidationError("Пустой обучающий набор")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / CHECKPOINT_NAME
    log_path = out_dir / METRICS_LOG_NAME

    torch.manual_seed(config.seed)
    start_step = 0
    if resume_from is not None:
        model, payload = load_checkpoint(resume_from)
        start_step = int(payload["step"])
        model_config = model.config
    else:
        model = build_model(model_config, seed=config.seed)
    model = model.to(dtype)
    optimizer = build_optimizer(model, config)
    if resume_from is not None and payload.get("optimizer") is not None:
        optimizer.load_state_dict(payload["optimizer"])

    # сцены собираются по одной и кэшируются; батч — склейка
    scenes = fit_scenes(scenes, model_config)
    cached = [collate([scene], model_config, dtype=dtype) for scene in scenes]
    params = [p for group in optimizer.param_groups for p in group["params"]]

    logger.info("training %d scenes, steps %d..%d, batch %d", len(scenes), start_step, config.total_steps,
                config.batch_size)
    model.train()
    last_loss = None
    mode = "a" if resume_from is not None else "w"
    with log_path.open(mode, encoding="utf-8") as log:
        for step in range(start_step, config.total_steps):
            lr = learning_rate_at(step, config)
            for group in optimizer.param_groups:
                group["lr"] = lr

            batch = concat_batches([cached[i] for i in batch_indices(step, len(cached), config.batch_size,
                                                                       config.seed)])
            breakdown = total_loss(forward(model, batch), batch.targets, batch.seg_masks, weights)
            if not torch.isfinite(breakdown.total):
                dump = _dump_divergence(out_dir, step, batch, breakdown)
                raise TrainingDivergedError("Loss стал нечисловым", {"step": step, "dump": str(dump)})

            optimizer.zero_grad(set_to_none=True)
            breakdown.total.backward()
            grad_norm = clip_gradients(params, config.grad_clip_norm)
            optimizer.step()

            last_loss = float(breakdown.total)
            log.write(json.dumps({"kind": "step", "step": step + 1, "lr": lr, "grad_norm": grad_norm,
                                  **breakdown.as_floats()}) + "\n")
            if config.log_every and (step + 1) % config.log_every == 0:
                logger.info("step %d/%d loss=%.5f lr=%.3g", step + 1, config.total_steps, last_loss, lr)
            if val_scenes and config.eval_every and (step + 1) % config.eval_every == 0:
                report = evaluate_model(model, val_scenes, score_threshold, thresholds)
                log.write(json.dumps({"kind": "eval", "step": step + 1, "mAP": report.mAP,
                                      **{f"AP_{r.label}": r.ap for r in report.categories.values()}}) + "\n")
                model.train()
            if config.checkpoint_every and (step + 1) % config.checkpoint_every == 0:
                save_checkpoint(checkpoint_path, model, step + 1, optimizer)

    final_step = max(start_step, config.total_steps)
    save_checkpoint(checkpoint_path, model, final_step, optimizer)
    return TrainResult(checkpoint_path, log_path, final_step, last_loss)
