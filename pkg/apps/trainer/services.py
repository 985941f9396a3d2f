import logging
import math

import torch
from torch import nn

from apps.fusion.models import ModelConfig
from apps.fusion.services import collate, crop_scene, decode_to_elements, forward, load_checkpoint
from apps.geometry.models import FusedScene, Scene
from apps.metrics.models import EvalReport
from apps.metrics.services import evaluate
from apps.trainer.models import ADAM_BETAS, ADAM_EPS, TrainConfig
from crowdmap import settings

logger = logging.getLogger(__name__)


def learning_rate_at(step: int, config: TrainConfig) -> float:
    """Косинусное затухание до нуля за total_steps, без warmup."""
    if config.total_steps == 0:
        return config.learning_rate
    t = min(max(step, 0), config.total_steps)
    return config.learning_rate * 0.5 * (1.0 + math.cos(math.pi * t / config.total_steps))


def parameter_groups(model: nn.Module, weight_decay: float) -> list[dict]:
    """Decay только для параметров с ndim ≥ 2 (веса, эмбеддинги); bias и LayerNorm — без."""
    decay, no_decay = [], []
    for _, param in sorted(model.named_parameters(), key=lambda item: item[0]):
        if not param.requires_grad:
            continue
        (decay if param.ndim >= 2 else no_decay).append(param)
    return [
        {"params": decay, "weight_decay": weight_decay},
        {"params": no_decay, "weight_decay": 0.0},
    ]


def build_optimizer(model: nn.Module, config: TrainConfig) -> torch.optim.AdamW:
    return torch.optim.AdamW(
        parameter_groups(model, config.weight_decay),
        lr=learning_rate_at(0, config), betas=ADAM_BETAS, eps=ADAM_EPS,
    )


def clip_gradients(params: list[torch.Tensor], max_norm: float) -> float:
    """Клиппинг по глобальной норме; возвращает норму до клиппинга, после — не больше max_norm."""
    return float(torch.nn.utils.clip_grad_norm_(params, max_norm))


def fit_scenes(scenes: list[Scene], config: ModelConfig) -> list[Scene]:
    return [crop_scene(s, config.max_trips, config.max_elements) for s in scenes]


# ---------- инференс и оценка ----------

def predict_scenes(model, scenes: list[Scene], score_threshold: float = settings.SCORE_THRESHOLD,
                   batch_size: int = 4) -> list[FusedScene]:
    """Forward + decode_to_elements; модель в режиме eval, без градиентов."""
    config = model.config
    dtype = next(model.parameters()).dtype
    was_training = model.training
    model.eval()
    fused = []
    try:
        with torch.no_grad():
            scenes = fit_scenes(scenes, config)
            for start in range(0, len(scenes), batch_size):
                chunk = scenes[start:start + batch_size]
                output = forward(model, collate(chunk, config, dtype=dtype))
                for index, scene in enumerate(chunk):
                    elements = decode_to_elements(output, scene.bounds, score_threshold, index=index)
                    fused.append(FusedScene(scene.scene_id, scene.bounds, elements))
    finally:
        model.train(was_training)
    return fused


def evaluate_predictions(pred_scenes: list[FusedScene], gt_scenes: list[Scene],
                         thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS) -> EvalReport:
    return evaluate(pred_scenes, gt_scenes, thresholds)


def evaluate_model(model, scenes: list[Scene], score_threshold: float = settings.SCORE_THRESHOLD,
                   thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS, batch_size: int = 4) -> EvalReport:
    return evaluate_predictions(predict_scenes(model, scenes, score_threshold, batch_size), scenes, thresholds)


def evaluate_checkpoint(checkpoint, scenes: list[Scene], score_threshold: float = settings.SCORE_THRESHOLD,
                        thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS) -> EvalReport:
    model, payload = load_checkpoint(checkpoint)
    logger.info("evaluating checkpoint %s (step %s) on %d scenes", checkpoint, payload.get("step"), len(scenes))
    return evaluate_model(model, scenes, score_threshold, thresholds)
