import logging
import os
import tempfile
from pathlib import Path

import numpy as np
import torch

from apps.fusion.models import Batch, ModelConfig, ModelOutput, PreparedScene
from apps.fusion.modules import TripAwareTransformer
from apps.geometry.models import ElementCategory, MapElement, NormalizationFrame, PerceivedTrip, Scene
from apps.geometry.services import denormalize, normalize, rasterize, resample_uniform
from apps.matcher.models import Targets
from crowdmap import settings
from crowdmap.exceptions import CapacityError, CheckpointError, ValidationError

logger = logging.getLogger(__name__)


# ---------- подготовка входа ----------

def prepare_scene(scene: Scene, n_points: int) -> PreparedScene:
    """Каждый элемент проезда -> N_p точек, нормализация по scene.bounds."""
    trips = []
    for trip in sorted(scene.trips, key=lambda t: t.trip_id):
        labels = np.asarray([int(e.category) for e in trip.elements], dtype=np.int64)
        if trip.elements:
            points = np.stack([normalize(resample_uniform(e, n_points).points, scene.bounds)
                               for e in trip.elements])
        else:
            points = np.zeros((0, n_points, 2))
        trips.append((labels, points))
    return PreparedScene(scene.scene_id, scene.bounds, trips)


def crop_scene(scene: Scene, max_trips: int, max_elements: int) -> Scene:
    """Детерминированная обрезка под ёмкость: первые проезды по trip_id, первые элементы."""
    trips = sorted(scene.trips, key=lambda t: t.trip_id)[:max_trips]
    cropped = [PerceivedTrip(t.trip_id, list(t.elements[:max_elements])) for t in trips]
    n_dropped = sum(len(t.elements) for t in scene.trips) - sum(len(t.elements) for t in cropped)
    if n_dropped:
        logger.debug("scene %s cropped: %d elements dropped", scene.scene_id, n_dropped)
    return Scene(scene.scene_id, scene.bounds, scene.gt_elements, cropped, scene.split)


def _check_capacity(scene: Scene, config: ModelConfig):
    n_elements = max((len(t.elements) for t in scene.trips), default=0)
    if scene.n_trips > config.max_trips or n_elements > config.max_elements:
        raise CapacityError("Сцена превышает N_e_max / N_v_max модели",
                            {"scene_id": scene.scene_id, "trips": scene.n_trips, "max_trips": config.max_trips,
                             "elements": n_elements, "max_elements": config.max_elements})


def collate(scenes: list[Scene], config: ModelConfig, dtype=torch.float32) -> Batch:
    """Сцены -> тензоры с паддингом до (B, N_e_max, N_v_max, N_p) + цели для loss."""
    if not scenes:
        raise ValidationError("Пустой батч")
    n_points = config.points_per_element
    shape = (len(scenes), config.max_trips, config.max_elements, n_points)
    coords = np.zeros(shape + (2,))
    categories = np.zeros(shape, dtype=np.int64)
    mask = np.zeros(shape, dtype=bool)
    seg_masks = np.zeros((len(scenes), config.seg_height, config.seg_width), dtype=np.float32)
    targets = []

    for b, scene in enumerate(scenes):
        _check_capacity(scene, config)
        prepared = prepare_scene(scene, n_points)
        for t, (labels, points) in enumerate(prepared.trips):
            n = len(labels)
            coords[b, t, :n] = points
            categories[b, t, :n] = labels[:, None]
            mask[b, t, :n] = True
        targets.append(Targets.from_elements(scene.gt_elements, scene.bounds, config.n_point_queries))
        seg_masks[b] = rasterize(scene.gt_elements, scene.bounds, config.seg_height, config.seg_width,
                                 config.seg_line_width)

    return Batch(
        coords=torch.as_tensor(coords, dtype=dtype),
        categories=torch.as_tensor(categories),
        mask=torch.as_tensor(mask),
        targets=targets,
        seg_masks=torch.as_tensor(seg_masks, dtype=dtype),
        frames=[s.bounds for s in scenes],
        scene_ids=[s.scene_id for s in scenes],
    )


def concat_batches(batches: list[Batch]) -> Batch:
    """Склейка уже собранных батчей (тренер кэширует сцены по одной)."""
    if not batches:
        raise ValidationError("Пустой батч")
    return Batch(
        coords=torch.cat([b.coords for b in batches]),
        categories=torch.cat([b.categories for b in batches]),
        mask=torch.cat([b.mask for b in batches]),
        targets=[t for b in batches for t in b.targets],
        seg_masks=torch.cat([b.seg_masks for b in batches]),
        frames=[f for b in batches for f in b.frames],
        scene_ids=[s for b in batches for s in b.scene_ids],
    )


# ---------- модель ----------

def build_model(config: ModelConfig, seed: int = 0) -> TripAwareTransformer:
    """Инициализация параметров детерминирована по seed."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = TripAwareTransformer(config)
    logger.debug("model built: %d parameters", parameter_count(config))
    return model


def forward(model: TripAwareTransformer, batch: Batch) -> ModelOutput:
    return model(batch.coords, batch.categories, batch.mask)


def parameter_count(config: ModelConfig) -> int:
    """Число обучаемых параметров в замкнутом виде (совпадает с суммой numel)."""
    d, f, k = config.d_model, config.ffn_dim, config.n_categories
    attention = 4 * d * d + 4 * d
    norm = 2 * d
    ffn = 2 * d * f + f + d

    def mlp(i, h, o):
        return i * h + h + h * o + o

    in_dim = d + 4 * config.n_frequencies
    total = mlp(k, d, d)
    if config.use_trip_embedding:
        total += (config.max_trips + config.max_elements) * d
        in_dim += 2 * d
    total += mlp(in_dim, d, d)
    total += d  # null-токен
    total += config.n_encoder_layers * (attention + ffn + 2 * norm)
    total += (config.n_instance_queries + config.n_point_queries) * d
    total += config.n_decoder_layers * (3 * attention + ffn + 4 * norm)
    total += d * config.n_outputs + config.n_outputs
    total += mlp(d, d, 2)
    if config.use_seg_branch:
        total += config.seg_height * config.seg_width * d + attention + norm + mlp(d, d, 1)
    return total


# ---------- постобработка ----------

def _drop_closing_repeats(points: np.ndarray) -> np.ndarray:
    """Убирает из конца контура точки, совпадающие с первой (контур замыкается неявно)."""
    end = len(points)
    while end > 2 and np.array_equal(points[end - 1], points[0]):
        end -= 1
    return points[:end]


def decode_to_elements(output: ModelOutput, frame: NormalizationFrame, score_threshold: float,
                       index: int = 0, sort: bool = True) -> list[tuple[MapElement, float]]:
    """
    Экземпляр -> элемент карты: confidence = max вероятность среди объектов (без фона),
    категория = argmax среди объектов, точки денормализуются; crosswalk -> closed.
    """
    with torch.no_grad():
        probs = torch.softmax(output.class_logits[index].double(), dim=-1)[:, :-1].cpu().numpy()
        points = output.points[index].detach().double().cpu().numpy()

    result = []
    for inst in range(len(probs)):
        confidence = float(probs[inst].max())
        if confidence < score_threshold:
            continue
        category = ElementCategory(int(probs[inst].argmax()))
        closed = category == ElementCategory.CROSSWALK
        coords = denormalize(points[inst], frame)
        if closed:
            coords = _drop_closing_repeats(coords)
        meta = {"instance": inst}
        if np.all(coords == coords[0]):
            meta["degenerate"] = True
        element = MapElement(category, coords, closed=closed, meta=meta)
        result.append((element, confidence))
    if sort:
        result.sort(key=lambda pair: -pair[1])
    return result


# ---------- чекпоинты ----------

def save_checkpoint(path, model: TripAwareTransformer, step: int = 0, optimizer=None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": settings.CHECKPOINT_FORMAT_VERSION,
        "model_config": model.config.as_dict(),
        "state_dict": model.state_dict(),
        "step": int(step),
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
        "extra": extra or {},
    }
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    os.close(fd)
    try:
        torch.save(payload, tmp_name)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info("checkpoint saved: %s (step %d)", path, step)
    return path


def load_checkpoint(path, map_location="cpu") -> tuple[TripAwareTransformer, dict]:
    """Возвращает (модель, сырое содержимое чекпоинта)."""
    path = Path(path)
    if not path.exists():
        raise CheckpointError("Чекпоинт не найден", {"path": str(path)})
    try:
        payload = torch.load(path, map_location=map_location, weights_only=True)
    except Exception as exc:
        raise CheckpointError("Не удалось прочитать чекпоинт", {"path": str(path), "error": str(exc)}) from exc

    version = payload.get("format_version") if isinstance(payload, dict) else None
    if version != settings.CHECKPOINT_FORMAT_VERSION:
        raise CheckpointError("Неподдерживаемая версия чекпоинта", {"path": str(path), "format_version": version})

    try:
        config = ModelConfig.from_dict(payload["model_config"])
        model = TripAwareTransformer(config)
        model.load_state_dict(payload["state_dict"])
    except (KeyError, RuntimeError, ValidationError) as exc:
        raise CheckpointError("Чекпоинт не соответствует модели", {"path": str(path), "error": str(exc)}) from exc
    return model, payload
