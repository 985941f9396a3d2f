"""
RunConfig: один YAML-документ (scene / noise / model / loss / train / eval / dataset).
Схема проверяется до любых вычислений; неизвестные ключи отклоняются на любом уровне.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml
from jsonschema import Draft202012Validator

from apps.fusion.models import ModelConfig
from apps.losses.models import LossWeights
from apps.synth.models import SEVERITY_ORDER, NoiseConfig, SceneConfig
from apps.trainer.models import TrainConfig
from crowdmap import settings
from crowdmap.exceptions import ConfigError, ValidationError

logger = logging.getLogger(__name__)

_POSITIVE = {"type": "number", "exclusiveMinimum": 0}
_NON_NEGATIVE = {"type": "number", "minimum": 0}
_PROBABILITY = {"type": "number", "minimum": 0, "maximum": 1}
_COUNT = {"type": "integer", "minimum": 1}


def _section(properties: dict) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": properties}


RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "version": {"const": settings.RUN_CONFIG_VERSION},
        "scene": _section({
            "frame_size": _POSITIVE,
            "lanes": {"type": "array", "items": _COUNT, "minItems": 2, "maxItems": 2},
            "lane_spacing": _POSITIVE,
            "curvature": _NON_NEGATIVE,
            "stop_line_prob": _PROBABILITY,
            "crosswalk_prob": _PROBABILITY,
        }),
        "noise": _section({
            "severity_preset": {"enum": [*SEVERITY_ORDER, "zero", "custom"]},
            "point_jitter_sigma": _NON_NEGATIVE,
            "trip_drift_sigma": _NON_NEGATIVE,
            "trip_rotation_sigma": _NON_NEGATIVE,
            "element_dropout_prob": _PROBABILITY,
            "spurious_element_rate": _NON_NEGATIVE,
            "partial_observation_prob": _PROBABILITY,
        }),
        "model": _section({
            "preset": {"enum": ["desk", "full"]},
            "d_model": _COUNT,
            "n_heads": _COUNT,
            "n_encoder_layers": {"type": "integer", "minimum": 0},
            "n_decoder_layers": _COUNT,
            "n_instance_queries": _COUNT,
            "n_point_queries": {"type": "integer", "minimum": 2},
            "max_trips": _COUNT,
            "max_elements": _COUNT,
            "points_per_element": {"type": "integer", "minimum": 2},
            "seg_height": _COUNT,
            "seg_width": _COUNT,
            "ffn_dim": _COUNT,
            "n_frequencies": _COUNT,
            "dropout": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "seg_line_width": _POSITIVE,
            "use_trip_embedding": {"type": "boolean"},
            "use_seg_branch": {"type": "boolean"},
        }),
        "loss": _section({
            "alpha_cls": _NON_NEGATIVE,
            "alpha_p2p": _NON_NEGATIVE,
            "alpha_dir": _NON_NEGATIVE,
            "alpha_seg": _NON_NEGATIVE,
            "focal_alpha": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
            "focal_gamma": _NON_NEGATIVE,
        }),
        "train": _section({
            "learning_rate": _POSITIVE,
            "weight_decay": _NON_NEGATIVE,
            "batch_size": _COUNT,
            "total_steps": {"type": "integer", "minimum": 0},
            "grad_clip_norm": _POSITIVE,
            "eval_every": {"type": "integer", "minimum": 0},
            "checkpoint_every": {"type": "integer", "minimum": 0},
            "log_every": {"type": "integer", "minimum": 0},
        }),
        "eval": _section({
            "score_threshold": _PROBABILITY,
            "thresholds": {"type": "array", "items": _POSITIVE, "minItems": 1},
        }),
        "dataset": _section({
            "scene_count": {"type": "integer", "minimum": 0},
            "trips_per_scene": _COUNT,
            "val_fraction": _PROBABILITY,
            "workers": _COUNT,
        }),
    },
}

_VALIDATOR = Draft202012Validator(RUN_CONFIG_SCHEMA)


@dataclass(frozen=True)
class EvalConfig:
    score_threshold: float = settings.SCORE_THRESHOLD
    thresholds: tuple[float, ...] = settings.EVAL_THRESHOLDS


@dataclass(frozen=True)
class DatasetConfig:
    scene_count: int = 64
    trips_per_scene: int = 10
    val_fraction: float = 0.2
    workers: int = 1


@dataclass(frozen=True)
class RunConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    source: str | None = None

    def with_seed(self, seed: int) -> "RunConfig":
        """--seed CLI: все источники случайности выводятся из одного числа."""
        return RunConfig(
            scene=SceneConfig(**{**self.scene.as_dict(), "seed": seed}),
            noise=self.noise, model=self.model, loss=self.loss,
            train=TrainConfig(**{**self.train.as_dict(), "seed": seed}),
            eval=self.eval, dataset=self.dataset, source=self.source,
        )


def _json_path(error) -> str:
    return "$" + "".join(f"[{p}]" if isinstance(p, int) else f".{p}" for p in error.absolute_path)


def validate_document(document, source: str = "<config>") -> dict:
    if document is None:
        document = {}
    if not isinstance(document, dict):
        raise ConfigError("RunConfig должен быть YAML-объектом", {"file": source})
    errors = sorted(_VALIDATOR.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        first = errors[0]
        raise ConfigError(f"Ошибка схемы: {first.message}",
                          {"file": source, "path": _json_path(first), "errors": len(errors)})
    return document


def _noise_from(section: dict) -> NoiseConfig:
    section = dict(section)
    preset = section.pop("severity_preset", "normal")
    if preset == "custom":
        return NoiseConfig(**section, severity_preset="custom")
    return NoiseConfig.from_preset(preset, **section)


def _model_from(section: dict) -> ModelConfig:
    section = dict(section)
    preset = section.pop("preset", "desk")
    factory = ModelConfig.full if preset == "full" else ModelConfig.desk
    return factory(**section)


def _check_capacity(config: RunConfig) -> RunConfig:
    limit = config.scene.max_gt_elements
    if config.model.n_instance_queries < limit:
        raise ConfigError(
            "n_instance_queries меньше максимального числа эталонных элементов сцены",
            {"file": config.source, "path": "$.model.n_instance_queries",
             "n_instance_queries": config.model.n_instance_queries, "max_gt_elements": limit},
        )
    return config


def run_config_from_dict(document, source: str = "<config>") -> RunConfig:
    document = validate_document(document, source)
    try:
        scene = document.get("scene", {})
        evaluation = document.get("eval", {})
        config = RunConfig(
            scene=SceneConfig(**scene),
            noise=_noise_from(document.get("noise", {})),
            model=_model_from(document.get("model", {})),
            loss=LossWeights(**document.get("loss", {})),
            train=TrainConfig(**document.get("train", {})),
            eval=EvalConfig(
                score_threshold=evaluation.get("score_threshold", settings.SCORE_THRESHOLD),
                thresholds=tuple(evaluation.get("thresholds", settings.EVAL_THRESHOLDS)),
            ),
            dataset=DatasetConfig(**document.get("dataset", {})),
            source=source,
        )
    except ValidationError as exc:
        # диапазоны, которые схема не выражает (например, дорога шире кадра)
        raise ConfigError(exc.message, {"file": source, **exc.payload}) from None
    return _check_capacity(config)


def load_run_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError("Файл конфигурации не найден", {"file": str(path)})
    try:
        document = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError("Некорректный YAML", {"file": str(path), "error": str(exc).splitlines()[0]}) from None
    config = run_config_from_dict(document, str(path))
    logger.debug("run config loaded from %s", path)
    return config
