from dataclasses import asdict, dataclass, field, fields

import numpy as np
import torch

from apps.geometry.models import ElementCategory, NormalizationFrame
from apps.matcher.models import InstancePredictions, Targets
from crowdmap.exceptions import ValidationError

N_CATEGORIES = len(ElementCategory)

_COUNT_FIELDS = (
    "d_model", "n_heads", "n_decoder_layers", "n_instance_queries", "n_point_queries",
    "max_trips", "max_elements", "points_per_element", "seg_height", "seg_width", "ffn_dim", "n_frequencies",
)


@dataclass(frozen=True)
class ModelConfig:
    """Гиперпараметры Trip-Aware Transformer. По умолчанию — «настольный» масштаб."""
    d_model: int = 64
    n_heads: int = 4
    n_encoder_layers: int = 2
    n_decoder_layers: int = 4
    n_instance_queries: int = 15
    n_point_queries: int = 10
    n_categories: int = N_CATEGORIES
    max_trips: int = 10
    max_elements: int = 16
    points_per_element: int = 10
    seg_height: int = 50
    seg_width: int = 50
    ffn_dim: int = 128
    n_frequencies: int = 10
    dropout: float = 0.0
    seg_line_width: float = 1.5
    use_trip_embedding: bool = True
    use_seg_branch: bool = True

    def __post_init__(self):
        self.clean()

    def clean(self):
        bad = {name: getattr(self, name) for name in _COUNT_FIELDS if getattr(self, name) < 1}
        if bad or self.n_encoder_layers < 0:
            raise ValidationError("Размеры модели должны быть ≥ 1", {**bad, "n_encoder_layers": self.n_encoder_layers})
        if self.d_model % self.n_heads:
            raise ValidationError("d_model должно делиться на n_heads",
                                  {"d_model": self.d_model, "n_heads": self.n_heads})
        if self.n_categories != N_CATEGORIES:
            raise ValidationError("Поддерживаются ровно 3 категории", {"n_categories": self.n_categories})
        if self.points_per_element < 2 or self.n_point_queries < 2:
            raise ValidationError("Элемент описывается минимум 2 точками",
                                  {"points_per_element": self.points_per_element,
                                   "n_point_queries": self.n_point_queries})
        if not 0.0 <= self.dropout < 1.0:
            raise ValidationError("dropout вне [0, 1)", {"dropout": self.dropout})
        if self.seg_line_width <= 0:
            raise ValidationError("seg_line_width должен быть > 0", {"seg_line_width": self.seg_line_width})

    @classmethod
    def desk(cls, **overrides) -> "ModelConfig":
        return cls(**overrides)

    @classmethod
    def full(cls, **overrides) -> "ModelConfig":
        values = dict(
            d_model=256, n_heads=8, n_encoder_layers=2, n_decoder_layers=6,
            n_instance_queries=30, n_point_queries=30, max_trips=10, max_elements=30,
            points_per_element=30, ffn_dim=512,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError("Неизвестные поля ModelConfig", {"fields": sorted(unknown)})
        return cls(**data)

    def as_dict(self) -> dict:
        return asdict(self)

    @property
    def n_tokens(self) -> int:
        return self.max_trips * self.max_elements * self.points_per_element

    @property
    def n_outputs(self) -> int:
        return self.n_categories + 1


@dataclass
class TokenBatch:
    """features: (B, T, d_model); mask: (B, T), True — настоящий токен."""
    features: torch.Tensor
    mask: torch.Tensor

    def __post_init__(self):
        if self.features.shape[:2] != self.mask.shape:
            raise ValidationError("Форма mask не совпадает с features",
                                  {"features": tuple(self.features.shape), "mask": tuple(self.mask.shape)})


@dataclass
class LayerOutput:
    """Выходы голов одного слоя декодера."""
    class_logits: torch.Tensor  # (B, N_inst, K+1)
    points: torch.Tensor  # (B, N_inst, N_p, 2) в (0, 1)

    def item(self, index: int) -> InstancePredictions:
        return InstancePredictions(self.class_logits[index], self.points[index])


@dataclass
class ModelOutput:
    class_logits: torch.Tensor
    points: torch.Tensor
    seg_logits: torch.Tensor  # (B, H, W); нули, если сегментационная ветка выключена
    aux: list[LayerOutput] = field(default_factory=list)
    has_seg: bool = True

    def item(self, index: int) -> InstancePredictions:
        return InstancePredictions(self.class_logits[index], self.points[index])

    @property
    def final(self) -> LayerOutput:
        return LayerOutput(self.class_logits, self.points)

    @property
    def batch_size(self) -> int:
        return self.class_logits.shape[0]


@dataclass
class PreparedScene:
    """Сцена после ресэмплинга в N_p точек и нормализации bounds -> [0,1]²."""
    scene_id: str
    frame: NormalizationFrame
    # по проезду: (labels (n,), points (n, N_p, 2))
    trips: list[tuple[np.ndarray, np.ndarray]]


@dataclass
class Batch:
    """Паддинг до (B, N_e_max, N_v_max, N_p); mask — реальные точки."""
    coords: torch.Tensor  # float (B, N_e, N_v, N_p, 2)
    categories: torch.Tensor  # long (B, N_e, N_v, N_p)
    mask: torch.Tensor  # bool (B, N_e, N_v, N_p)
    targets: list[Targets]
    seg_masks: torch.Tensor  # float (B, H, W)
    frames: list[NormalizationFrame]
    scene_ids: list[str]

    def __len__(self):
        return len(self.scene_ids)

    def to(self, device) -> "Batch":
        return Batch(self.coords.to(device), self.categories.to(device), self.mask.to(device),
                     self.targets, self.seg_masks.to(device), self.frames, self.scene_ids)
