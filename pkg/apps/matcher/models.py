from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from apps.geometry.models import MapElement, NormalizationFrame
from apps.geometry.services import normalize, resample_uniform


@dataclass
class InstanceAssignment:
    """Пары (gt_index, prediction_index) оптимального назначения."""
    pairs: list[tuple[int, int]] = field(default_factory=list)
    total_cost: float = 0.0

    @property
    def gt_indices(self) -> list[int]:
        return [g for g, _ in self.pairs]

    @property
    def prediction_indices(self) -> list[int]:
        return [p for _, p in self.pairs]


@dataclass
class PointAssignment:
    """γ: индекс точки предсказания j -> индекс точки эталона permutation[j]."""
    permutation: np.ndarray
    cost: float


class InstancePredictions(NamedTuple):
    """Предсказания одного элемента батча (numpy или torch)."""
    class_logits: object  # (N_inst, K+1)
    points: object  # (N_inst, N_p, 2), нормализованные


@dataclass
class Targets:
    """Эталон одной сцены в нормализованных координатах, N_p точек на элемент."""
    labels: np.ndarray
    points: np.ndarray
    closed: np.ndarray

    def __len__(self):
        return len(self.labels)

    @classmethod
    def from_elements(cls, gt: list[MapElement], frame: NormalizationFrame, n_points: int) -> "Targets":
        if not gt:
            return cls(np.zeros(0, dtype=np.int64), np.zeros((0, n_points, 2)), np.zeros(0, dtype=bool))
        points = [normalize(resample_uniform(e, n_points).points, frame) for e in gt]
        return cls(
            labels=np.asarray([int(e.category) for e in gt], dtype=np.int64),
            points=np.stack(points),
            closed=np.asarray([e.closed for e in gt], dtype=bool),
        )
