import numpy as np
import pytest
import torch

from apps.fusion.models import LayerOutput, ModelOutput
from apps.geometry.models import BACKGROUND, ElementCategory, MapElement, NormalizationFrame
from apps.geometry.services import rasterize
from apps.matcher.models import Targets

N_POINTS = 5
SEG = 8


@pytest.fixture
def frame():
    return NormalizationFrame.square(60.0)


@pytest.fixture
def gt_elements():
    return [
        MapElement(ElementCategory.LANE_DIVIDER, [(5, 5), (5, 50), (8, 55)]),
        MapElement(ElementCategory.STOP_LINE, [(2, 30), (14, 30)]),
        MapElement(ElementCategory.CROSSWALK, [(2, 32), (14, 32), (14, 35), (2, 35)], closed=True),
    ]


@pytest.fixture
def targets(gt_elements, frame):
    return Targets.from_elements(gt_elements, frame, N_POINTS)


@pytest.fixture
def gt_mask(gt_elements, frame):
    return torch.as_tensor(rasterize(gt_elements, frame, SEG, SEG, 4.0), dtype=torch.float64)


def make_output(class_logits, points, seg_logits, has_seg=True) -> ModelOutput:
    final = LayerOutput(class_logits, points)
    return ModelOutput(class_logits, points, seg_logits, [final], has_seg=has_seg)


@pytest.fixture
def perfect_output(targets, gt_mask):
    """Экземпляры 0..2 точно повторяют эталон, остальные — уверенный фон; seg насыщен."""
    n_inst = 6
    logits = torch.zeros(1, n_inst, 4, dtype=torch.float64)
    logits[0, :, BACKGROUND] = 40.0
    points = torch.full((1, n_inst, N_POINTS, 2), 0.5, dtype=torch.float64)
    for i, label in enumerate(targets.labels):
        logits[0, i] = 0.0
        logits[0, i, int(label)] = 40.0
        points[0, i] = torch.as_tensor(targets.points[i])
    seg = (gt_mask * 2 - 1).unsqueeze(0) * 60.0
    return make_output(logits, points, seg)


@pytest.fixture
def rng():
    return np.random.default_rng(99)
