from dataclasses import asdict, dataclass, field
import math

import torch

from apps.losses.focal import FOCAL_ALPHA, FOCAL_GAMMA
from crowdmap.exceptions import ValidationError


@dataclass(frozen=True)
class LossWeights:
    alpha_cls: float = 2.0
    alpha_p2p: float = 5.0
    alpha_dir: float = 0.005
    alpha_seg: float = 1.0
    focal_alpha: float = FOCAL_ALPHA
    focal_gamma: float = FOCAL_GAMMA

    def __post_init__(self):
        self.clean()

    def clean(self):
        values = asdict(self)
        bad = {k: v for k, v in values.items() if not math.isfinite(v) or v < 0}
        if bad:
            raise ValidationError("Веса loss должны быть конечными и неотрицательными", bad)
        if not self.focal_alpha < 1.0:
            raise ValidationError("focal_alpha должно быть < 1", {"focal_alpha": self.focal_alpha})

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossBreakdown:
    """Слагаемые одного слоя декодера; total уже взвешен (и включает aux для итоговой разбивки)."""
    cls: torch.Tensor
    p2p: torch.Tensor
    dir: torch.Tensor
    seg: torch.Tensor
    total: torch.Tensor
    aux: list["LossBreakdown"] = field(default_factory=list)

    def as_floats(self) -> dict:
        return {
            "cls": float(self.cls), "p2p": float(self.p2p), "dir": float(self.dir),
            "seg": float(self.seg), "total": float(self.total),
        }
