from dataclasses import asdict, dataclass, fields
from pathlib import Path

from crowdmap.exceptions import ValidationError

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    weight_decay: float = 0.01
    batch_size: int = 4
    total_steps: int = 2000
    grad_clip_norm: float = 10.0
    seed: int = 0
    # 0 — выключено
    eval_every: int = 0
    checkpoint_every: int = 0
    log_every: int = 50

    def __post_init__(self):
        self.clean()

    def clean(self):
        if not self.learning_rate > 0:
            raise ValidationError("learning_rate должен быть > 0", {"learning_rate": self.learning_rate})
        if self.weight_decay < 0:
            raise ValidationError("weight_decay не может быть отрицательным", {"weight_decay": self.weight_decay})
        if self.batch_size < 1:
            raise ValidationError("batch_size должен быть ≥ 1", {"batch_size": self.batch_size})
        if self.total_steps < 0:
            raise ValidationError("total_steps не может быть отрицательным", {"total_steps": self.total_steps})
        if not self.grad_clip_norm > 0:
            raise ValidationError("grad_clip_norm должен быть > 0", {"grad_clip_norm": self.grad_clip_norm})
        for name in ("eval_every", "checkpoint_every", "log_every"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} не может быть отрицательным", {name: getattr(self, name)})

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValidationError("Неизвестные поля TrainConfig", {"fields": sorted(unknown)})
        return cls(**data)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    checkpoint: Path
    metrics_log: Path
    step: int
    final_loss: float | None = None
