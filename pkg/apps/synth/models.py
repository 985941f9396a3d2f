from dataclasses import asdict, dataclass, fields, replace

from crowdmap.exceptions import ValidationError

# зазор от края кадра, чтобы геометрия после клиппинга не лежала на границе вплотную
FRAME_MARGIN = 0.5


@dataclass(frozen=True)
class SceneConfig:
    """Параметры генератора эталонных сцен (метры / радианы)."""
    frame_size: float = 60.0
    lanes: tuple[int, int] = (2, 5)
    lane_spacing: float = 3.5
    curvature: float = 0.1
    stop_line_prob: float = 0.5
    crosswalk_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lanes", tuple(int(v) for v in self.lanes))
        self.clean()

    def clean(self):
        if self.frame_size <= 0:
            raise ValidationError("frame_size должен быть > 0", {"frame_size": self.frame_size})
        for name in ("stop_line_prob", "crosswalk_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValidationError("Вероятность вне [0, 1]", {name: value})
        lo, hi = self.lanes
        if lo < 1 or hi < lo:
            raise ValidationError("lanes — диапазон (min ≥ 1, max ≥ min)", {"lanes": self.lanes})
        if self.lane_spacing <= 0 or self.curvature < 0:
            raise ValidationError("lane_spacing > 0 и curvature ≥ 0",
                                  {"lane_spacing": self.lane_spacing, "curvature": self.curvature})
        road_width = hi * self.lane_spacing
        if road_width > self.frame_size - 2 * FRAME_MARGIN:
            raise ValidationError(
                "Дорога не помещается в кадр",
                {"road_width": road_width, "frame_size": self.frame_size},
            )

    @property
    def max_gt_elements(self) -> int:
        """Верхняя граница числа эталонных элементов в одной сцене."""
        count = self.lanes[1]
        if self.stop_line_prob > 0:
            count += 2
        if self.crosswalk_prob > 0:
            count += 2
        return count

    def as_dict(self) -> dict:
        data = asdict(self)
        data["lanes"] = list(self.lanes)
        return data


# Пресеты тяжести: normal ≤ rain ≤ night по каждому полю. Значения подобраны так,
# чтобы деградация метрики была измеримой на синтетике.
SEVERITY_PRESETS = {
    "normal": {
        "point_jitter_sigma": 0.15,
        "trip_drift_sigma": 0.3,
        "trip_rotation_sigma": 0.005,
        "element_dropout_prob": 0.05,
        "spurious_element_rate": 0.3,
        "partial_observation_prob": 0.10,
    },
    "rain": {
        "point_jitter_sigma": 0.30,
        "trip_drift_sigma": 0.5,
        "trip_rotation_sigma": 0.010,
        "element_dropout_prob": 0.15,
        "spurious_element_rate": 0.6,
        "partial_observation_prob": 0.20,
    },
    "night": {
        "point_jitter_sigma": 0.45,
        "trip_drift_sigma": 0.7,
        "trip_rotation_sigma": 0.015,
        "element_dropout_prob": 0.25,
        "spurious_element_rate": 1.0,
        "partial_observation_prob": 0.30,
    },
}
SEVERITY_ORDER = ("normal", "rain", "night")


@dataclass(frozen=True)
class NoiseConfig:
    """Модель шумов одного проезда."""
    point_jitter_sigma: float = 0.15
    trip_drift_sigma: float = 0.3
    trip_rotation_sigma: float = 0.005
    element_dropout_prob: float = 0.05
    spurious_element_rate: float = 0.3
    partial_observation_prob: float = 0.10
    severity_preset: str = "normal"

    def __post_init__(self):
        self.clean()

    def clean(self):
        if self.severity_preset not in (*SEVERITY_ORDER, "zero", "custom"):
            raise ValidationError("Неизвестный пресет шума", {"severity_preset": self.severity_preset})
        for f in fields(self):
            if f.name == "severity_preset":
                continue
            value = getattr(self, f.name)
            if value < 0:
                raise ValidationError("Параметры шума не могут быть отрицательными", {f.name: value})
        for name in ("element_dropout_prob", "partial_observation_prob"):
            if getattr(self, name) > 1.0:
                raise ValidationError("Вероятность вне [0, 1]", {name: getattr(self, name)})

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "NoiseConfig":
        if name == "zero":
            return cls.zero(**overrides)
        if name not in SEVERITY_PRESETS:
            raise ValidationError("Неизвестный пресет шума", {"severity_preset": name})
        return cls(**{**SEVERITY_PRESETS[name], **overrides, "severity_preset": name})

    @classmethod
    def zero(cls, **overrides) -> "NoiseConfig":
        base = {f.name: 0.0 for f in fields(cls) if f.name != "severity_preset"}
        return cls(**{**base, **overrides, "severity_preset": "zero"})

    def with_overrides(self, **overrides) -> "NoiseConfig":
        return replace(self, **overrides)

    def as_dict(self) -> dict:
        return asdict(self)
