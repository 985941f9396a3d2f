"""Общие исключения проекта."""


class CrowdmapError(Exception):
    """База для всех ожидаемых ошибок; payload — готовая диагностика для CLI."""

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.message = message
        self.payload = payload or {}

    def __str__(self):
        if not self.payload:
            return self.message
        details = ", ".join(f"{k}={v}" for k, v in self.payload.items())
        return f"{self.message} ({details})"


class ValidationError(CrowdmapError):
    """Нарушен инвариант доменного типа (см. clean())."""


class ConfigError(CrowdmapError):
    """RunConfig не прошёл схему или диапазоны."""


class DatasetFormatError(CrowdmapError):
    """Битый файл датасета / fused-карты: указываем файл и номер записи."""


class MatchingError(CrowdmapError):
    pass


class CapacityError(CrowdmapError):
    """Сцена не помещается в N_e_max / N_v_max модели."""


class EmptyPointSetError(CrowdmapError):
    pass


class TrainingDivergedError(CrowdmapError):
    """Нечисловой loss; в payload путь к дампу батча."""


class CheckpointError(CrowdmapError):
    pass
