"""
Файлы датасета и fused-карт: JSON Lines, первая строка — заголовок с версией формата.
Запись — во временный файл рядом с целевым + os.replace (без обрезанных файлов).
"""
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from apps.geometry.models import FusedScene, Scene
from apps.geometry.serializers import FrameSerializer, MapElementSerializer, SceneSerializer
from crowdmap import settings
from crowdmap.exceptions import CrowdmapError, DatasetFormatError

logger = logging.getLogger(__name__)


@dataclass
class DatasetHeader:
    config_hash: str
    scene_config: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    trips_per_scene: int = 0
    seed: int = 0
    format: str = settings.DATASET_FORMAT
    format_version: int = settings.DATASET_FORMAT_VERSION


def _dumps(record: dict) -> str:
    return json.dumps(record, separators=(",", ":"), ensure_ascii=False)


def _atomic_write(path: Path, lines: Iterable[str]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line)
                fh.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        # не оставляем недописанный временный файл
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def _iter_json_lines(path: Path) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError("Файл не найден", {"file": str(path)})
    with path.open("r", encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield number, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError("Некорректный JSON", {"file": str(path), "record": number,
                                                              "error": exc.msg}) from None


def _check_header(path: Path, number: int, data: dict, expected_format: str, expected_version: int):
    if not isinstance(data, dict) or data.get("format") != expected_format:
        raise DatasetFormatError("Первая запись должна быть заголовком формата",
                                 {"file": str(path), "record": number, "expected": expected_format})
    if data.get("format_version") != expected_version:
        raise DatasetFormatError("Неподдерживаемая версия формата",
                                 {"file": str(path), "record": number,
                                  "version": data.get("format_version")})


# ---------- датасет ----------

def write_dataset(path: Path, header: DatasetHeader, scenes: Iterable[Scene]) -> Path:
    def lines():
        yield _dumps(asdict(header))
        for scene in scenes:
            yield _dumps(SceneSerializer.to_representation(scene))

    return _atomic_write(path, lines())


def iter_dataset(path: Path) -> Iterator[Scene | DatasetHeader]:
    """Потоковое чтение: сначала заголовок, затем сцены по одной."""
    records = _iter_json_lines(path)
    first = next(records, None)
    if first is None:
        raise DatasetFormatError("Пустой файл датасета", {"file": str(path)})
    number, data = first
    _check_header(path, number, data, settings.DATASET_FORMAT, settings.DATASET_FORMAT_VERSION)
    try:
        yield DatasetHeader(**data)
    except TypeError:
        raise DatasetFormatError("Лишние/недостающие поля заголовка", {"file": str(path), "record": number}) from None

    for number, data in records:
        try:
            scene = SceneSerializer.to_internal_value(data)
        except CrowdmapError as exc:
            raise DatasetFormatError(f"Некорректная сцена: {exc.message}",
                                     {"file": str(path), "record": number, **exc.payload}) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError("Некорректная сцена",
                                     {"file": str(path), "record": number, "error": repr(exc)}) from None
        yield scene


def read_dataset(path: Path, split: str | None = None) -> tuple[DatasetHeader, list[Scene]]:
    stream = iter_dataset(path)
    header = next(stream)
    scenes = [s for s in stream if split is None or s.split == split]
    logger.debug("read %d scenes from %s (split=%s)", len(scenes), path, split)
    return header, scenes


# ---------- fused-карта ----------

def write_fused(path: Path, fused: Iterable[FusedScene]) -> Path:
    def lines():
        yield _dumps({"format": settings.FUSED_FORMAT, "format_version": settings.FUSED_FORMAT_VERSION})
        for item in fused:
            yield _dumps({
                "scene_id": item.scene_id,
                "bounds": FrameSerializer.to_representation(item.bounds),
                "elements": [MapElementSerializer.to_representation(e, c) for e, c in item.elements],
            })

    return _atomic_write(path, lines())


def read_fused(path: Path) -> list[FusedScene]:
    records = _iter_json_lines(path)
    first = next(records, None)
    if first is None:
        raise DatasetFormatError("Пустой файл fused-карты", {"file": str(path)})
    _check_header(path, first[0], first[1], settings.FUSED_FORMAT, settings.FUSED_FORMAT_VERSION)

    result = []
    for number, data in records:
        try:
            elements = []
            for item in data["elements"]:
                confidence = float(item.get("confidence", 1.0))
                elements.append((MapElementSerializer.to_internal_value(item), confidence))
            result.append(FusedScene(str(data["scene_id"]), FrameSerializer.to_internal_value(data["bounds"]),
                                     elements))
        except (KeyError, TypeError, ValueError, CrowdmapError) as exc:
            payload = exc.payload if isinstance(exc, CrowdmapError) else {"error": repr(exc)}
            raise DatasetFormatError("Некорректная запись fused-карты",
                                     {"file": str(path), "record": number, **payload}) from None
    return result
