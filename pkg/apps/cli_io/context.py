from dataclasses import dataclass
from pathlib import Path

import click

from apps.cli_io.datasets import read_dataset
from apps.cli_io.run_config import RunConfig
from apps.geometry.models import Scene
from crowdmap.exceptions import ValidationError

DATASET_NAME = "dataset.jsonl"
CHECKPOINT_NAME = "checkpoint.pt"
FUSED_NAME = "fused.jsonl"


@dataclass
class CliContext:
    """Общие флаги корневой группы: --config, --seed, --out."""
    config: RunConfig
    seed: int
    out_dir: Path

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def dataset_path(self, value) -> Path:
        return Path(value) if value else self.path(DATASET_NAME)

    def checkpoint_path(self, value) -> Path:
        return Path(value) if value else self.path(CHECKPOINT_NAME)


pass_context = click.make_pass_decorator(CliContext)


def load_split(path: Path, split: str) -> list[Scene]:
    """split: train / val / all; пустая выборка — ошибка."""
    _, scenes = read_dataset(path, None if split == "all" else split)
    if not scenes:
        raise ValidationError("В датасете нет сцен для выбранного split", {"file": str(path), "split": split})
    return scenes


def pick_scene(scenes: list[Scene], scene_id: str | None) -> Scene:
    if scene_id is None:
        return scenes[0]
    for scene in scenes:
        if scene.scene_id == scene_id:
            return scene
    raise ValidationError("Сцена не найдена", {"scene_id": scene_id})


split_option = click.option("--split", type=click.Choice(["train", "val", "all"]), default="val", show_default=True)
dataset_option = click.option("--dataset", "dataset", type=click.Path(dir_okay=False), default=None,
                              help="Файл датасета (по умолчанию OUT/dataset.jsonl).")
checkpoint_option = click.option("--checkpoint", "checkpoint", type=click.Path(dir_okay=False), default=None,
                                 help="Чекпоинт (по умолчанию OUT/checkpoint.pt).")
