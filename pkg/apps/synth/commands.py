import click

from apps.cli_io.context import CliContext, pass_context
from apps.synth.tasks import build_dataset


@click.command("synth")
@click.option("--scenes", "scene_count", type=click.IntRange(min=0), default=None,
              help="Число сцен (по умолчанию dataset.scene_count).")
@click.option("--trips", "trips_per_scene", type=click.IntRange(min=1), default=None)
@click.option("--workers", type=click.IntRange(min=1), default=None)
@pass_context
def synth(ctx: CliContext, scene_count, trips_per_scene, workers):
    """Сгенерировать синтетический датасет в OUT/dataset.jsonl."""
    dataset = ctx.config.dataset
    path = build_dataset(
        scene_count if scene_count is not None else dataset.scene_count,
        ctx.config.scene,
        ctx.config.noise,
        trips_per_scene or dataset.trips_per_scene,
        ctx.seed,
        ctx.dataset_path(None),
        val_fraction=dataset.val_fraction,
        workers=workers or dataset.workers,
    )
    click.echo(str(path))


commands = [synth]
