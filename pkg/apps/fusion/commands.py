import click

from apps.cli_io.context import (FUSED_NAME, CliContext, checkpoint_option, dataset_option, load_split,
                                 pass_context, pick_scene, split_option)
from apps.cli_io.datasets import write_fused
from apps.fusion.services import load_checkpoint
from apps.trainer.services import predict_scenes


@click.command("infer")
@dataset_option
@checkpoint_option
@split_option
@click.option("--scene-id", default=None, help="Сцена (по умолчанию — первая в split).")
@click.option("--all-scenes", is_flag=True, help="Fusion для всех сцен split.")
@click.option("--score-threshold", type=click.FloatRange(0.0, 1.0), default=None)
@pass_context
def infer(ctx: CliContext, dataset, checkpoint, split, scene_id, all_scenes, score_threshold):
    """Слить проезды сцены в одну карту; результат — OUT/fused.jsonl."""
    scenes = load_split(ctx.dataset_path(dataset), split)
    if not all_scenes:
        scenes = [pick_scene(scenes, scene_id)]
    model, _ = load_checkpoint(ctx.checkpoint_path(checkpoint))
    threshold = ctx.config.eval.score_threshold if score_threshold is None else score_threshold
    fused = predict_scenes(model, scenes, threshold)
    path = write_fused(ctx.path(FUSED_NAME), fused)
    click.echo(str(path))


commands = [infer]
