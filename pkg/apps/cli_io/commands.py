import click

from apps.cli_io.context import CliContext, dataset_option, load_split, pass_context, pick_scene, split_option
from apps.cli_io.datasets import read_fused
from apps.cli_io.render import RenderStyle, render_scene, write_svg


@click.command("render")
@dataset_option
@split_option
@click.option("--scene-id", default=None)
@click.option("--fused", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Fused-карта для слоя prediction.")
@click.option("--no-trips", is_flag=True)
@click.option("--no-gt", is_flag=True)
@click.option("--size", type=click.IntRange(min=16), default=800, show_default=True)
@pass_context
def render(ctx: CliContext, dataset, split, scene_id, fused, no_trips, no_gt, size):
    """SVG сцены: эталон, проезды (полупрозрачно) и результат fusion."""
    scene = pick_scene(load_split(ctx.dataset_path(dataset), split), scene_id)
    fused_scene = None
    if fused:
        fused_scene = next((f for f in read_fused(fused) if f.scene_id == scene.scene_id), None)
    document = render_scene(scene, fused_scene, RenderStyle(size=size), show_gt=not no_gt, show_trips=not no_trips)
    click.echo(str(write_svg(ctx.path(f"{scene.scene_id}.svg"), document)))


commands = [render]
