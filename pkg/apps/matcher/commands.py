import click
import torch

from apps.cli_io.context import (CliContext, checkpoint_option, dataset_option, load_split, pass_context,
                                 pick_scene, split_option)
from apps.fusion.services import build_model, collate, crop_scene, forward, load_checkpoint
from apps.matcher.services import allowed_permutations, match_targets


def describe_permutation(permutation, closed: bool) -> str:
    """identity / reversed / shift+s / reversed+s — для отладочного вывода."""
    perms = allowed_permutations(closed, len(permutation))
    index = next(i for i, p in enumerate(perms) if (p == permutation).all())
    n = len(permutation)
    if not closed:
        return "identity" if index == 0 else "reversed"
    if index < n:
        return "identity" if index == 0 else f"shift+{index}"
    return f"reversed+{index - n}"


@click.command("match-debug")
@dataset_option
@checkpoint_option
@split_option
@click.option("--scene-id", default=None)
@pass_context
def match_debug(ctx: CliContext, dataset, checkpoint, split, scene_id):
    """Показать иерархическое сопоставление предсказаний модели с эталоном одной сцены."""
    scene = pick_scene(load_split(ctx.dataset_path(dataset), split), scene_id)
    path = ctx.checkpoint_path(checkpoint)
    if path.exists():
        model, _ = load_checkpoint(path)
    else:
        # без чекпоинта — инициализация по --seed
        model = build_model(ctx.config.model, seed=ctx.seed)
    model.eval()
    scene = crop_scene(scene, model.config.max_trips, model.config.max_elements)
    batch = collate([scene], model.config)
    with torch.no_grad():
        output = forward(model, batch)
    weights = ctx.config.loss
    assignment, point_assignments = match_targets(output.item(0), batch.targets[0],
                                                  weights.focal_alpha, weights.focal_gamma)

    click.echo(f"scene {scene.scene_id}: gt={scene.n_gt} predictions={output.class_logits.shape[1]} "
               f"total_cost={assignment.total_cost:.6f}")
    for (g, p), point in zip(assignment.pairs, point_assignments):
        element = scene.gt_elements[g]
        order = describe_permutation(point.permutation, element.closed)
        click.echo(f"gt {g:3d} {element.category.slug:<13} -> pred {p:3d}  points={order:<12} "
                   f"p2p={point.cost:.6f}")


commands = [match_debug]
