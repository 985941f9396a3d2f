from dataclasses import replace

import click

from apps.cli_io.context import (CliContext, checkpoint_option, dataset_option, load_split, pass_context,
                                 split_option)
from apps.cli_io.datasets import read_dataset, read_fused
from apps.metrics.services import format_report, gt_passthrough, report_to_kv
from apps.trainer.services import evaluate_checkpoint, evaluate_predictions
from apps.trainer.tasks import train as run_training

REPORT_NAME = "report.txt"
KV_NAME = "metrics.kv"


@click.command("train")
@dataset_option
@click.option("--steps", type=click.IntRange(min=0), default=None, help="Переопределить train.total_steps.")
@click.option("--resume", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Продолжить с чекпоинта.")
@pass_context
def train(ctx: CliContext, dataset, steps, resume):
    """Обучить модель на train-части датасета; чекпоинт и metrics.jsonl — в OUT."""
    _, scenes = read_dataset(ctx.dataset_path(dataset))
    train_scenes = [s for s in scenes if s.split == "train"] or scenes
    val_scenes = [s for s in scenes if s.split == "val"]
    train_config = ctx.config.train if steps is None else replace(ctx.config.train, total_steps=steps)
    result = run_training(train_scenes, ctx.config.model, ctx.config.loss, train_config, ctx.out_dir,
                          val_scenes=val_scenes, resume_from=resume,
                          score_threshold=ctx.config.eval.score_threshold, thresholds=ctx.config.eval.thresholds)
    click.echo(str(result.checkpoint))


@click.command("eval")
@dataset_option
@checkpoint_option
@split_option
@click.option("--predictions", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Оценить готовую fused-карту вместо чекпоинта.")
@click.option("--gt-passthrough", "passthrough", is_flag=True, help="Эталон как предсказание (проверка harness).")
@pass_context
def evaluate(ctx: CliContext, dataset, checkpoint, split, predictions, passthrough):
    """Chamfer-AP / mAP; пишет OUT/report.txt и OUT/metrics.kv."""
    scenes = load_split(ctx.dataset_path(dataset), split)
    thresholds = ctx.config.eval.thresholds
    if passthrough:
        report = evaluate_predictions([gt_passthrough(s) for s in scenes], scenes, thresholds)
    elif predictions:
        ids = {s.scene_id for s in scenes}
        fused = [f for f in read_fused(predictions) if f.scene_id in ids]
        report = evaluate_predictions(fused, scenes, thresholds)
    else:
        report = evaluate_checkpoint(ctx.checkpoint_path(checkpoint), scenes, ctx.config.eval.score_threshold,
                                     thresholds)

    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    text = format_report(report)
    ctx.path(REPORT_NAME).write_text(text, encoding="utf-8")
    ctx.path(KV_NAME).write_text(report_to_kv(report), encoding="utf-8")
    click.echo(text, nl=False)


commands = [train, evaluate]
