import click

from apps.cli_io.context import CliContext, pass_context
from apps.experiments.services import EXPERIMENTS


def _seeds(value: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in value.split(",") if part.strip())
    except ValueError:
        raise click.BadParameter("ожидается список целых через запятую") from None


@click.command("experiment")
@click.argument("name", type=click.Choice(sorted(EXPERIMENTS)))
@click.option("--seeds", default="0,1,2", show_default=True, help="Сиды через запятую.")
@pass_context
def experiment(ctx: CliContext, name, seeds):
    """Трендовый эксперимент (fusion / severity / ablation); таблица -> OUT/experiment-NAME.txt."""
    table = EXPERIMENTS[name](ctx.config, seeds=_seeds(seeds), work_dir=ctx.path(f"experiment-{name}"))
    text = table.format()
    ctx.out_dir.mkdir(parents=True, exist_ok=True)
    ctx.path(f"experiment-{name}.txt").write_text(text, encoding="utf-8")
    click.echo(text, nl=False)


commands = [experiment]
