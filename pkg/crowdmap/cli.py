"""
Корневая группа команд. Каждое приложение отдаёт свой список `commands`,
здесь они подключаются к общей группе (как include() в urls проекта).
"""
import logging
import logging.config
from pathlib import Path

import click
import torch

from apps.cli_io import commands as cli_io_commands
from apps.cli_io.context import CliContext
from apps.cli_io.run_config import RunConfig, load_run_config
from apps.experiments import commands as experiments_commands
from apps.fusion import commands as fusion_commands
from apps.matcher import commands as matcher_commands
from apps.synth import commands as synth_commands
from apps.trainer import commands as trainer_commands
from crowdmap import settings
from crowdmap.exceptions import CrowdmapError

logger = logging.getLogger(__name__)

EXIT_DOMAIN_ERROR = 2


class CommandError(click.ClickException):
    exit_code = EXIT_DOMAIN_ERROR


class CrowdmapGroup(click.Group):
    """Ожидаемые ошибки домена -> одна строка в stderr и код 2."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except CrowdmapError as exc:
            logger.debug("command failed", exc_info=True)
            raise CommandError(str(exc)) from exc


@click.group(cls=CrowdmapGroup)
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="RunConfig (YAML). Без него — значения по умолчанию.")
@click.option("--seed", type=int, default=0, show_default=True, help="Единственный источник случайности.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Каталог результатов (по умолчанию CROWDMAP_DEFAULT_OUT).")
@click.pass_context
def cli(ctx, config_path, seed, out_dir):
    """crowdmap: fusion краудсорсинговых векторных карт."""
    logging.config.dictConfig(settings.LOGGING)
    torch.set_num_threads(settings.TORCH_THREADS)
    try:
        config = load_run_config(config_path) if config_path else RunConfig()
    except CrowdmapError as exc:
        raise CommandError(str(exc)) from exc
    ctx.obj = CliContext(config.with_seed(seed), seed, Path(out_dir) if out_dir else settings.DEFAULT_OUT_DIR)


for module in (synth_commands, trainer_commands, fusion_commands, cli_io_commands, matcher_commands,
               experiments_commands):
    for command in module.commands:
        cli.add_command(command)


def main():
    cli(prog_name="manage.py")
