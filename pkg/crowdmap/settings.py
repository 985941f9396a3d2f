import os
from pathlib import Path

from decouple import config

# Корень проекта: BASE_DIR / 'configs'
BASE_DIR = Path(__file__).resolve().parent.parent

# --- процесс -----------------------------------------------------------------

LOG_LEVEL = config("CROWDMAP_LOG_LEVEL", default="INFO").upper()

# JSON-строки в логах удобны в контейнере; локально — обычный формат
LOG_JSON = os.environ.get("CROWDMAP_LOG_JSON", "False").lower() in ("true", "1", "yes")

TORCH_THREADS = config("CROWDMAP_TORCH_THREADS", default=1, cast=int)

DEFAULT_OUT_DIR = Path(config("CROWDMAP_DEFAULT_OUT", default="runs"))

CONFIGS_DIR = BASE_DIR / "configs"

# --- форматы файлов ------------------------------------------------------------

DATASET_FORMAT = "crowdmap-dataset"
DATASET_FORMAT_VERSION = 1

FUSED_FORMAT = "crowdmap-fused"
FUSED_FORMAT_VERSION = 1

CHECKPOINT_FORMAT_VERSION = 1

RUN_CONFIG_VERSION = 1

# --- оценка --------------------------------------------------------------------

# окно оценки: ±30 м от центра сцены
EVAL_HALF_WINDOW = 30.0
EVAL_THRESHOLDS = (0.5, 1.0, 1.5)
EVAL_POINTS = 100
SCORE_THRESHOLD = 0.4

# --- логирование ----------------------------------------------------------------

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
            "datefmt": "%Y-%m-%d %H:%M:%S",
        },
        "json": {
            "()": "crowdmap.log.JsonFormatter",
            "datefmt": "%Y-%m-%dT%H:%M:%S",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "json" if LOG_JSON else "plain",
            "stream": "ext://sys.stderr",
        },
    },
    "loggers": {
        "apps": {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False},
        "crowdmap": {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False},
    },
}
