import json
import logging


class JsonFormatter(logging.Formatter):
    """Одна запись — одна JSON-строка; сообщение и трейсбек экранируются json.dumps."""

    def format(self, record: logging.LogRecord) -> str:
        data = {
            "ts": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
        }
        if record.exc_info:
            data["exc"] = self.formatException(record.exc_info)
        return json.dumps(data, ensure_ascii=False)
