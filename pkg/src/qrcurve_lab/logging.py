import json
import logging
import os

LEVEL_ENV = "QRCURVE_LAB_LOG_LEVEL"


class ContextFilter(logging.Filter):
    def filter(self, record):
        context = getattr(record, "context", None)
        if context is None:
            record.prefix = ""
            record.context_data = ""
        else:
            record.prefix = " :: "
            record.context_data = json.dumps(context, sort_keys=True, default=str)
        return True


formatter = logging.Formatter("%(levelname)s :: %(name)s :: %(message)s%(prefix)s%(context_data)s")
handler = logging.StreamHandler()
handler.setLevel(level=logging.DEBUG)
handler.setFormatter(formatter)

_level = getattr(logging, os.environ.get(LEVEL_ENV, "WARNING").upper(), logging.WARNING)
_loggers = {}


def set_level(level: int):
    global _level
    _level = level
    for logger in _loggers.values():
        logger.setLevel(level=level)


def getLogger(name="default"):
    if name in _loggers:
        return _loggers[name]
    logger = logging.getLogger(name)
    logger.setLevel(level=_level)
    logger.addFilter(ContextFilter())
    logger.addHandler(handler)
    logger.propagate = False
    _loggers[name] = logger
    return logger
