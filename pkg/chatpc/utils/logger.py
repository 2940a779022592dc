import logging
import os
from typing import Optional, Set

from decouple import Config, RepositoryEmpty, RepositoryEnv, undefined
from rich.console import Console
from rich.logging import RichHandler


def default_config_path() -> str:
    """Locate the .chatpc file: $CHATPC_CONFIG > venv config dir > home"""
    if os.environ.get("CHATPC_CONFIG"):
        return os.environ["CHATPC_CONFIG"]
    if "VIRTUAL_ENV" in os.environ:
        return os.path.join(os.environ["VIRTUAL_ENV"], "config", ".chatpc")
    return os.path.expanduser("~/.chatpc")


class LayeredConfig:
    """Callable config with priority: .chatpc file > environment > defaults.

    decouple's own Config consults os.environ before the repository, so the
    file repository is checked here first and the environment second.
    """

    def __init__(self, path: Optional[str] = None):
        self.path = path
        self.repository = (
            RepositoryEnv(path) if path and os.path.isfile(path) else None
        )
        self.environment = Config(RepositoryEmpty())

    @property
    def source(self) -> str:
        if self.repository is not None:
            return self.path
        return "environment"

    def __call__(self, option: str, default=undefined, cast=undefined):
        if self.repository is not None and option in self.repository.data:
            value = self.repository.data[option]
            if cast is undefined:
                return value
            if cast is bool:
                return self.environment._cast_boolean(value)
            return cast(value)
        return self.environment(option, default=default, cast=cast)


config = LayeredConfig(default_config_path())

_registered: Set[str] = set()


class Logger:
    """Class Config For Logger"""

    def __init__(
        self,
        logger_name: str,
        log_level: Optional[str] = None,
    ):
        self.logger = logging.getLogger(logger_name)
        self.logger.setLevel(
            log_level or config("LOG_LEVEL", default="WARNING").upper()
        )
        self.logger.propagate = False

        # console handler
        if not self.logger.handlers:
            handler = RichHandler(
                console=Console(stderr=True),
                show_path=False,
                rich_tracebacks=False,
            )
            handler.setFormatter(logging.Formatter("(%(name)s)  %(message)s"))
            self.logger.addHandler(handler)

        _registered.add(logger_name)

    def get_logger(self):
        return self.logger


def set_log_level(level: str) -> None:
    """Apply a level to every logger created through Logger"""
    for name in _registered:
        logging.getLogger(name).setLevel(level)
