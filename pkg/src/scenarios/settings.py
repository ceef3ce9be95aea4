"""Process-level settings read from the environment."""

import logging
from functools import lru_cache
from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.logging import RichHandler


class Settings(BaseSettings):
    """Settings with the ``SWIPT_`` prefix, e.g. ``SWIPT_LOG_LEVEL=DEBUG``."""

    model_config = SettingsConfigDict(env_prefix="SWIPT_", env_file=".env", extra="ignore")

    log_level: str = Field("INFO", description="Root log level")
    log_format: str = Field("%(message)s", description="Log record format")
    output_dir: Path = Field(Path("./runs"), description="Default artifact directory")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached settings instance."""
    return Settings()


def configure_logging(settings: Settings | None = None) -> None:
    """Send log records through a rich console handler."""
    settings = settings or get_settings()
    logging.basicConfig(
        level=settings.log_level.upper(),
        format=settings.log_format,
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=True, show_path=False)],
        force=True,
    )
