from functools import lru_cache
from typing import Optional

from pydantic import SecretStr
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Settings read from SLR_SCREEN_* environment variables (or a local .env file)."""

    model_config = SettingsConfigDict(env_prefix="SLR_SCREEN_", env_file=".env", extra="ignore")

    api_key: Optional[SecretStr] = None
    log_level: str = "INFO"


@lru_cache()
def get_settings() -> Settings:
    return Settings()
