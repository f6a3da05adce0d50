"""
Process settings using Pydantic Settings

Handles environment variables that tune how the pipeline runs (logging,
worker pool, default config path). What the pipeline computes lives in the
YAML pipeline configuration instead.
"""

from typing import Literal, Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process settings loaded from environment variables"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    # Logging Configuration
    log_level: str = Field(default="INFO", alias="LOG_LEVEL", description="Logging level")
    log_format: Literal["text", "json"] = Field(default="text", alias="LOG_FORMAT", description="Log format (json or text)")
    log_file: Optional[str] = Field(default=None, alias="LOG_FILE", description="Log file path")
    log_max_bytes: int = Field(default=10 * 1024 * 1024, alias="LOG_MAX_BYTES", description="Maximum log file size")
    log_backup_count: int = Field(default=5, alias="LOG_BACKUP_COUNT", description="Number of backup log files to keep")

    # Pipeline Execution
    workers: int = Field(default=4, ge=1, alias="PIPELINE_WORKERS", description="Bounded worker pool size")
    config_file: str = Field(default="./config/pipeline.yml", alias="PIPELINE_CONFIG", description="Default pipeline configuration file")


# Global settings instance
settings = Settings()
