"""
Process configuration and environment variables.

This module unifies configuration using pydantic-settings.
Variables can come from:
1. .env file
2. System environment variables (have priority)
3. Default values

Naming convention:
- In Python code: snake_case (log_format)
- In .env or ENV vars: QVOTE_ prefix + UPPER_CASE (QVOTE_LOG_FORMAT)

Per-election parameters (voters, miners, seed...) are not settings; they live in
ScenarioConfig (see qvote.models.config).
"""

from functools import lru_cache
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

LogVerbosity = Literal["quiet", "info", "debug"]


class Settings(BaseSettings):
    """
    Unified simulator configuration.

    All variables can be defined in:
    - .env file: QVOTE_VARIABLE_NAME=value
    - Environment variables: export QVOTE_VARIABLE_NAME=value

    Example:
        # In .env or as environment variable:
        QVOTE_LOG=debug
        QVOTE_LOG_FORMAT=json
    """

    model_config = SettingsConfigDict(
        env_prefix="QVOTE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # ============================================================================
    # PROJECT SETTINGS
    # ============================================================================
    project_name: str = Field(default="qvote", description="Project name")

    # ============================================================================
    # LOGGING SETTINGS
    # ============================================================================
    log: LogVerbosity = Field(
        default="info",
        description="Log verbosity: quiet (warnings only), info or debug",
    )
    log_format: Literal["human", "json"] = Field(
        default="human",
        description=(
            "Log format: 'json' for structured JSON logs, "
            "or 'human' for human-readable text"
        ),
    )
    logger_name: str = Field(default="qvote", description="Logger name")
    logger_enqueue: bool = Field(
        default=False, description="Enqueue logs using multiprocessing"
    )

    # ============================================================================
    # INFRASTRUCTURE SETTINGS (run artifacts)
    # ============================================================================
    infrastructure_provider: Literal["local", "memory"] = Field(
        default="local",
        description="Where run artifacts are written (local files or memory)",
    )
    output_dir: str = Field(
        default="./runs", description="Default output directory for run artifacts"
    )

    # ============================================================================
    # SIMULATION SETTINGS
    # ============================================================================
    default_tick_limit: int = Field(
        default=1000,
        ge=1,
        description="Tick limit used when a scenario does not set one",
    )
    stat_trials: int = Field(
        default=10_000,
        ge=1,
        description="Monte-Carlo trials used by the statistical attack batteries",
    )
    fairness_trials: int = Field(
        default=1_000,
        ge=1,
        description="Simulated elections behind the early-opener fairness verdict",
    )
    audit_literal_limit: int = Field(
        default=100_000,
        ge=1,
        description=(
            "Largest mask-matrix count the anonymity audit enumerates literally"
        ),
    )
    sampled_audit_samples: int = Field(
        default=2000,
        ge=10,
        description="Samples per vote vector in the sampled anonymity audit",
    )

    # ============================================================================
    # HELPER METHODS
    # ============================================================================

    def get_log_level(self) -> str:
        """
        Map the QVOTE_LOG verbosity onto a loguru level name.

        Returns:
            str: WARNING for quiet, INFO for info, DEBUG for debug.
        """
        return {"quiet": "WARNING", "info": "INFO", "debug": "DEBUG"}[self.log]


# ============================================================================
# SINGLETON PATTERN - Global settings instance
# ============================================================================


@lru_cache
def get_settings() -> Settings:
    """
    Get simulator settings (LRU cached).

    This function is cached, so the .env file is only read once.
    To refresh the configuration, clear the cache:
        get_settings.cache_clear()

    Returns:
        Settings: Simulator configuration instance.
    """
    return Settings()


settings = get_settings()
