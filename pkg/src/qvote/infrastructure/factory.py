"""
Infrastructure factory for provider selection.

Selects the artifact repository implementation based on configuration:
- local: files under an output directory
- memory: in-process dict

Usage:
    from qvote.infrastructure import InfrastructureFactory
    from qvote.config import get_settings

    # Option 1: From settings
    factory = InfrastructureFactory.from_settings(get_settings())

    # Option 2: Manual configuration
    factory = InfrastructureFactory(provider="memory")

    repository = factory.get_artifact_repository("runs/honest")
"""

from pathlib import Path
from typing import TYPE_CHECKING, Literal

from loguru import logger

from qvote.infrastructure.repositories import ArtifactRepository

if TYPE_CHECKING:
    from qvote.config import Settings

InfrastructureProvider = Literal["local", "memory"]


class InfrastructureFactory:
    """Factory for creating artifact repository instances."""

    def __init__(self, provider: InfrastructureProvider | None = None, **config):
        """
        Initialize infrastructure factory.

        Args:
            provider: "local" or "memory" (defaults to "local")
            **config: Provider-specific options (output_dir for local)
        """
        self.provider = provider or "local"
        self.config = config
        logger.debug(f"Initialized InfrastructureFactory: {self.provider}")

    @classmethod
    def from_settings(cls, settings: "Settings") -> "InfrastructureFactory":
        """
        Create factory from Settings object.

        Args:
            settings: Simulator settings from config.py

        Returns:
            InfrastructureFactory configured from settings
        """
        return cls(
            provider=settings.infrastructure_provider,
            output_dir=settings.output_dir,
        )

    def get_artifact_repository(
        self, base_dir: str | Path | None = None
    ) -> ArtifactRepository:
        """
        Get artifact repository for configured provider.

        Args:
            base_dir: Output directory overriding the configured one

        Returns:
            ArtifactRepository implementation

        Raises:
            ValueError: If provider is not supported
        """
        if self.provider == "local":
            from qvote.infrastructure.implementations.local import (
                LocalArtifactRepository,
            )

            target = base_dir or self.config.get("output_dir", "./runs")
            return LocalArtifactRepository(base_dir=target)

        elif self.provider == "memory":
            from qvote.infrastructure.implementations.memory import (
                MemoryArtifactRepository,
            )

            prefix = f"memory://{base_dir}/" if base_dir else "memory://"
            return MemoryArtifactRepository(prefix=prefix)

        else:
            raise ValueError(f"Unsupported provider: {self.provider}")
