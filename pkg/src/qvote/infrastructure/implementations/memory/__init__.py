"""In-memory infrastructure implementations."""

from qvote.infrastructure.implementations.memory.artifact_repository import (
    MemoryArtifactRepository,
)

__all__ = ["MemoryArtifactRepository"]
