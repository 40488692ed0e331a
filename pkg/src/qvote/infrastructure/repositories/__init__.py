"""Abstract repository interfaces for infrastructure operations."""

from qvote.infrastructure.repositories.artifact_repository import (
    ArtifactRepository,
)

__all__ = ["ArtifactRepository"]
