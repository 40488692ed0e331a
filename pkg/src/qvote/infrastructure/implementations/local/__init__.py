"""Local file-based infrastructure implementations."""

from qvote.infrastructure.implementations.local.artifact_repository import (
    LocalArtifactRepository,
)

__all__ = ["LocalArtifactRepository"]
