"""In-memory artifact repository, used by tests and attack batteries."""

from loguru import logger

from qvote.infrastructure.repositories.artifact_repository import (
    ArtifactRepository,
)


class MemoryArtifactRepository(ArtifactRepository):
    def __init__(self, prefix: str = "memory://"):
        self.prefix = prefix
        self.artifacts: dict[str, bytes] = {}

    def save_artifact(self, name: str, content: bytes) -> str:
        key = self.check_name(name)
        self.artifacts[key] = bytes(content)
        logger.debug(f"Stored {key} in memory ({len(content)} bytes)")
        return f"{self.prefix}{key}"
