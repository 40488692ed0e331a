"""
Local file-based artifact repository implementation.

Stores artifacts in a directory structure:
    {base_dir}/
        report.json
        trace.jsonl
        chain.jsonl
        attacks/{role}/...
"""

from pathlib import Path

from loguru import logger

from qvote.infrastructure.repositories.artifact_repository import (
    ArtifactRepository,
)


class LocalArtifactRepository(ArtifactRepository):
    """File-based artifact storage under a base directory."""

    def __init__(self, base_dir: str | Path = "./runs"):
        """
        Initialize local artifact repository.

        Args:
            base_dir: Output directory (created on first write)
        """
        self.base_dir = Path(base_dir)
        logger.debug(f"Initialized LocalArtifactRepository at {self.base_dir}")

    def _file_path(self, name: str) -> Path:
        return self.base_dir / self.check_name(name)

    def save_artifact(self, name: str, content: bytes) -> str:
        file_path = self._file_path(name)
        file_path.parent.mkdir(parents=True, exist_ok=True)
        file_path.write_bytes(content)
        logger.info(f"Wrote {file_path} ({len(content)} bytes)")
        return str(file_path)
