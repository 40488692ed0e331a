"""
Abstract interface for run artifact storage.

Artifacts are addressed by a relative name such as "report.json" or
"attacks/rebind/trace.jsonl". Content is opaque bytes; callers hand in
canonical JSON so that equal runs store equal bytes.
"""

from abc import ABC, abstractmethod


class ArtifactRepository(ABC):
    """
    Abstract interface for artifact storage operations.

    Implementations store artifacts by name. Runs only ever write; reading
    back is done by the consumers of the output directory.
    """

    @abstractmethod
    def save_artifact(self, name: str, content: bytes) -> str:
        """
        Store an artifact, replacing any previous content under the same name.

        Args:
            name: Relative artifact name (may contain "/")
            content: Artifact bytes

        Returns:
            Storage location identifier (path or memory key)

        Raises:
            ValueError: If the name is absolute or escapes the repository
            OSError: If the underlying storage fails
        """

    @staticmethod
    def check_name(name: str) -> str:
        """Reject empty, absolute and parent-relative names."""
        parts = name.replace("\\", "/").split("/")
        if not name or name.startswith("/") or any(p in ("", "..") for p in parts):
            raise ValueError(f"invalid artifact name: {name!r}")
        return "/".join(parts)
