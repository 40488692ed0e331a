"""
Persist election runs and security tables through an ArtifactRepository.

Every artifact is canonical JSON (one document, or one document per line) so
that the same scenario and seed always produce byte-identical files.
"""

from pydantic import BaseModel

from qvote.infrastructure.repositories import ArtifactRepository
from qvote.services.ledger import chain_to_json_lines
from qvote.services.protocol import ElectionRun
from qvote.utils.security import canonical_bytes

REPORT_NAME = "report.json"
TRACE_NAME = "trace.jsonl"
CHAIN_NAME = "chain.jsonl"
SECURITY_NAME = "security.json"


def model_bytes(model: BaseModel) -> bytes:
    """Canonical JSON document for a pydantic model, newline terminated."""
    return canonical_bytes(model.model_dump(mode="json")) + b"\n"


def _join(prefix: str, name: str) -> str:
    return f"{prefix.rstrip('/')}/{name}" if prefix else name


def store_run(
    repository: ArtifactRepository, run: ElectionRun, prefix: str = ""
) -> dict[str, str]:
    """
    Write report.json, trace.jsonl and chain.jsonl for one run.

    Args:
        repository: Target repository
        run: Election run
        prefix: Sub-directory for the three files (e.g. "attacks/rebind")

    Returns:
        Mapping of artifact name to storage location
    """
    artifacts = {
        REPORT_NAME: model_bytes(run.report),
        TRACE_NAME: run.trace,
        CHAIN_NAME: chain_to_json_lines(run.chain),
    }
    return {
        name: repository.save_artifact(_join(prefix, name), content)
        for name, content in artifacts.items()
    }


def store_model(
    repository: ArtifactRepository, model: BaseModel, name: str = SECURITY_NAME
) -> str:
    return repository.save_artifact(name, model_bytes(model))
