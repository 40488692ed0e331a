"""
Infrastructure abstraction layer for run artifacts.

Artifacts (reports, traces, chain exports, security tables) are written through
an ArtifactRepository chosen by InfrastructureFactory:
- local: files under an output directory
- memory: an in-process dict (tests, attack batteries)
"""

from qvote.infrastructure.factory import InfrastructureFactory

__all__ = ["InfrastructureFactory"]
