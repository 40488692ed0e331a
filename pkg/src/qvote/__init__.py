"""
qvote.

Deterministic simulator for self-tallying voting on a quantum blockchain.
"""

__version__ = "0.3.0"
