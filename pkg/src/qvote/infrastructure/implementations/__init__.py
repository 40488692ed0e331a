"""Artifact repository implementations."""
