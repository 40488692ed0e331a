"""Shared helpers: canonical encoding, authentication keys, random streams."""
