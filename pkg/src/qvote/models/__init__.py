"""Pydantic models: scenarios, ledger records, wire messages and reports."""
