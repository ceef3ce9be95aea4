"""Scenario documents and process settings."""
