"""Unit conversion helpers."""
