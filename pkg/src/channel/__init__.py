"""Fading models and rate regions."""
