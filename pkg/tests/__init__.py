"""Skillgeo test suite."""
