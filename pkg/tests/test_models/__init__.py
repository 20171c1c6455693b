"""Test package for database models."""
