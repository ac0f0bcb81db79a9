"""Tests for spiralrecon."""
