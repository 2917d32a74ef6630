"""Exact, enumeration-based analysis of strategy-proof assignment and voting rules."""

from __future__ import annotations

__version__ = "0.1.0"
